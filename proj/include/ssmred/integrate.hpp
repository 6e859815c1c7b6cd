#pragma once

#include <functional>

#include "ssmred/model.hpp"
#include "ssmred/types.hpp"

namespace ssmred {

struct IntegrationError : std::runtime_error {
    double t_fail;
    IntegrationError(const std::string& msg, double t)
        : std::runtime_error(msg), t_fail(t) {}
};

using OdeRhs = std::function<Vec(double, const Vec&)>;

/// Adaptive Dormand-Prince 5(4) integration sampled on the given output grid.
/// out_times must be increasing and start at t0.
Mat rk45(const OdeRhs& f, const Vec& x0, const std::vector<double>& out_times,
         double tol);

std::vector<double> uniform_grid(double t0, double t1, double dt);

/// Trajectory of the full model under optional forcing, sampled every dt_out.
Trajectory integrate(const MechModel& model, const ForcingSpec* forcing,
                     const Vec& x0, double t0, double t1, double tol,
                     double dt_out);

/// Implicit Newmark (average acceleration) with Newton on the internal force,
/// fixed user step. Unconditionally stable on linear problems.
Trajectory newmark(const MechModel& model, const ForcingSpec* forcing,
                   const Vec& x0, double t0, double t1, double dt);

}  // namespace ssmred
