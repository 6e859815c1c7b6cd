#pragma once

#include "ssmred/polymap.hpp"
#include "ssmred/spectral.hpp"
#include "ssmred/trajectory_data.hpp"

namespace ssmred {

struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FitReport {
    double residual = 0.0;        // rms of the regression residual
    double w0_vnl_max = 0.0;      // ||W0 V_nl||_max orthogonality check
    int n_samples = 0;
    int n_monomials = 0;
};

/// Polynomial regression of the SSM parametrization x ~ V0 y + v_nl(y),
/// orders 2..M, optional ridge. Full snapshots of the dataset are the targets.
PolyMap fit_parametrization(const ReducedDataset& data, const ChartBasis& chart,
                            int order, double ridge = 0.0,
                            FitReport* report = nullptr);

/// Polynomial regression of the reduced dynamics y' ~ R0 y + r_nl(y).
/// For modal-mechanical charts the first m output rows are constrained to 0.
PolyMap fit_reduced_dynamics(const ReducedDataset& data, const ChartBasis& chart,
                             int order, double ridge = 0.0,
                             FitReport* report = nullptr);

/// Full parametrization v(y) = V0 y + v_nl(y) in physical coordinates.
CVec evaluate_parametrization(const ChartBasis& chart, const PolyMap& v_nl,
                              const CVec& y);

/// Full reduced field r(y) = R0 y + r_nl(y).
CVec evaluate_reduced_field(const ChartBasis& chart, const PolyMap& r_nl,
                            const CVec& y);

}  // namespace ssmred
