#pragma once

#include "ssmred/model.hpp"
#include "ssmred/spectral.hpp"
#include "ssmred/types.hpp"

namespace ssmred {

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One trajectory projected to chart coordinates. Reduced samples live on the
/// dense grid; paired full snapshots are kept on the decimated grid only.
struct ReducedTrajectory {
    std::vector<double> t;       // dense grid
    CMat y;                      // 2m x nt, y = W0 x
    CMat ydot;                   // empty until differentiate()
    Vec s;                       // observable channel on the dense grid
    std::vector<double> t_full;  // decimated grid
    Mat x_full;                  // 2n x nt_full
    bool has_ydot() const { return ydot.size() > 0; }
};

struct ReducedDataset {
    std::vector<ReducedTrajectory> trajectories;
    std::vector<std::string> split;  // "train" | "test", parallel to trajectories
    int m = 0;

    int n_samples() const;
    /// Concatenated (y, ydot) over all trajectories with a given split tag
    /// (empty tag = all).
    void stacked(CMat& y, CMat& ydot, const std::string& tag = "") const;
};

/// Drops the first n_periods of the slowest chart mode.
Trajectory truncate_transient(const Trajectory& traj, const ChartBasis& chart,
                              double n_periods);

/// y = W0 x on the dense grid; full snapshots kept every `stride` samples.
ReducedTrajectory project(const Trajectory& traj, const ChartBasis& chart,
                          const MechModel& model, int stride = 1);

/// 4th-order central finite differences with one-sided closures; uniform grid.
void differentiate(ReducedTrajectory& rt);
void differentiate(ReducedDataset& ds);

/// Normalized mean trajectory error in percent. `reference` supplies the
/// sample grid; `predicted` is cubic-interpolated onto it first. The
/// normalization vector defaults to the reference point with largest norm.
double nmte(const Trajectory& predicted, const Trajectory& reference,
            const Vec* normalization = nullptr);

/// Per-sample one-step prediction error ||y_{j+1} - Phi_dt(y_j)|| / max||y||.
Vec one_step_error(const ReducedTrajectory& rt,
                   const std::function<CVec(double, const CVec&)>& rom_rhs,
                   double tol = 1e-10);

struct BackbonePoint {
    double t;
    double amplitude;
    double frequency;  // rad/s
    double damping;    // 1/s decay rate
};

/// Simplified peak-finding instantaneous amplitude/frequency/damping
/// extraction from a decaying oscillatory signal.
std::vector<BackbonePoint> extract_backbone_pff(const Vec& signal,
                                                const std::vector<double>& t);

/// Natural cubic spline interpolation of a sampled signal.
class CubicSpline {
public:
    CubicSpline(const std::vector<double>& t, const Vec& values);
    double operator()(double t) const;

private:
    std::vector<double> t_;
    Vec a_, b_, c_, d_;
};

}  // namespace ssmred
