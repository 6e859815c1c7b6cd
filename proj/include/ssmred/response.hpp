#pragma once

#include "ssmred/forcing.hpp"
#include "ssmred/manifold_fit.hpp"
#include "ssmred/normal_form.hpp"

namespace ssmred {

struct ResponseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Fitted SSM model bundle: chart, geometry, reduced dynamics, normal form.
struct SsmRom {
    ChartBasis chart;
    PolyMap v_nl;
    PolyMap r_nl;
    NormalFormModel nf;
};

enum class Stability { Stable, Unstable, Marginal };

struct FRCPoint {
    double Omega = 0.0;
    Vec rho;       // active-mode amplitudes
    Vec psi;       // co-rotating phases
    CVec w;        // co-rotating complex fixed point (m entries)
    double amp = 0.0;
    double phase = 0.0;
    Stability stability = Stability::Stable;
    CVec jac_eigs;
    bool fold = false;
};

struct FRCBranch {
    std::vector<FRCPoint> points;
    bool truncated_at_amp_max = false;
};

struct BackboneSample {
    double rho, omega, alpha, amp;
};

struct BackboneCurve {
    std::vector<BackboneSample> samples;
};

/// Autonomous co-rotating normal-form field
///   w_k' = (lambda_k - i eta_k Omega) w_k + [n_nl terms] + eps g_k (k in R),
/// valid because every retained resonant phase combination satisfies
/// <d, eta> = eta_k. Fixed points of this field are the periodic responses.
class CorotatingField {
public:
    CorotatingField(const NormalFormModel& nf, const ReducedForcing& rf,
                    const std::vector<int>& eta);

    /// Real-ified field over u = (Re w, Im w), given Omega.
    Vec eval(const Vec& u, double Omega) const;
    Mat jacobian(const Vec& u, double Omega) const;

    const std::vector<int>& eta() const { return eta_; }
    int m() const { return m_; }

private:
    int m_;
    CVec lambdas_;
    PolyMap n_nl_;  // restricted to terms autonomous in the co-rotating frame
    CVec forcing_;  // eps * g_k for k in R, else 0
    std::vector<int> eta_;
};

/// Integer harmonic ratios eta_k for the co-rotating frame, from the imaginary
/// parts of the chart eigenvalues relative to the mode nearest Omega.
std::vector<int> harmonic_ratios(const NormalFormModel& nf, double Omega);

struct FrcOptions {
    double ds_min = 1e-4;
    double ds_max = 0.05;      // scaled by the omega scale internally
    int max_steps = 4000;
    double newton_tol = 1e-10;
    double amp_max = 1e30;     // reduced-amplitude validity bound
    int n_theta = 256;         // samples per period for amp/phase metric
    double stability_margin = 1e-8;
    int correction_modes = 0;  // modal truncation N for v1 (<= 0: all)
};

/// Everything continuation needs beyond the ROM itself.
struct ForcedResponseProblem {
    const SsmRom* rom;
    const Spectrum* spectrum;
    const MechModel* model;
    Vec f0;       // physical force pattern, cosine forcing eps f0 cos(Omega t)
    double eps;
};

/// Pseudo-arclength continuation of co-rotating fixed points over
/// [Omega0, Omega1], with stability and fold detection.
FRCBranch continue_frc(const ForcedResponseProblem& prob, double Omega0,
                       double Omega1, const FrcOptions& opt = {});

/// Single fixed point at given Omega from a linear-response seed (or the
/// provided seed). Returns false if Newton fails.
bool frc_point(const ForcedResponseProblem& prob, double Omega, FRCPoint& out,
               const FrcOptions& opt = {}, const CVec* seed = nullptr);

/// All co-rotating fixed points at one Omega found from multi-start Newton.
std::vector<FRCPoint> frc_points_all(const ForcedResponseProblem& prob,
                                     double Omega, const FrcOptions& opt = {});

/// Backbone curve for 2D SSMs (m = 1): amp(rho) via the amplitude metric,
/// paired with omega(rho), alpha(rho).
BackboneCurve backbone(const SsmRom& rom, const MechModel& model, double rho_max,
                       int n_rho, int n_theta = 128);

/// Integrates the normal-form ROM under the given forcing and reconstructs the
/// physical trajectory x(t) = V0 y + v_nl(y) + eps v1(t).
Trajectory simulate_rom(const SsmRom& rom, const Spectrum& spectrum,
                        const MechModel& model, const ForcingSpec* forcing,
                        const Vec& x0, double t0, double t1, double dt_out,
                        double tol = 1e-10, int correction_modes = 0);

/// Physical periodic orbit reconstruction of an FRC point over one period.
Trajectory reconstruct_periodic(const ForcedResponseProblem& prob,
                                const FRCPoint& pt, const std::vector<int>& eta,
                                int n_samples);

/// Amplitude and phase of a periodic scalar signal sampled over one period.
std::pair<double, double> amp_phase(const Vec& signal, const std::vector<double>& t,
                                    double T);

}  // namespace ssmred
