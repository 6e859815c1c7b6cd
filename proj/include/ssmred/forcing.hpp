#pragma once

#include "ssmred/model.hpp"
#include "ssmred/normal_form.hpp"
#include "ssmred/spectral.hpp"

namespace ssmred {

struct ForcingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Modal forcing of one harmonic. All complex coefficients refer to the +Omega
/// Fourier component; the physical signal is 2 Re(coeff exp(i Omega t)).
/// g = P^{-1} W0 (0; M^{-1} f0/2) for cosine forcing f0 cos(Omega t).
struct ReducedForcing {
    double Omega = 0.0;
    double eps = 0.0;
    CVec g;         // m modal forcing coefficients
    Vec f;          // |g_k|
    Vec phi;        // arg(g_k) - pi/2
    std::vector<bool> in_R;  // resonant index set membership

    int m() const { return static_cast<int>(g.size()); }
    bool resonant(int k) const { return in_R[static_cast<std::size_t>(k)]; }
};

/// Default resonant band: |omega_{0,k} - Omega| <= band_rel * omega_{0,k}.
constexpr double kResonantBandRel = 0.1;

ReducedForcing reduce_forcing(const ChartBasis& chart, const MechModel& model,
                              const Vec& f0, double Omega, double eps,
                              double band_rel = kResonantBandRel);

/// O(eps) manifold correction v1 for one harmonic at frequency kOmega:
/// modal sum over the N slowest out-of-chart modes. W0 v1 = 0.
CVec manifold_correction(const Spectrum& spectrum, const ChartBasis& chart,
                         const MechModel& model, const Vec& f0, double kOmega,
                         int N);

/// Same correction from the full (A - i kOmega I) solve; reference route.
CVec manifold_correction_direct(const MechModel& model, const ChartBasis& chart,
                                const Vec& f0, double kOmega);

/// Normal-form forcing split of one harmonic: resonant part into n1, the rest
/// into h1 with coefficients g/(lambda -+ i Omega).
struct NormalFormForcing {
    double Omega = 0.0;
    CVec n1;       // m: coefficient of exp(+i Omega t) in n1 rows 1..m
    CVec gh_plus;  // m: h1 rows 1..m, exp(+i Omega t) coefficient
    CVec gh_minus; // m: h1 rows 1..m, exp(-i Omega t) coefficient

    /// h1(t), full 2m vector (rows m+1..2m conjugate).
    CVec h1(double t) const;
    /// n1(t), full 2m vector.
    CVec n1_of_t(double t) const;
};

NormalFormForcing normal_form_forcing(const NormalFormModel& nf,
                                      const ReducedForcing& rf);

/// Forced polar field (rho', theta') at (rho, theta, t) for single-frequency
/// forcing. Throws on rho_k = 0 with f_k != 0 (use the Cartesian field).
void forced_polar_field(const PolarForm& polar, const ReducedForcing& rf,
                        double t, const Vec& rho, const Vec& theta,
                        Vec& rhodot, Vec& thetadot);

/// Appendix-style forcing for non-modal charts: per-harmonic (r1, v1) from the
/// coupled linear system (i Omega I - (I - V0 W0) A) v1 = (I - V0 W0) f1,
/// r1 = W0 A v1 + W0 f1.
struct NonModalForcing {
    CVec r1;  // 2m
    CVec v1;  // 2n
};

NonModalForcing nonmodal_forcing(const ChartBasis& chart, const MechModel& model,
                                 const Vec& f0, double Omega);

/// All forcing data one harmonic contributes to ROM simulation/prediction.
struct RomHarmonic {
    double Omega = 0.0;
    ReducedForcing rf;
    NormalFormForcing nf_forcing;
    CVec v1;  // manifold correction coefficient (+Omega component)
};

/// Builds per-harmonic ROM forcing for a multi-harmonic cosine ForcingSpec.
/// `N` truncates the manifold-correction modal sum (<= 0 means all modes).
std::vector<RomHarmonic> lift_forcing(const Spectrum& spectrum, const ChartBasis& chart,
                                      const MechModel& model, const NormalFormModel& nf,
                                      const ForcingSpec& forcing, int N = 0,
                                      double band_rel = kResonantBandRel);

}  // namespace ssmred
