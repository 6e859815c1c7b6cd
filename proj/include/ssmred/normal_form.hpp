#pragma once

#include "ssmred/manifold_fit.hpp"
#include "ssmred/polymap.hpp"
#include "ssmred/spectral.hpp"
#include "ssmred/trajectory_data.hpp"

namespace ssmred {

/// Near-resonant monomial sets of the chart eigenvalues: for each normal-form
/// coordinate k (k = 1..m; conjugate rows are mirrored), the exponent tuples e
/// with <e, lambda> ~ lambda_k.
struct ResonanceStructure {
    int m = 0;
    int order = 0;
    std::vector<std::vector<Exponents>> terms;  // per coordinate k = 0..m-1

    bool contains(int k, const Exponents& e) const;
};

struct NormalFormOptions {
    double res_tol_rel = 0.05;       // on imaginary parts, relative
    double res_tol_abs_factor = 2.0; // times |Re lambda_k|
    int max_iter = 60;
    double gtol = 1e-12;
};

ResonanceStructure select_resonant_terms(const CVec& lambdas, int order,
                                         const NormalFormOptions& opt = {});

/// Extended normal form identified from data by conjugacy-error minimization.
/// Coordinates: zeta = P^{-1} y, z = zeta + h_inv_nl(zeta),
/// y = P (z + h_nl(z)), z' = diag(lambda, conj) z + n_nl(z).
struct NormalFormModel {
    CVec lambdas;   // m eigenvalues, conjugates implied
    CMat P, Pinv;   // chart change of basis
    ResonanceStructure structure;
    PolyMap n_nl;      // restricted to the resonance structure
    PolyMap h_inv_nl;  // near-identity inverse transform (acts on zeta)
    PolyMap h_nl;      // forward transform (acts on z)
    double conjugacy_residual = 0.0;

    int m() const { return static_cast<int>(lambdas.size()); }
    CMat Lambda() const;  // diag(lambda, conj(lambda))

    CVec z_from_y(const CVec& y) const;
    CVec y_from_z(const CVec& z) const;
    /// Autonomous normal-form field n(z).
    CVec field(const CVec& z) const;
    /// Assembles (z_1..z_m) -> full conjugate-pair vector.
    static CVec pack(const CVec& z_half);
};

NormalFormModel fit_normal_form(const ReducedDataset& data, const ChartBasis& chart,
                                const ResonanceStructure& structure,
                                int h_order, const NormalFormOptions& opt = {});

/// Polar view of the normal form: rho_k' = -alpha_k(rho,theta) rho_k,
/// theta_k' = omega_k(rho,theta).
class PolarForm {
public:
    explicit PolarForm(const NormalFormModel& model);

    /// (rho', theta') at (rho, theta).
    void eval(const Vec& rho, const Vec& theta, Vec& rhodot, Vec& thetadot) const;

    /// Amplitude-only damping/frequency, valid when no internal resonance
    /// couples the phases (theta-dependent terms are skipped).
    double alpha(int k, const Vec& rho) const;
    double omega(int k, const Vec& rho) const;

    int m() const { return m_; }
    /// True if coordinate k carries any term whose phase combination is not
    /// the trivial one.
    bool has_phase_coupling(int k) const;

    struct Term {
        Exponents amp_powers;  // rho_j exponents (a_j + b_j)
        std::vector<int> phase;  // <a - b, theta> - theta_k combination
        Complex c;
    };
    const std::vector<std::vector<Term>>& terms() const { return terms_; }

private:
    int m_;
    CVec lambdas_;
    std::vector<std::vector<Term>> terms_;  // per coordinate
};

/// max ||h(h^{-1}(y)) - y|| / ||y|| over the sample columns.
double invert_consistency(const NormalFormModel& model, const CMat& samples);

void save_normal_form(const NormalFormModel& model, const std::string& path);
NormalFormModel load_normal_form(const std::string& path);

}  // namespace ssmred
