#pragma once

#include <optional>

#include "ssmred/model.hpp"
#include "ssmred/types.hpp"

namespace ssmred {

struct SpectralError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Slowest complex pairs of the first-order operator with bi-orthonormalized
/// left/right vectors (W V = I). Eigenvalues are ordered with non-increasing
/// real parts; per pair the +Im representative is stored first.
struct Spectrum {
    CVec eigenvalues;  // lambda_1..lambda_p (one per pair, Im > 0)
    CMat right;        // 2n x 2p, columns (v_1, conj(v_1), v_2, ...)
    CMat left;         // 2p x 2n, rows matching `right`
    // Present when damping is proportional:
    bool proportional = false;
    double alpha = 0.0, beta = 0.0;
    Vec omega0;  // conservative natural frequencies (all n)
    Mat U0;      // mass-normalized conservative mode shapes (n x n)

    int n_pairs() const { return static_cast<int>(eigenvalues.size()); }
    Complex lambda(int j) const { return eigenvalues(j); }
};

enum class ChartStyle { ModalComplex, ModalMechanical, NonModal };

/// Linear parts of a graph-style SSM chart: y = W0 x, x ~ V0 y, y' ~ R0 y,
/// with V0 = V_E P^{-1} and R0 = P R_E P^{-1}.
struct ChartBasis {
    std::vector<int> mode_indices;  // 0-based into Spectrum pairs
    ChartStyle style;
    CMat W0;   // 2m x 2n
    CMat V0;   // 2n x 2m
    CMat R0;   // 2m x 2m
    CMat P;    // 2m x 2m
    CMat VE;   // eigenvector basis, columns (v_{j1}..v_{jm}, conjugates)
    CVec lambdas;  // (lambda_{j1}..lambda_{jm}), conjugates implied

    int m() const { return static_cast<int>(mode_indices.size()); }
    CMat RE() const;  // diag(lambdas, conj(lambdas))
};

struct ResonanceHit {
    int mode_i, mode_j;  // 0-based, omega_i < omega_j
    int p, q;            // q*omega_i : p*omega_j ~ p:q ratio, i.e. q w_i ~ p w_j
    double detuning;     // |q w_i - p w_j| / w_j
};

Mat first_order_operator(const MechModel& model);

Spectrum compute_spectrum(const MechModel& model, int m_keep);

/// Re(lambda_{m+1}) / Re(lambda_m).
double spectral_gap(const Spectrum& spectrum, int m);

/// All near p:q commensurate pairs with p+q <= max_order, sorted by detuning.
std::vector<ResonanceHit> detect_internal_resonance(const Spectrum& spectrum,
                                                    int max_order, double rel_tol);

/// Builds the chart linear parts. For the non-modal style, `projection` gives
/// the user W0 (e.g. a DOF displacement/velocity selector).
ChartBasis build_chart(const Spectrum& spectrum, const std::vector<int>& mode_indices,
                       ChartStyle style, const Mat* projection = nullptr);

/// Selector projection onto displacement/velocity of one DOF (rows 2 x 2n).
Mat dof_selector_projection(int dof, int n);

void save_chart(const ChartBasis& chart, const std::string& path);
ChartBasis load_chart(const std::string& path);

}  // namespace ssmred
