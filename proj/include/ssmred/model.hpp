#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "ssmred/types.hpp"

namespace ssmred {

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One polynomial internal-force term: f[row] += coeff * q[i]*q[j]  (quadratic)
/// or f[row] += coeff * q[i]*q[j]*q[k]  (cubic, k >= 0).
struct ForceTerm {
    int row;
    int i, j, k;  // k = -1 for quadratic terms
    double coeff;
};

/// Full-order mechanical system  M q" + C q' + K q + f_int(q) = eps f_ext(t).
///
/// The nonlinear internal force is a sparse tensor of quadratic and cubic
/// coefficients, so static Jacobians are exact. Immutable after construction.
class MechModel {
public:
    MechModel(Mat M, Mat C, Mat K, std::vector<ForceTerm> terms = {});

    int n() const { return n_; }
    const Mat& M() const { return M_; }
    const Mat& C() const { return C_; }
    const Mat& K() const { return K_; }
    const std::vector<ForceTerm>& force_terms() const { return terms_; }

    bool proportional() const { return proportional_; }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }

    /// Observable s(x): signed amplitude, by default one displacement DOF.
    int observable_dof() const { return observable_dof_; }
    void set_observable_dof(int dof);
    double observe(const Vec& x) const { return x(observable_dof_); }

    /// Purely nonlinear internal force, f_int(0) = 0 with zero Jacobian.
    Vec f_int(const Vec& q) const;
    Mat f_int_jacobian(const Vec& q) const;

    /// Nonlinear elastic potential, when the model was built from polynomial
    /// springs (chain builder). Throws otherwise.
    double nl_potential(const Vec& q) const;
    bool has_nl_potential() const { return static_cast<bool>(potential_); }
    void set_nl_potential(std::function<double(const Vec&)> v) { potential_ = std::move(v); }

    /// Total mechanical energy of a state x = (q, q').
    double energy(const Vec& x) const;

    /// First-order vector field A x + f0(x) without forcing.
    Vec rhs(const Vec& x) const;

private:
    int n_;
    Mat M_, C_, K_;
    Eigen::LLT<Mat> Mfac_;
    std::vector<ForceTerm> terms_;
    bool proportional_ = false;
    double alpha_ = 0.0, beta_ = 0.0;
    int observable_dof_ = 0;
    std::function<double(const Vec&)> potential_;

    void detect_proportional_damping();
};

/// Multi-harmonic external forcing eps * sum_k f_k exp(i<k,Omega>t), with
/// conjugate closure f_{-k} = conj(f_k) enforced at construction.
class ForcingSpec {
public:
    struct Harmonic {
        std::vector<int> k;
        CVec coeff;
    };

    ForcingSpec(Vec omega, double eps) : omega_(std::move(omega)), eps_(eps) {}

    /// Adds f_k exp(i<k,Omega>t) together with its conjugate at -k.
    void add_harmonic(const std::vector<int>& k, const CVec& fk);

    /// Single-frequency cosine forcing eps * f0 cos(Omega t).
    static ForcingSpec cosine(const Vec& f0, double Omega, double eps);

    const Vec& omega() const { return omega_; }
    double eps() const { return eps_; }
    const std::vector<Harmonic>& harmonics() const { return harmonics_; }
    std::size_t n_freq() const { return static_cast<std::size_t>(omega_.size()); }

    /// Physical force at time t (includes the eps factor).
    Vec force(double t) const;

private:
    Vec omega_;
    double eps_;
    std::vector<Harmonic> harmonics_;
};

/// Sampled state history. `times` strictly increasing; one state column per
/// sample. `stride_full` marks the decimation of stored full states relative
/// to the dense grid a downstream consumer should assume.
struct Trajectory {
    std::vector<double> times;
    Mat states;  // 2n x nt
    int stride_full = 1;

    int n_samples() const { return static_cast<int>(times.size()); }
    int dim() const { return static_cast<int>(states.rows()); }
};

/// Chain of unit masses with linear and cubic springs.
///
/// stiffness_profile of length n_masses+1 builds a fixed-fixed chain (springs
/// ground-1, 1-2, ..., n-ground); length n_masses builds a fixed-free chain.
/// cubic_coeffs must have the same length and attaches a cubic spring with
/// that coefficient in parallel to each linear spring.
MechModel build_oscillator_chain(int n_masses, const Vec& stiffness_profile,
                                 const Vec& cubic_coeffs, double alpha, double beta);

/// q* with K q* + f_int(q*) = load, via Newton with uniform load stepping
/// (10 increments, doubled on failure).
Vec static_solve(const MechModel& model, const Vec& load);

/// x0 = (U0 q_m, 0) from mass-normalized conservative mode shapes.
Vec modal_initial_condition(const MechModel& model,
                            const std::vector<std::pair<int, double>>& modes);

/// ||f_int(a u_j)|| / ||K a u_j + f_int(a u_j)|| for each amplitude a.
Vec nonlinearity_ratio_scan(const MechModel& model, int mode, const Vec& amplitudes);

}  // namespace ssmred
