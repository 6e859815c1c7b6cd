#include "ssmred/model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace ssmred {

MechModel::MechModel(Mat M, Mat C, Mat K, std::vector<ForceTerm> terms)
    : n_(static_cast<int>(M.rows())),
      M_(std::move(M)),
      C_(std::move(C)),
      K_(std::move(K)),
      terms_(std::move(terms)) {
    if (M_.rows() != M_.cols() || C_.rows() != n_ || C_.cols() != n_ ||
        K_.rows() != n_ || K_.cols() != n_)
        throw ModelError("MechModel: inconsistent matrix dimensions");
    if ((M_ - M_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * M_.norm())
        throw ModelError("MechModel: M must be symmetric");
    Mfac_.compute(M_);
    if (Mfac_.info() != Eigen::Success)
        throw ModelError("MechModel: M must be positive definite");
    for (const auto& t : terms_) {
        if (t.row < 0 || t.row >= n_ || t.i < 0 || t.i >= n_ || t.j < 0 ||
            t.j >= n_ || t.k >= n_)
            throw ModelError("MechModel: force term index out of range");
    }
    detect_proportional_damping();
}

void MechModel::set_observable_dof(int dof) {
    if (dof < 0 || dof >= 2 * n_) throw ModelError("observable dof out of range");
    observable_dof_ = dof;
}

void MechModel::detect_proportional_damping() {
    // Two-parameter least squares C ~ alpha M + beta K in the Frobenius inner
    // product, accepted when the residual is below 1e-8 ||C||_F.
    double mm = M_.squaredNorm();
    double kk = K_.squaredNorm();
    double mk = (M_.array() * K_.array()).sum();
    double cm = (C_.array() * M_.array()).sum();
    double ck = (C_.array() * K_.array()).sum();
    double det = mm * kk - mk * mk;
    if (std::abs(det) < 1e-300) {
        // K proportional to M; single-parameter fit on M
        alpha_ = cm / mm;
        beta_ = 0.0;
    } else {
        alpha_ = (cm * kk - ck * mk) / det;
        beta_ = (ck * mm - cm * mk) / det;
    }
    double cn = C_.norm();
    double resid = (C_ - alpha_ * M_ - beta_ * K_).norm();
    proportional_ = (cn == 0.0) || (resid <= 1e-8 * cn);
    if (!proportional_) { alpha_ = 0.0; beta_ = 0.0; }
}

Vec MechModel::f_int(const Vec& q) const {
    Vec f = Vec::Zero(n_);
    for (const auto& t : terms_) {
        double v = t.coeff * q(t.i) * q(t.j);
        if (t.k >= 0) v *= q(t.k);
        f(t.row) += v;
    }
    return f;
}

Mat MechModel::f_int_jacobian(const Vec& q) const {
    Mat J = Mat::Zero(n_, n_);
    for (const auto& t : terms_) {
        if (t.k < 0) {
            J(t.row, t.i) += t.coeff * q(t.j);
            J(t.row, t.j) += t.coeff * q(t.i);
        } else {
            J(t.row, t.i) += t.coeff * q(t.j) * q(t.k);
            J(t.row, t.j) += t.coeff * q(t.i) * q(t.k);
            J(t.row, t.k) += t.coeff * q(t.i) * q(t.j);
        }
    }
    return J;
}

double MechModel::nl_potential(const Vec& q) const {
    if (!potential_) throw ModelError("model has no nonlinear potential");
    return potential_(q);
}

double MechModel::energy(const Vec& x) const {
    Vec q = x.head(n_), v = x.tail(n_);
    double e = 0.5 * v.dot(M_ * v) + 0.5 * q.dot(K_ * q);
    if (potential_) e += potential_(q);
    return e;
}

Vec MechModel::rhs(const Vec& x) const {
    Vec q = x.head(n_), v = x.tail(n_);
    Vec out(2 * n_);
    out.head(n_) = v;
    out.tail(n_) = -Mfac_.solve(K_ * q + C_ * v + f_int(q));
    return out;
}

void ForcingSpec::add_harmonic(const std::vector<int>& k, const CVec& fk) {
    if (static_cast<Eigen::Index>(k.size()) != omega_.size())
        throw ModelError("ForcingSpec: harmonic index length mismatch");
    std::vector<int> neg(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) neg[i] = -k[i];
    // conjugate closure f_{-k} = conj(f_k)
    for (auto& h : harmonics_) {
        if (h.k == neg) {
            if ((h.coeff - fk.conjugate()).norm() > 1e-12 * (1.0 + fk.norm()))
                throw ModelError("ForcingSpec: conjugate symmetry violated");
        }
        if (h.k == k) throw ModelError("ForcingSpec: duplicate harmonic");
    }
    harmonics_.push_back({k, fk});
    harmonics_.push_back({neg, fk.conjugate()});
}

ForcingSpec ForcingSpec::cosine(const Vec& f0, double Omega, double eps) {
    Vec om(1);
    om(0) = Omega;
    ForcingSpec spec(om, eps);
    spec.add_harmonic({1}, (f0 / 2.0).cast<Complex>());
    return spec;
}

Vec ForcingSpec::force(double t) const {
    if (harmonics_.empty()) return Vec();
    CVec f = CVec::Zero(harmonics_.front().coeff.size());
    for (const auto& h : harmonics_) {
        double kw = 0.0;
        for (std::size_t i = 0; i < h.k.size(); ++i) kw += h.k[i] * omega_(static_cast<Eigen::Index>(i));
        f += h.coeff * std::exp(Complex(0.0, kw * t));
    }
    return eps_ * f.real();
}

MechModel build_oscillator_chain(int n_masses, const Vec& stiffness_profile,
                                 const Vec& cubic_coeffs, double alpha, double beta) {
    if (n_masses < 1) throw ModelError("build_oscillator_chain: n_masses >= 1 required");
    const int n = n_masses;
    const int ns = static_cast<int>(stiffness_profile.size());
    if (ns != n && ns != n + 1)
        throw ModelError("build_oscillator_chain: stiffness profile must have n or n+1 springs");
    if (cubic_coeffs.size() != ns)
        throw ModelError("build_oscillator_chain: cubic coefficient count mismatch");
    if ((stiffness_profile.array() <= 0.0).any())
        throw ModelError("build_oscillator_chain: non-positive stiffness");

    // spring s connects mass s-1 to mass s; with ns == n+1 the last spring
    // ties mass n-1 back to ground (fixed-fixed chain).
    Mat M = Mat::Identity(n, n);
    Mat K = Mat::Zero(n, n);
    std::vector<ForceTerm> terms;
    auto endpoints = [&](int s) {
        int a = s - 1;              // left mass (-1 = ground)
        int b = (s < n) ? s : -1;   // right mass (-1 = ground)
        return std::pair<int, int>(a, b);
    };
    for (int s = 0; s < ns; ++s) {
        auto [a, b] = endpoints(s);
        double k = stiffness_profile(s);
        if (a >= 0) K(a, a) += k;
        if (b >= 0) K(b, b) += k;
        if (a >= 0 && b >= 0) {
            K(a, b) -= k;
            K(b, a) -= k;
        }
        double g = cubic_coeffs(s);
        if (g == 0.0) continue;
        // elongation e = q_b - q_a; force gamma e^3 pulls the masses together
        // f_int row a gets -gamma e^3, row b gets +gamma e^3 (internal force
        // convention: appears on the left-hand side).
        // Expand e^3 over the participating DOFs.
        std::vector<std::pair<int, double>> e;  // (dof, sign)
        if (b >= 0) e.push_back({b, 1.0});
        if (a >= 0) e.push_back({a, -1.0});
        for (const auto& [di, si] : e)
            for (const auto& [dj, sj] : e)
                for (const auto& [dk, sk] : e) {
                    double c = g * si * sj * sk;
                    if (a >= 0) terms.push_back({a, di, dj, dk, -c});
                    if (b >= 0) terms.push_back({b, di, dj, dk, c});
                }
    }
    Mat C = alpha * M + beta * K;

    MechModel model(std::move(M), std::move(C), std::move(K), std::move(terms));
    model.set_nl_potential([n, ns, stiffness_profile, cubic_coeffs](const Vec& q) {
        double v = 0.0;
        for (int s = 0; s < ns; ++s) {
            double qa = (s - 1 >= 0) ? q(s - 1) : 0.0;
            double qb = (s < n) ? q(s) : 0.0;
            double e = qb - qa;
            v += 0.25 * cubic_coeffs(s) * e * e * e * e;
        }
        return v;
    });
    return model;
}

Vec static_solve(const MechModel& model, const Vec& load) {
    const int n = model.n();
    if (load.size() != n) throw ModelError("static_solve: load dimension mismatch");
    const double target_tol = 1e-10 * (1.0 + load.norm());
    Vec q = Vec::Zero(n);
    int n_steps = 10;
    const int max_restarts = 4;
    for (int attempt = 0;; ++attempt) {
        bool ok = true;
        q.setZero();
        double frac = 0.0;
        double last_resid = 0.0;
        for (int s = 1; s <= n_steps && ok; ++s) {
            frac = static_cast<double>(s) / n_steps;
            Vec rhs_load = frac * load;
            bool converged = false;
            for (int it = 0; it < 50; ++it) {
                Vec r = model.K() * q + model.f_int(q) - rhs_load;
                last_resid = r.norm();
                if (last_resid <= target_tol) {
                    converged = true;
                    break;
                }
                Mat J = model.K() + model.f_int_jacobian(q);
                Eigen::PartialPivLU<Mat> lu(J);
                Vec dq = lu.solve(r);
                if (!dq.allFinite()) break;
                q -= dq;
            }
            if (!converged) ok = false;
        }
        if (ok) return q;
        if (attempt >= max_restarts)
            throw ModelError("static_solve: Newton stagnation at load fraction " +
                             std::to_string(frac) + ", residual " +
                             std::to_string(last_resid));
        n_steps *= 2;
    }
}

namespace {
// Conservative modes K u = M u w^2, mass-normalized.
std::pair<Vec, Mat> conservative_modes(const MechModel& model) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(model.K(), model.M());
    if (es.info() != Eigen::Success)
        throw ModelError("conservative eigenproblem failed");
    Vec w2 = es.eigenvalues();
    Vec w0 = w2.cwiseMax(0.0).cwiseSqrt();
    return {w0, es.eigenvectors()};  // already M-orthonormal
}
}  // namespace

Vec modal_initial_condition(const MechModel& model,
                            const std::vector<std::pair<int, double>>& modes) {
    auto [w0, U0] = conservative_modes(model);
    Vec q = Vec::Zero(model.n());
    for (const auto& [idx, amp] : modes) {
        if (idx < 0 || idx >= model.n())
            throw ModelError("modal_initial_condition: mode index out of range");
        if (!std::isfinite(amp))
            throw ModelError("modal_initial_condition: non-finite amplitude");
        q += amp * U0.col(idx);
    }
    Vec x0 = Vec::Zero(2 * model.n());
    x0.head(model.n()) = q;
    return x0;
}

Vec nonlinearity_ratio_scan(const MechModel& model, int mode, const Vec& amplitudes) {
    auto [w0, U0] = conservative_modes(model);
    if (mode < 0 || mode >= model.n())
        throw ModelError("nonlinearity_ratio_scan: mode index out of range");
    Vec u = U0.col(mode);
    Vec out(amplitudes.size());
    for (Eigen::Index i = 0; i < amplitudes.size(); ++i) {
        Vec q = amplitudes(i) * u;
        Vec fnl = model.f_int(q);
        Vec ftot = model.K() * q + fnl;
        out(i) = (ftot.norm() == 0.0) ? 0.0 : fnl.norm() / ftot.norm();
    }
    return out;
}

}  // namespace ssmred
