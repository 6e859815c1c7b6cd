#include "ssmred/response.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "ssmred/integrate.hpp"

namespace ssmred {

namespace {

CVec w_from_u(const Vec& u) {
    const Eigen::Index m = u.size() / 2;
    CVec w(m);
    for (Eigen::Index k = 0; k < m; ++k) w(k) = Complex(u(k), u(m + k));
    return w;
}

Vec u_from_w(const CVec& w) {
    Vec u(2 * w.size());
    u << w.real(), w.imag();
    return u;
}

}  // namespace

CorotatingField::CorotatingField(const NormalFormModel& nf, const ReducedForcing& rf,
                                 const std::vector<int>& eta)
    : m_(nf.m()), lambdas_(nf.lambdas), eta_(eta) {
    forcing_ = CVec::Zero(m_);
    for (int k = 0; k < m_; ++k)
        if (rf.resonant(k)) forcing_(k) = rf.eps * rf.g(k);

    // keep only the n_nl terms that are autonomous in the co-rotating frame:
    // sum_j (a_j - b_j) eta_j == eta_k
    std::vector<Exponents> table;
    std::vector<std::pair<int, Complex>> kept;  // (row, coeff) parallel to entries
    std::vector<std::pair<int, int>> entries;   // (row, table index)
    if (!nf.n_nl.empty()) {
        const auto& src = nf.n_nl.table();
        for (int k = 0; k < m_; ++k)
            for (std::size_t t = 0; t < src.size(); ++t) {
                Complex c = nf.n_nl.coeffs()(k, static_cast<Eigen::Index>(t));
                if (std::abs(c) == 0.0) continue;
                int combo = 0;
                for (int j = 0; j < m_; ++j)
                    combo += (src[t][static_cast<std::size_t>(j)] -
                              src[t][static_cast<std::size_t>(m_ + j)]) *
                             eta_[static_cast<std::size_t>(j)];
                if (combo != eta_[static_cast<std::size_t>(k)]) continue;
                int idx = find_exponents(table, src[t]);
                if (idx < 0) {
                    idx = static_cast<int>(table.size());
                    table.push_back(src[t]);
                }
                entries.push_back({k, idx});
                kept.push_back({k, c});
            }
    }
    CMat coeffs = CMat::Zero(m_, static_cast<Eigen::Index>(table.size()));
    for (std::size_t i = 0; i < entries.size(); ++i)
        coeffs(entries[i].first, entries[i].second) += kept[i].second;
    n_nl_ = table.empty() ? PolyMap::zero(2 * m_, m_)
                          : PolyMap(2 * m_, m_, std::move(table), std::move(coeffs));
}

Vec CorotatingField::eval(const Vec& u, double Omega) const {
    CVec w = w_from_u(u);
    CVec z = NormalFormModel::pack(w);
    CVec f(m_);
    for (int k = 0; k < m_; ++k)
        f(k) = (lambdas_(k) - Complex(0, eta_[static_cast<std::size_t>(k)] * Omega)) * w(k) +
               forcing_(k);
    if (!n_nl_.empty()) f += n_nl_(z);
    return u_from_w(f);
}

Mat CorotatingField::jacobian(const Vec& u, double Omega) const {
    CVec w = w_from_u(u);
    CVec z = NormalFormModel::pack(w);
    CMat Fw = CMat::Zero(m_, m_), Fwb = CMat::Zero(m_, m_);
    for (int k = 0; k < m_; ++k)
        Fw(k, k) = lambdas_(k) - Complex(0, eta_[static_cast<std::size_t>(k)] * Omega);
    if (!n_nl_.empty()) {
        CMat Dn = n_nl_.jacobian(z);  // m x 2m
        Fw += Dn.leftCols(m_);
        Fwb += Dn.rightCols(m_);
    }
    Mat J(2 * m_, 2 * m_);
    J.topLeftCorner(m_, m_) = (Fw + Fwb).real();
    J.topRightCorner(m_, m_) = -(Fw - Fwb).imag();
    J.bottomLeftCorner(m_, m_) = (Fw + Fwb).imag();
    J.bottomRightCorner(m_, m_) = (Fw - Fwb).real();
    return J;
}

std::vector<int> harmonic_ratios(const NormalFormModel& nf, double Omega) {
    const int m = nf.m();
    int ref = 0;
    double best = 1e300;
    for (int k = 0; k < m; ++k) {
        double d = std::abs(std::abs(nf.lambdas(k).imag()) - Omega);
        if (d < best) { best = d; ref = k; }
    }
    double w_ref = std::abs(nf.lambdas(ref).imag());
    std::vector<int> eta(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
        int e = static_cast<int>(std::llround(std::abs(nf.lambdas(k).imag()) / w_ref));
        eta[static_cast<std::size_t>(k)] = std::max(e, 0);
    }
    eta[static_cast<std::size_t>(ref)] = std::max(eta[static_cast<std::size_t>(ref)], 1);
    return eta;
}

namespace {

ReducedForcing forcing_at(const ForcedResponseProblem& prob, double Omega) {
    const ChartBasis& chart = prob.rom->chart;
    if (chart.style == ChartStyle::NonModal) {
        NonModalForcing nmf = nonmodal_forcing(chart, *prob.model, prob.f0, Omega);
        ReducedForcing rf;
        rf.Omega = Omega;
        rf.eps = prob.eps;
        rf.g = (prob.rom->nf.Pinv * nmf.r1).head(chart.m());
        rf.f.resize(chart.m());
        rf.phi.resize(chart.m());
        rf.in_R.resize(static_cast<std::size_t>(chart.m()));
        for (int k = 0; k < chart.m(); ++k) {
            rf.f(k) = std::abs(rf.g(k));
            rf.phi(k) = std::arg(rf.g(k)) - M_PI / 2.0;
            double w0k = std::abs(chart.lambdas(k));
            rf.in_R[static_cast<std::size_t>(k)] =
                std::abs(w0k - Omega) <= kResonantBandRel * w0k;
        }
        return rf;
    }
    return reduce_forcing(chart, *prob.model, prob.f0, Omega, prob.eps);
}

CorotatingField field_at(const ForcedResponseProblem& prob, double Omega,
                         const std::vector<int>& eta,
                         const std::vector<bool>& R_mask) {
    ReducedForcing rf = forcing_at(prob, Omega);
    rf.in_R = R_mask;
    return CorotatingField(prob.rom->nf, rf, eta);
}

CVec linear_seed(const ForcedResponseProblem& prob, double Omega,
                 const std::vector<int>& eta, const std::vector<bool>& R_mask) {
    const NormalFormModel& nf = prob.rom->nf;
    ReducedForcing rf = forcing_at(prob, Omega);
    CVec w = CVec::Zero(nf.m());
    for (int k = 0; k < nf.m(); ++k) {
        if (!R_mask[static_cast<std::size_t>(k)]) continue;
        Complex den = Complex(0, eta[static_cast<std::size_t>(k)] * Omega) - nf.lambdas(k);
        w(k) = prob.eps * rf.g(k) / den;
    }
    return w;
}

bool newton_fixed_omega(const CorotatingField& field, double Omega, Vec& u,
                        double tol) {
    for (int it = 0; it < 50; ++it) {
        Vec F = field.eval(u, Omega);
        if (F.norm() <= tol * (1.0 + u.norm())) return true;
        Mat J = field.jacobian(u, Omega);
        Vec du = Eigen::PartialPivLU<Mat>(J).solve(-F);
        if (!du.allFinite()) return false;
        // backtracking guard for far seeds
        double f0 = F.norm();
        double step = 1.0;
        Vec ut = u + du;
        for (int ls = 0; ls < 6 && field.eval(ut, Omega).norm() >= f0; ++ls) {
            step *= 0.5;
            ut = u + step * du;
        }
        u = ut;
    }
    return false;
}

Stability classify(const Mat& Ju, CVec& eigs, double margin) {
    Eigen::EigenSolver<Mat> es(Ju);
    eigs = es.eigenvalues();
    double mr = eigs.real().maxCoeff();
    if (mr > margin) return Stability::Unstable;
    if (mr < -margin) return Stability::Stable;
    return Stability::Marginal;
}

FRCPoint make_point(const ForcedResponseProblem& prob, const Vec& u, double Omega,
                    const std::vector<int>& eta, const CorotatingField& field,
                    const FrcOptions& opt) {
    FRCPoint pt;
    pt.Omega = Omega;
    pt.w = w_from_u(u);
    pt.rho = pt.w.cwiseAbs();
    pt.psi.resize(pt.w.size());
    for (Eigen::Index k = 0; k < pt.w.size(); ++k) pt.psi(k) = std::arg(pt.w(k));
    pt.stability = classify(field.jacobian(u, Omega), pt.jac_eigs, opt.stability_margin);
    Trajectory orbit = reconstruct_periodic(prob, pt, eta, opt.n_theta);
    Vec s(orbit.n_samples());
    for (int j = 0; j < orbit.n_samples(); ++j)
        s(j) = prob.model->observe(orbit.states.col(j));
    auto [amp, phase] = amp_phase(s, orbit.times, 2.0 * M_PI / Omega);
    pt.amp = amp;
    pt.phase = phase;
    return pt;
}

}  // namespace

bool frc_point(const ForcedResponseProblem& prob, double Omega, FRCPoint& out,
               const FrcOptions& opt, const CVec* seed) {
    std::vector<int> eta = harmonic_ratios(prob.rom->nf, Omega);
    ReducedForcing rf0 = forcing_at(prob, Omega);
    CorotatingField field(prob.rom->nf, rf0, eta);
    Vec u = u_from_w(seed ? *seed : linear_seed(prob, Omega, eta, rf0.in_R));
    if (!newton_fixed_omega(field, Omega, u, opt.newton_tol)) return false;
    out = make_point(prob, u, Omega, eta, field, opt);
    return true;
}

std::vector<FRCPoint> frc_points_all(const ForcedResponseProblem& prob,
                                     double Omega, const FrcOptions& opt) {
    std::vector<int> eta = harmonic_ratios(prob.rom->nf, Omega);
    ReducedForcing rf0 = forcing_at(prob, Omega);
    CorotatingField field(prob.rom->nf, rf0, eta);
    CVec base = linear_seed(prob, Omega, eta, rf0.in_R);
    if (base.norm() == 0.0) base = CVec::Constant(prob.rom->nf.m(), Complex(1e-4, 0));

    std::vector<FRCPoint> found;
    auto try_seed = [&](const CVec& w0) {
        Vec u = u_from_w(w0);
        if (!newton_fixed_omega(field, Omega, u, opt.newton_tol)) return false;
        CVec w = w_from_u(u);
        for (const auto& pt : found)
            if ((pt.w - w).norm() <= 1e-6 * (1.0 + w.norm())) return false;
        found.push_back(make_point(prob, u, Omega, eta, field, opt));
        return true;
    };
    const double scales[] = {0.05, 0.2, 0.5, 1.0, 2.0, 5.0, 15.0, 50.0};
    for (double s : scales) try_seed(CVec(s * base));
    // for a single resonant pair the fixed points are the roots of the scalar
    // zero-level set alpha(rho)^2 + rho^2 (omega(rho) - Omega)^2 = (eps f)^2;
    // bracket them on a dense grid so basin geometry cannot hide a saddle
    if (prob.rom->nf.m() == 1 && rf0.in_R[0] && rf0.f(0) > 0.0) {
        PolarForm pf(prob.rom->nf);
        const double epsf = prob.eps * rf0.f(0);
        auto level = [&](double rho) {
            Vec r(1);
            r(0) = rho;
            double a = pf.alpha(0, r);
            double dw = pf.omega(0, r) - Omega;
            return a * a + rho * rho * dw * dw - epsf * epsf;
        };
        const double rho_max = 100.0 * std::max(base.norm(), 1e-6);
        const int n_grid = 4000;
        double r_prev = rho_max / n_grid;
        double f_prev = level(r_prev);
        for (int i = 2; i <= n_grid; ++i) {
            double r = rho_max * i / n_grid;
            double f = level(r);
            if (f_prev == 0.0 || f_prev * f < 0.0) {
                double lo = r_prev, hi = r;
                for (int it = 0; it < 80; ++it) {
                    double mid = 0.5 * (lo + hi);
                    (level(lo) * level(mid) <= 0.0 ? hi : lo) = mid;
                }
                Vec rr(1);
                rr(0) = 0.5 * (lo + hi);
                double a = pf.alpha(0, rr);
                double c = rr(0) * (pf.omega(0, rr) - Omega);
                for (double sg : {1.0, -1.0}) {
                    double theta = rf0.phi(0) + std::atan2(-a, sg * c);
                    try_seed(CVec::Constant(1, std::polar(rr(0), theta)));
                }
            }
            r_prev = r;
            f_prev = f;
        }
    }
    // saddle-type solutions between two attractors are easy to miss from
    // radial seeds; bisect between every distinct pair until closed
    for (bool grew = true; grew;) {
        grew = false;
        const std::size_t n0 = found.size();
        for (std::size_t a = 0; a < n0 && !grew; ++a)
            for (std::size_t b = a + 1; b < n0 && !grew; ++b)
                for (double s : {0.5, 0.25, 0.75})
                    if ((grew = try_seed(
                             CVec(s * found[a].w + (1.0 - s) * found[b].w))))
                        break;
    }
    std::sort(found.begin(), found.end(),
              [](const FRCPoint& a, const FRCPoint& b) { return a.amp < b.amp; });
    return found;
}

FRCBranch continue_frc(const ForcedResponseProblem& prob, double Omega0,
                       double Omega1, const FrcOptions& opt) {
    const NormalFormModel& nf = prob.rom->nf;
    double Omega_mid = 0.5 * (Omega0 + Omega1);
    std::vector<int> eta = harmonic_ratios(nf, Omega_mid);
    std::vector<bool> R_mask = forcing_at(prob, Omega_mid).in_R;
    const double w_scale = Omega_mid;

    auto solve_at = [&](double Omega, Vec& u) {
        CorotatingField f = field_at(prob, Omega, eta, R_mask);
        return newton_fixed_omega(f, Omega, u, opt.newton_tol);
    };

    FRCBranch branch;
    Vec u0 = u_from_w(linear_seed(prob, Omega0, eta, R_mask));
    if (!solve_at(Omega0, u0)) {
        Vec uz = Vec::Zero(u0.size());
        if (!solve_at(Omega0, uz))
            throw ResponseError("continue_frc: no starting fixed point");
        u0 = uz;
    }
    {
        CorotatingField f = field_at(prob, Omega0, eta, R_mask);
        branch.points.push_back(make_point(prob, u0, Omega0, eta, f, opt));
    }

    double dir = (Omega1 >= Omega0) ? 1.0 : -1.0;
    double dOm = dir * 1e-3 * std::abs(Omega1 - Omega0);
    Vec u1 = u0;
    if (!solve_at(Omega0 + dOm, u1))
        throw ResponseError("continue_frc: second point failed");
    {
        CorotatingField f = field_at(prob, Omega0 + dOm, eta, R_mask);
        branch.points.push_back(make_point(prob, u1, Omega0 + dOm, eta, f, opt));
    }

    // pseudo-arclength with secant predictor; Omega scaled by w_scale
    auto pack_x = [&](const Vec& u, double Om) {
        Vec X(u.size() + 1);
        X << u, Om / w_scale;
        return X;
    };
    Vec Xprev = pack_x(u0, Omega0);
    Vec Xcur = pack_x(u1, Omega0 + dOm);
    double ds = (Xcur - Xprev).norm();
    double last_tang_om = (Xcur - Xprev)(Xcur.size() - 1);

    double lo = std::min(Omega0, Omega1), hi = std::max(Omega0, Omega1);
    double slack = 1e-6 * (hi - lo);

    for (int step = 0; step < opt.max_steps; ++step) {
        Vec tau = (Xcur - Xprev).normalized();
        bool accepted = false;
        Vec Xnew;
        while (!accepted) {
            Vec Xpred = Xcur + ds * tau;
            Xnew = Xpred;
            bool ok = false;
            for (int it = 0; it < 25; ++it) {
                double Om = Xnew(Xnew.size() - 1) * w_scale;
                Vec u = Xnew.head(Xnew.size() - 1);
                CorotatingField f = field_at(prob, Om, eta, R_mask);
                Vec F = f.eval(u, Om);
                double arc = tau.dot(Xnew - Xpred);
                double resid = std::sqrt(F.squaredNorm() + arc * arc);
                if (resid <= opt.newton_tol * (1.0 + u.norm())) { ok = true; break; }
                Mat Ju = f.jacobian(u, Om);
                // dF/dOmega by central difference (forcing can depend on Omega)
                double h = 1e-6 * w_scale;
                CorotatingField fp = field_at(prob, Om + h, eta, R_mask);
                CorotatingField fm = field_at(prob, Om - h, eta, R_mask);
                Vec dFdOm = (fp.eval(u, Om + h) - fm.eval(u, Om - h)) / (2.0 * h);
                Mat A(Xnew.size(), Xnew.size());
                A.topLeftCorner(Ju.rows(), Ju.cols()) = Ju;
                A.topRightCorner(Ju.rows(), 1) = dFdOm * w_scale;
                A.bottomRows(1) = tau.transpose();
                Vec rhs(Xnew.size());
                rhs << F, arc;
                Vec dX = Eigen::PartialPivLU<Mat>(A).solve(-rhs);
                if (!dX.allFinite()) break;
                Xnew += dX;
            }
            if (ok) {
                accepted = true;
            } else {
                ds *= 0.5;
                if (ds < opt.ds_min)
                    throw ResponseError("continue_frc: step size collapse at Omega " +
                                        std::to_string(Xcur(Xcur.size() - 1) * w_scale));
            }
        }
        Xprev = Xcur;
        Xcur = Xnew;
        ds = std::min(ds * 1.3, opt.ds_max);

        double Om = Xcur(Xcur.size() - 1) * w_scale;
        Vec u = Xcur.head(Xcur.size() - 1);
        CorotatingField f = field_at(prob, Om, eta, R_mask);
        FRCPoint pt = make_point(prob, u, Om, eta, f, opt);
        double tang_om = (Xcur - Xprev)(Xcur.size() - 1);
        if (tang_om * last_tang_om < 0.0) pt.fold = true;
        if (tang_om != 0.0) last_tang_om = tang_om;
        branch.points.push_back(pt);

        if (pt.rho.maxCoeff() > opt.amp_max) {
            branch.truncated_at_amp_max = true;
            break;
        }
        if (Om > hi + slack || Om < lo - slack) break;
    }
    return branch;
}

BackboneCurve backbone(const SsmRom& rom, const MechModel& model, double rho_max,
                       int n_rho, int n_theta) {
    if (rom.nf.m() != 1)
        throw ResponseError("backbone: implemented for 2D SSMs (m = 1)");
    PolarForm polar(rom.nf);
    BackboneCurve curve;
    for (int i = 1; i <= n_rho; ++i) {
        double rho = rho_max * static_cast<double>(i) / n_rho;
        Vec rv(1);
        rv(0) = rho;
        BackboneSample s;
        s.rho = rho;
        s.omega = polar.omega(0, rv);
        s.alpha = polar.alpha(0, rv);
        double smin = 1e300, smax = -1e300;
        for (int j = 0; j < n_theta; ++j) {
            double th = 2.0 * M_PI * j / n_theta;
            CVec z = NormalFormModel::pack(
                (CVec(1) << rho * std::exp(Complex(0, th))).finished());
            CVec y = rom.nf.y_from_z(z);
            CVec x = evaluate_parametrization(rom.chart, rom.v_nl, y);
            double obs = model.observe(x.real());
            smin = std::min(smin, obs);
            smax = std::max(smax, obs);
        }
        s.amp = 0.5 * (smax - smin);
        curve.samples.push_back(s);
    }
    return curve;
}

Trajectory simulate_rom(const SsmRom& rom, const Spectrum& spectrum,
                        const MechModel& model, const ForcingSpec* forcing,
                        const Vec& x0, double t0, double t1, double dt_out,
                        double tol, int correction_modes) {
    const NormalFormModel& nf = rom.nf;
    const int m = nf.m();
    const double eps = forcing ? forcing->eps() : 0.0;
    std::vector<RomHarmonic> harms;
    if (forcing && eps != 0.0)
        harms = lift_forcing(spectrum, rom.chart, model, nf, *forcing,
                             correction_modes);

    auto h1_sum = [&](double t) {
        CVec h = CVec::Zero(2 * m);
        for (const auto& rh : harms) h += rh.nf_forcing.h1(t);
        return h;
    };

    CVec y0 = rom.chart.W0 * x0.cast<Complex>();
    CVec z0 = nf.z_from_y(y0);
    if (!harms.empty()) z0 += eps * h1_sum(t0);
    Vec u0 = Vec(2 * m);
    u0 << z0.head(m).real(), z0.head(m).imag();

    OdeRhs f = [&](double t, const Vec& u) {
        CVec z = NormalFormModel::pack(w_from_u(u));
        CVec dz = nf.field(z).head(m);
        for (const auto& rh : harms)
            dz += eps * rh.nf_forcing.n1_of_t(t).head(m);
        Vec du(2 * m);
        du << dz.real(), dz.imag();
        return du;
    };

    Trajectory traj;
    traj.times = uniform_grid(t0, t1, dt_out);
    Mat U = rk45(f, u0, traj.times, tol);

    traj.states.resize(2 * model.n(), static_cast<Eigen::Index>(traj.times.size()));
    for (std::size_t j = 0; j < traj.times.size(); ++j) {
        double t = traj.times[j];
        CVec z = NormalFormModel::pack(w_from_u(U.col(static_cast<Eigen::Index>(j))));
        if (!harms.empty()) z -= eps * h1_sum(t);
        CVec y = nf.y_from_z(z);
        CVec x = evaluate_parametrization(rom.chart, rom.v_nl, y);
        for (const auto& rh : harms) {
            Complex ep = std::exp(Complex(0, rh.Omega * t));
            x += eps * (rh.v1 * ep + rh.v1.conjugate() * std::conj(ep));
        }
        traj.states.col(static_cast<Eigen::Index>(j)) = x.real();
    }
    return traj;
}

Trajectory reconstruct_periodic(const ForcedResponseProblem& prob,
                                const FRCPoint& pt, const std::vector<int>& eta,
                                int n_samples) {
    const SsmRom& rom = *prob.rom;
    const NormalFormModel& nf = rom.nf;
    const int m = nf.m();
    const double Omega = pt.Omega;
    const double T = 2.0 * M_PI / Omega;

    ReducedForcing rf = forcing_at(prob, Omega);
    NormalFormForcing nff = normal_form_forcing(nf, rf);
    CVec v1;
    if (rom.chart.style == ChartStyle::NonModal)
        v1 = nonmodal_forcing(rom.chart, *prob.model, prob.f0, Omega).v1;
    else
        v1 = manifold_correction(*prob.spectrum, rom.chart, *prob.model, prob.f0,
                                 Omega, 0);

    Trajectory traj;
    traj.times.resize(static_cast<std::size_t>(n_samples));
    traj.states.resize(2 * prob.model->n(), n_samples);
    for (int j = 0; j < n_samples; ++j) {
        double t = T * j / n_samples;
        traj.times[static_cast<std::size_t>(j)] = t;
        CVec zh(m);
        for (int k = 0; k < m; ++k)
            zh(k) = pt.w(k) * std::exp(Complex(0, eta[static_cast<std::size_t>(k)] * Omega * t));
        CVec z = NormalFormModel::pack(zh);
        z -= prob.eps * nff.h1(t);
        CVec y = nf.y_from_z(z);
        CVec x = evaluate_parametrization(rom.chart, rom.v_nl, y);
        Complex ep = std::exp(Complex(0, Omega * t));
        x += prob.eps * (v1 * ep + v1.conjugate() * std::conj(ep));
        traj.states.col(j) = x.real();
    }
    return traj;
}

std::pair<double, double> amp_phase(const Vec& signal, const std::vector<double>& t,
                                    double T) {
    const int nt = static_cast<int>(t.size());
    double smin = signal.minCoeff(), smax = signal.maxCoeff();
    Complex c1 = 0.0;
    for (int j = 0; j < nt; ++j)
        c1 += signal(j) * std::exp(Complex(0, -2.0 * M_PI * t[static_cast<std::size_t>(j)] / T));
    c1 *= 2.0 / static_cast<double>(nt);
    return {0.5 * (smax - smin), std::arg(c1)};
}

}  // namespace ssmred
