#include "ssmred/integrate.hpp"

#include <algorithm>
#include <cmath>

namespace ssmred {

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

struct Stepper {
    const OdeRhs& f;
    double atol, rtol;
    Vec k1, k2, k3, k4, k5, k6, k7;

    Stepper(const OdeRhs& f_, double tol) : f(f_), atol(tol), rtol(tol) {}

    // One attempted step; returns error norm, fills xout. k1 must hold f(t, x).
    double step(double t, const Vec& x, double h, Vec& xout) {
        k2 = f(t + c2 * h, x + h * (a21 * k1));
        k3 = f(t + c3 * h, x + h * (a31 * k1 + a32 * k2));
        k4 = f(t + c4 * h, x + h * (a41 * k1 + a42 * k2 + a43 * k3));
        k5 = f(t + c5 * h, x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        k6 = f(t + h, x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        xout = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        k7 = f(t + h, xout);
        Vec err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        double en = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            double sc = atol + rtol * std::max(std::abs(x(i)), std::abs(xout(i)));
            en = std::max(en, std::abs(err(i)) / sc);
        }
        return en;
    }
};

}  // namespace

std::vector<double> uniform_grid(double t0, double t1, double dt) {
    int nt = static_cast<int>(std::round((t1 - t0) / dt));
    std::vector<double> out(static_cast<std::size_t>(nt) + 1);
    for (int i = 0; i <= nt; ++i) out[static_cast<std::size_t>(i)] = t0 + i * dt;
    return out;
}

Mat rk45(const OdeRhs& f, const Vec& x0, const std::vector<double>& out_times,
         double tol) {
    if (out_times.size() < 2) throw IntegrationError("rk45: need at least two output times", 0.0);
    const Eigen::Index dim = x0.size();
    Mat out(dim, static_cast<Eigen::Index>(out_times.size()));
    out.col(0) = x0;

    Stepper st(f, tol);
    double t = out_times.front();
    Vec x = x0;
    st.k1 = f(t, x);
    double span = out_times.back() - t;
    double h = span / 100.0;
    const double hmin = span * 1e-14;
    Vec xnew(dim);

    std::size_t next = 1;
    while (next < out_times.size()) {
        double t_target = out_times[next];
        bool hit = false;
        if (t + h >= t_target) {
            h = t_target - t;
            hit = true;
        }
        double err = st.step(t, x, h, xnew);
        if (err <= 1.0) {
            t = hit ? t_target : t + h;
            x = xnew;
            st.k1 = st.k7;  // FSAL
            if (hit) {
                out.col(static_cast<Eigen::Index>(next)) = x;
                ++next;
            }
            double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
            h *= std::min(5.0, std::max(0.2, fac));
        } else {
            h *= std::max(0.1, 0.9 * std::pow(err, -0.2));
        }
        if (h < hmin || !x.allFinite())
            throw IntegrationError("rk45: step-size collapse", t);
    }
    return out;
}

Trajectory integrate(const MechModel& model, const ForcingSpec* forcing,
                     const Vec& x0, double t0, double t1, double tol,
                     double dt_out) {
    if (tol <= 0.0) throw IntegrationError("integrate: tol must be positive", t0);
    // local-error accumulation over long spans: tighten the per-step control
    // so the global drift stays within ~10 tol of the requested tolerance
    double local_tol = tol / std::max(1.0, t1 - t0);
    const int n = model.n();
    Eigen::LLT<Mat> Mfac(model.M());
    OdeRhs f = [&](double t, const Vec& x) {
        Vec dx = model.rhs(x);
        if (forcing && forcing->harmonics().size() > 0) {
            Vec fe = forcing->force(t);
            dx.tail(n) += Mfac.solve(fe);
        }
        return dx;
    };
    Trajectory traj;
    traj.times = uniform_grid(t0, t1, dt_out);
    traj.states = rk45(f, x0, traj.times, local_tol);
    return traj;
}

Trajectory newmark(const MechModel& model, const ForcingSpec* forcing,
                   const Vec& x0, double t0, double t1, double dt) {
    // average-acceleration Newmark (beta = 1/4, gamma = 1/2) with Newton on
    // the nonlinear internal force
    const int n = model.n();
    const double beta = 0.25, gamma = 0.5;
    Vec q = x0.head(n), v = x0.tail(n);
    Eigen::LLT<Mat> Mfac(model.M());
    auto ext = [&](double t) {
        if (forcing && forcing->harmonics().size() > 0) return forcing->force(t);
        return Vec(Vec::Zero(n));
    };
    Vec a = Mfac.solve(ext(t0) - model.C() * v - model.K() * q - model.f_int(q));

    std::vector<double> times = uniform_grid(t0, t1, dt);
    Mat states(2 * n, static_cast<Eigen::Index>(times.size()));
    states.col(0) << q, v;

    for (std::size_t i = 1; i < times.size(); ++i) {
        double t = times[i];
        Vec qp = q + dt * v + dt * dt * (0.5 - beta) * a;  // predictors
        Vec vp = v + dt * (1.0 - gamma) * a;
        Vec qn = qp + dt * dt * beta * a;  // initial guess: constant acceleration
        Vec fe = ext(t);
        bool converged = false;
        for (int it = 0; it < 30; ++it) {
            Vec an = (qn - qp) / (dt * dt * beta);
            Vec vn = vp + dt * gamma * an;
            Vec r = model.M() * an + model.C() * vn + model.K() * qn + model.f_int(qn) - fe;
            // roundoff floor of an = (qn - qp)/(dt^2 beta) dominates at small dt
            double floor_an = 1e-13 * qn.cwiseAbs().maxCoeff() / (dt * dt * beta);
            double scale = (model.M() * an).norm() + (model.K() * qn).norm() + fe.norm();
            if (r.norm() <= 1e-10 * (1.0 + scale) + floor_an) {
                converged = true;
                break;
            }
            Mat Keff = model.M() / (dt * dt * beta) + model.C() * (gamma / (dt * beta)) +
                       model.K() + model.f_int_jacobian(qn);
            qn -= Eigen::PartialPivLU<Mat>(Keff).solve(r);
        }
        if (!converged) throw IntegrationError("newmark: Newton failed", t);
        a = (qn - qp) / (dt * dt * beta);
        v = vp + dt * gamma * a;
        q = qn;
        states.col(static_cast<Eigen::Index>(i)) << q, v;
    }
    return Trajectory{std::move(times), std::move(states), 1};
}

}  // namespace ssmred
