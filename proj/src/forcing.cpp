#include "ssmred/forcing.hpp"

#include <cmath>

#include "ssmred/spectral.hpp"

namespace ssmred {

namespace {

// fplus is the +Omega Fourier coefficient of the physical force (f0/2 for
// cosine forcing f0 cos(Omega t)).
ReducedForcing reduce_forcing_c(const ChartBasis& chart, const MechModel& model,
                                const CVec& fplus, double Omega, double eps,
                                double band_rel) {
    const int m = chart.m();
    CVec fhat = CVec::Zero(2 * model.n());
    fhat.tail(model.n()) = Eigen::LLT<Mat>(model.M()).solve(fplus.real()) +
                           Complex(0, 1) * Eigen::LLT<Mat>(model.M()).solve(fplus.imag());
    CVec g_full = chart.P.inverse() * (chart.W0 * fhat);

    ReducedForcing rf;
    rf.Omega = Omega;
    rf.eps = eps;
    rf.g = g_full.head(m);
    rf.f.resize(m);
    rf.phi.resize(m);
    rf.in_R.resize(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
        rf.f(k) = std::abs(rf.g(k));
        rf.phi(k) = std::arg(rf.g(k)) - M_PI / 2.0;
        double w0k = std::abs(chart.lambdas(k));
        rf.in_R[static_cast<std::size_t>(k)] = std::abs(w0k - Omega) <= band_rel * w0k;
    }
    return rf;
}

CVec manifold_correction_c(const Spectrum& spectrum, const ChartBasis& chart,
                           const MechModel& model, const CVec& fplus,
                           double kOmega, int N) {
    const int n = model.n();
    if (spectrum.proportional) {
        // modal sum over the conservative modes outside the chart; modes are
        // mass-normalized, so the modal force is just u_j^T fplus
        CVec vq = CVec::Zero(n);
        int used = 0;
        for (int j = 0; j < n; ++j) {
            bool in_chart = false;
            for (int mi : chart.mode_indices)
                if (mi == j) { in_chart = true; break; }
            if (in_chart) continue;
            if (N > 0 && used >= N) break;
            ++used;
            double w0 = spectrum.omega0(j);
            Complex den(w0 * w0 - kOmega * kOmega,
                        (spectrum.alpha + spectrum.beta * w0 * w0) * kOmega);
            if (std::abs(den) < 1e-8 * w0 * w0)
                throw ForcingError(
                    "manifold_correction: harmonic resonant with outer mode " +
                    std::to_string(j));
            Complex mf = spectrum.U0.col(j).cast<Complex>().transpose() * fplus;
            vq += (mf / den) * spectrum.U0.col(j).cast<Complex>();
        }
        CVec v1(2 * n);
        v1.head(n) = vq;
        v1.tail(n) = Complex(0, kOmega) * vq;
        return v1;
    }

    CVec fhat = CVec::Zero(2 * n);
    fhat.tail(n) = Eigen::LLT<Mat>(model.M()).solve(fplus.real()) +
                   Complex(0, 1) * Eigen::LLT<Mat>(model.M()).solve(fplus.imag());
    CVec v1 = CVec::Zero(2 * n);
    int used = 0;
    for (int j = 0; j < spectrum.n_pairs(); ++j) {
        bool in_chart = false;
        for (int mi : chart.mode_indices)
            if (mi == j) { in_chart = true; break; }
        if (in_chart) continue;
        if (N > 0 && used >= N) break;
        ++used;
        Complex lam = spectrum.lambda(j);
        if (std::abs(Complex(0, kOmega) - lam) < 1e-8 * std::abs(lam))
            throw ForcingError(
                "manifold_correction: harmonic resonant with outer mode " +
                std::to_string(j));
        Complex a = (spectrum.left.row(2 * j) * fhat)(0) / (Complex(0, kOmega) - lam);
        Complex b = (spectrum.left.row(2 * j + 1) * fhat)(0) /
                    (Complex(0, kOmega) - std::conj(lam));
        v1 += a * spectrum.right.col(2 * j) + b * spectrum.right.col(2 * j + 1);
    }
    return v1;
}

NonModalForcing nonmodal_forcing_c(const ChartBasis& chart, const MechModel& model,
                                   const CVec& fplus, double Omega) {
    const int n = model.n();
    CVec fhat = CVec::Zero(2 * n);
    fhat.tail(n) = Eigen::LLT<Mat>(model.M()).solve(fplus.real()) +
                   Complex(0, 1) * Eigen::LLT<Mat>(model.M()).solve(fplus.imag());
    CMat A = first_order_operator(model).cast<Complex>();
    CMat Pi = CMat::Identity(2 * n, 2 * n) - chart.V0 * chart.W0;  // I - V0 W0
    CMat lhs = Complex(0, Omega) * CMat::Identity(2 * n, 2 * n) - Pi * A;
    NonModalForcing out;
    out.v1 = lhs.partialPivLu().solve(Pi * fhat);
    out.r1 = chart.W0 * (A * out.v1) + chart.W0 * fhat;
    return out;
}

}  // namespace

ReducedForcing reduce_forcing(const ChartBasis& chart, const MechModel& model,
                              const Vec& f0, double Omega, double eps,
                              double band_rel) {
    return reduce_forcing_c(chart, model, (f0 / 2.0).cast<Complex>(), Omega, eps,
                            band_rel);
}

CVec manifold_correction(const Spectrum& spectrum, const ChartBasis& chart,
                         const MechModel& model, const Vec& f0, double kOmega,
                         int N) {
    return manifold_correction_c(spectrum, chart, model, (f0 / 2.0).cast<Complex>(),
                                 kOmega, N);
}

CVec manifold_correction_direct(const MechModel& model, const ChartBasis& chart,
                                const Vec& f0, double kOmega) {
    const int n = model.n();
    CVec fhat = CVec::Zero(2 * n);
    fhat.tail(n) = (model.M().llt().solve(f0) / 2.0).cast<Complex>();
    CMat A = first_order_operator(model).cast<Complex>();
    CMat lhs = A - Complex(0, kOmega) * CMat::Identity(2 * n, 2 * n);
    return lhs.partialPivLu().solve((chart.V0 * chart.W0 - CMat::Identity(2 * n, 2 * n)) * fhat);
}

CVec NormalFormForcing::h1(double t) const {
    const Eigen::Index m = n1.size();
    CVec out(2 * m);
    Complex ep = std::exp(Complex(0, Omega * t));
    out.head(m) = gh_plus * ep + gh_minus * std::conj(ep);
    out.tail(m) = out.head(m).conjugate();
    return out;
}

CVec NormalFormForcing::n1_of_t(double t) const {
    const Eigen::Index m = n1.size();
    CVec out(2 * m);
    Complex ep = std::exp(Complex(0, Omega * t));
    out.head(m) = n1 * ep;
    out.tail(m) = out.head(m).conjugate();
    return out;
}

NormalFormForcing normal_form_forcing(const NormalFormModel& nf,
                                      const ReducedForcing& rf) {
    const int m = nf.m();
    NormalFormForcing out;
    out.Omega = rf.Omega;
    out.n1 = CVec::Zero(m);
    out.gh_plus = CVec::Zero(m);
    out.gh_minus = CVec::Zero(m);
    for (int k = 0; k < m; ++k) {
        Complex lam = nf.lambdas(k);
        out.gh_minus(k) = rf.g(k) / (lam + Complex(0, rf.Omega));
        if (rf.resonant(k))
            out.n1(k) = rf.g(k);
        else
            out.gh_plus(k) = rf.g(k) / (lam - Complex(0, rf.Omega));
    }
    return out;
}

void forced_polar_field(const PolarForm& polar, const ReducedForcing& rf,
                        double t, const Vec& rho, const Vec& theta,
                        Vec& rhodot, Vec& thetadot) {
    polar.eval(rho, theta, rhodot, thetadot);
    Complex ep = std::exp(Complex(0, rf.Omega * t));
    for (int k = 0; k < polar.m(); ++k) {
        if (!rf.resonant(k) || rf.f(k) == 0.0) continue;
        Complex contrib = rf.eps * rf.g(k) * ep * std::exp(Complex(0, -theta(k)));
        rhodot(k) += contrib.real();
        if (rho(k) == 0.0)
            throw ForcingError("forced_polar_field: rho = 0 on a forced coordinate");
        thetadot(k) += contrib.imag() / rho(k);
    }
}

NonModalForcing nonmodal_forcing(const ChartBasis& chart, const MechModel& model,
                                 const Vec& f0, double Omega) {
    return nonmodal_forcing_c(chart, model, (f0 / 2.0).cast<Complex>(), Omega);
}

std::vector<RomHarmonic> lift_forcing(const Spectrum& spectrum, const ChartBasis& chart,
                                      const MechModel& model, const NormalFormModel& nf,
                                      const ForcingSpec& forcing, int N,
                                      double band_rel) {
    std::vector<RomHarmonic> out;
    for (const auto& h : forcing.harmonics()) {
        double Om = 0.0;
        for (std::size_t i = 0; i < h.k.size(); ++i)
            Om += h.k[i] * forcing.omega()(static_cast<Eigen::Index>(i));
        if (Om <= 0.0) continue;  // conjugate partners are implied
        RomHarmonic rh;
        rh.Omega = Om;
        if (chart.style == ChartStyle::NonModal) {
            NonModalForcing nmf = nonmodal_forcing_c(chart, model, h.coeff, Om);
            rh.v1 = nmf.v1;
            rh.rf.Omega = Om;
            rh.rf.eps = forcing.eps();
            rh.rf.g = (nf.Pinv * nmf.r1).head(chart.m());
            rh.rf.f.resize(chart.m());
            rh.rf.phi.resize(chart.m());
            rh.rf.in_R.resize(static_cast<std::size_t>(chart.m()));
            for (int k = 0; k < chart.m(); ++k) {
                rh.rf.f(k) = std::abs(rh.rf.g(k));
                rh.rf.phi(k) = std::arg(rh.rf.g(k)) - M_PI / 2.0;
                double w0k = std::abs(chart.lambdas(k));
                rh.rf.in_R[static_cast<std::size_t>(k)] =
                    std::abs(w0k - Om) <= band_rel * w0k;
            }
        } else {
            rh.rf = reduce_forcing_c(chart, model, h.coeff, Om, forcing.eps(), band_rel);
            rh.v1 = manifold_correction_c(spectrum, chart, model, h.coeff, Om, N);
        }
        rh.nf_forcing = normal_form_forcing(nf, rh.rf);
        out.push_back(std::move(rh));
    }
    return out;
}

}  // namespace ssmred
