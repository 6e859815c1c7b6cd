#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ssmred/forcing.hpp"
#include "ssmred/integrate.hpp"

using namespace ssmred;

namespace {

MechModel chain(int n, double alpha, double beta) {
    Vec ks = Vec::Constant(n + 1, 1.0);
    Vec gs = Vec::Zero(n + 1);
    return build_oscillator_chain(n, ks, gs, alpha, beta);
}

// O(eps) invariance residual || A v1 + fhat - i Omega v1 - V0 r1 ||.
double invariance_residual(const MechModel& model, const ChartBasis& chart,
                           const CVec& v1, const CVec& r1, const Vec& f0,
                           double Omega) {
    const int n = model.n();
    CVec fhat = CVec::Zero(2 * n);
    fhat.tail(n) = (model.M().llt().solve(f0) / 2.0).cast<Complex>();
    CMat A = first_order_operator(model).cast<Complex>();
    return (A * v1 + fhat - Complex(0, Omega) * v1 - chart.V0 * r1).norm();
}

}  // namespace

TEST_CASE("reduce_forcing") {
    MechModel model = chain(3, 0.01, 0.002);
    Spectrum sp = compute_spectrum(model, 3);
    ChartBasis ch = build_chart(sp, {0, 1}, ChartStyle::ModalComplex);

    SUBCASE("force collinear with M u_j excites only mode j") {
        for (int j = 0; j < 2; ++j) {
            Vec f0 = model.M() * sp.U0.col(j);
            ReducedForcing rf = reduce_forcing(ch, model, f0, 1.0, 0.01);
            REQUIRE(rf.m() == 2);
            CHECK(std::abs(rf.g(j)) > 0.1);
            CHECK(std::abs(rf.g(1 - j)) < 1e-12);
            CHECK(rf.f(j) == doctest::Approx(std::abs(rf.g(j))));
            CHECK(rf.phi(j) == doctest::Approx(std::arg(rf.g(j)) - M_PI / 2.0));
        }
    }
    SUBCASE("zero force gives zero g") {
        ReducedForcing rf = reduce_forcing(ch, model, Vec::Zero(3), 1.0, 0.01);
        CHECK(rf.g.norm() == doctest::Approx(0.0));
    }
    SUBCASE("force at a mode node leaves that mode silent") {
        // mode 2 of the symmetric 3-chain has a node at the middle mass
        Vec f0 = Vec::Zero(3);
        f0(1) = 1.0;
        ReducedForcing rf = reduce_forcing(ch, model, f0, 1.0, 0.01);
        CHECK(std::abs(rf.g(1)) < 1e-12);
        CHECK(std::abs(rf.g(0)) > 1e-3);
    }
    SUBCASE("resonant band membership") {
        Vec f0 = Vec::Ones(3);
        double w1 = std::abs(ch.lambdas(0));
        ReducedForcing rf = reduce_forcing(ch, model, f0, w1 * 1.05, 0.01);
        CHECK(rf.resonant(0));
        CHECK_FALSE(rf.resonant(1));
        rf = reduce_forcing(ch, model, f0, w1 * 1.2, 0.01);
        CHECK_FALSE(rf.resonant(0));
    }
}

TEST_CASE("manifold_correction") {
    MechModel model = chain(2, 0.01, 0.002);
    Spectrum sp = compute_spectrum(model, 2);
    ChartBasis ch = build_chart(sp, {0}, ChartStyle::ModalComplex);

    SUBCASE("in-chart forcing produces no correction") {
        Vec f0 = model.M() * sp.U0.col(0);
        CVec v1 = manifold_correction(sp, ch, model, f0, 1.0, 0);
        CHECK(v1.norm() < 1e-12);
    }
    SUBCASE("Omega -> 0 reduces to the static out-of-chart correction") {
        Vec f0(2);
        f0 << 0.3, -0.5;
        CVec v1 = manifold_correction(sp, ch, model, f0, 0.0, 0);
        double w2 = sp.omega0(1);
        Vec expect = sp.U0.col(1) * (sp.U0.col(1).dot(f0) / 2.0) / (w2 * w2);
        CHECK((v1.head(2).real() - expect).norm() < 1e-12);
        CHECK(v1.head(2).imag().norm() < 1e-12);
        CHECK(v1.tail(2).norm() < 1e-12);  // velocity block i*0*vq
    }
    SUBCASE("W0 v1 = 0 and the mechanical velocity-block structure") {
        Vec f0(2);
        f0 << 1.0, 0.4;
        double Om = 0.9;
        CVec v1 = manifold_correction(sp, ch, model, f0, Om, 0);
        CHECK((ch.W0 * v1).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK((v1.tail(2) - Complex(0, Om) * v1.head(2)).norm() < 1e-12);
    }
    SUBCASE("resonance with an outer mode is an error") {
        // with vanishing damping the outer denominator actually hits zero
        MechModel weak = chain(2, 1e-12, 0.0);
        Spectrum spw = compute_spectrum(weak, 2);
        ChartBasis chw = build_chart(spw, {0}, ChartStyle::ModalComplex);
        Vec f0(2);
        f0 << 1.0, 0.0;
        CHECK_THROWS_AS(manifold_correction(spw, chw, weak, f0, spw.omega0(1), 0),
                        ForcingError);
    }
}

TEST_CASE("modal sum agrees with the direct linear solve on a 6-DOF chain") {
    MechModel model = chain(6, 0.01, 0.004);
    Spectrum sp = compute_spectrum(model, 6);
    ChartBasis ch = build_chart(sp, {0}, ChartStyle::ModalComplex);
    Vec f0(6);
    f0 << 1.0, -0.3, 0.2, 0.8, -0.5, 0.1;
    for (double Om : {0.4, 0.95, 2.2}) {
        CVec v23 = manifold_correction(sp, ch, model, f0, Om, 0);
        CVec v22 = manifold_correction_direct(model, ch, f0, Om);
        CHECK((v23 - v22).norm() <= 1e-8 * (1.0 + v22.norm()));
        // substituted into the O(eps) invariance equation
        CVec fhat = CVec::Zero(12);
        fhat.tail(6) = (model.M().llt().solve(f0) / 2.0).cast<Complex>();
        CVec r1 = ch.W0 * fhat;
        CHECK(invariance_residual(model, ch, v23, r1, f0, Om) <= 1e-8 * f0.norm());
    }
}

TEST_CASE("truncated modal sums converge monotonically to the full correction") {
    MechModel model = chain(8, 0.01, 0.002);
    Spectrum sp = compute_spectrum(model, 8);
    ChartBasis ch = build_chart(sp, {0}, ChartStyle::ModalComplex);
    Vec f0 = Vec::Ones(8);
    double Om = 0.8;
    CVec full = manifold_correction(sp, ch, model, f0, Om, 0);
    double prev = 1e300;
    for (int N : {1, 3, 5, 7}) {
        double err = (manifold_correction(sp, ch, model, f0, Om, N) - full).norm();
        CHECK(err <= prev + 1e-14);
        prev = err;
    }
    CHECK(prev < 1e-14);
}

TEST_CASE("normal_form_forcing splits harmonics by resonance") {
    NormalFormModel nf;
    nf.lambdas.resize(2);
    nf.lambdas << Complex(-0.01, 1.0), Complex(-0.02, 3.1);
    nf.P = CMat::Identity(4, 4);
    nf.Pinv = CMat::Identity(4, 4);

    ReducedForcing rf;
    rf.Omega = 1.02;
    rf.eps = 0.01;
    rf.g.resize(2);
    rf.g << Complex(0.0, 0.5), Complex(0.2, -0.1);
    rf.f = rf.g.cwiseAbs();
    rf.phi.resize(2);
    rf.in_R = {true, false};

    NormalFormForcing nff = normal_form_forcing(nf, rf);
    // resonant coordinate: forcing goes to n1, only the -Omega piece to h1
    CHECK(nff.n1(0) == rf.g(0));
    CHECK(std::abs(nff.gh_plus(0)) == 0.0);
    CHECK(nff.gh_minus(0) == rf.g(0) / (nf.lambdas(0) + Complex(0, rf.Omega)));
    // non-resonant coordinate: both harmonics into h1
    CHECK(std::abs(nff.n1(1)) == 0.0);
    CHECK(nff.gh_plus(1) == rf.g(1) / (nf.lambdas(1) - Complex(0, rf.Omega)));
    CHECK(nff.gh_minus(1) == rf.g(1) / (nf.lambdas(1) + Complex(0, rf.Omega)));
    // h1(t) and n1(t) carry conjugate bottom blocks
    CVec h = nff.h1(0.37);
    CHECK(std::abs(h(2) - std::conj(h(0))) < 1e-15);
    CVec n = nff.n1_of_t(0.37);
    CHECK(std::abs(n(3) - std::conj(n(1))) < 1e-15);

    SUBCASE("zero forcing maps to zero") {
        rf.g.setZero();
        rf.f.setZero();
        NormalFormForcing z = normal_form_forcing(nf, rf);
        CHECK(z.n1.norm() == 0.0);
        CHECK(z.gh_plus.norm() == 0.0);
        CHECK(z.gh_minus.norm() == 0.0);
    }
}

TEST_CASE("forced_polar_field matches the closed-form single-mode equations") {
    NormalFormModel nf;
    nf.lambdas.resize(1);
    nf.lambdas << Complex(-0.01, 1.0);
    nf.P = CMat::Identity(2, 2);
    nf.Pinv = CMat::Identity(2, 2);
    PolarForm polar(nf);

    ReducedForcing rf;
    rf.Omega = 0.98;
    rf.eps = 0.02;
    rf.g.resize(1);
    rf.g << Complex(0.1, 0.4);
    rf.f = rf.g.cwiseAbs();
    rf.phi.resize(1);
    rf.phi << std::arg(rf.g(0)) - M_PI / 2.0;
    rf.in_R = {true};

    Vec rho(1), theta(1), rd, td;
    rho << 0.2;
    theta << 1.1;
    double t = 0.6;
    forced_polar_field(polar, rf, t, rho, theta, rd, td);
    double f = rf.f(0), phi = rf.phi(0);
    double expect_rd = -0.01 * rho(0) - rf.eps * f * std::sin(rf.Omega * t + phi - theta(0));
    double expect_td = 1.0 + rf.eps * (f / rho(0)) * std::cos(rf.Omega * t + phi - theta(0));
    CHECK(rd(0) == doctest::Approx(expect_rd).epsilon(1e-12));
    CHECK(td(0) == doctest::Approx(expect_td).epsilon(1e-12));

    SUBCASE("unforced limit reduces to the autonomous polar field") {
        ReducedForcing zero = rf;
        zero.g.setZero();
        zero.f.setZero();
        forced_polar_field(polar, zero, t, rho, theta, rd, td);
        Vec rd0, td0;
        polar.eval(rho, theta, rd0, td0);
        CHECK(rd(0) == doctest::Approx(rd0(0)));
        CHECK(td(0) == doctest::Approx(td0(0)));
    }
    SUBCASE("rho = 0 with nonzero forcing is singular") {
        Vec rz = Vec::Zero(1);
        CHECK_THROWS_AS(forced_polar_field(polar, rf, t, rz, theta, rd, td),
                        ForcingError);
    }
}

TEST_CASE("nonmodal_forcing") {
    MechModel model = chain(2, 0.01, 0.002);
    Spectrum sp = compute_spectrum(model, 2);
    Vec f0(2);
    f0 << 1.0, -0.2;
    double Om = 0.85;

    SUBCASE("modal chart reproduces the modal quantities") {
        ChartBasis ch = build_chart(sp, {0}, ChartStyle::ModalComplex);
        NonModalForcing nmf = nonmodal_forcing(ch, model, f0, Om);
        CVec v1 = manifold_correction(sp, ch, model, f0, Om, 0);
        CHECK((nmf.v1 - v1).norm() <= 1e-10 * (1.0 + v1.norm()));
        CVec fhat = CVec::Zero(4);
        fhat.tail(2) = (model.M().llt().solve(f0) / 2.0).cast<Complex>();
        CHECK((nmf.r1 - ch.W0 * fhat).norm() <= 1e-10);
    }
    SUBCASE("zero forcing gives zero") {
        ChartBasis ch = build_chart(sp, {0}, ChartStyle::ModalComplex);
        NonModalForcing nmf = nonmodal_forcing(ch, model, Vec::Zero(2), Om);
        CHECK(nmf.v1.norm() == doctest::Approx(0.0));
        CHECK(nmf.r1.norm() == doctest::Approx(0.0));
    }
    SUBCASE("DOF-selector chart carries a genuine r1 correction") {
        Mat proj = dof_selector_projection(0, 2);
        ChartBasis ch = build_chart(sp, {0}, ChartStyle::NonModal, &proj);
        NonModalForcing nmf = nonmodal_forcing(ch, model, f0, Om);
        CVec fhat = CVec::Zero(4);
        fhat.tail(2) = (model.M().llt().solve(f0) / 2.0).cast<Complex>();
        CVec naive = ch.W0 * fhat;
        CHECK((nmf.r1 - naive).norm() > 1e-3 * naive.norm());
        // the pair still satisfies the O(eps) invariance equation
        CHECK(invariance_residual(model, ch, nmf.v1, nmf.r1, f0, Om) <=
              1e-8 * f0.norm());
    }
}

TEST_CASE("reconstructed physical forcing response is real") {
    MechModel model = chain(3, 0.01, 0.002);
    Spectrum sp = compute_spectrum(model, 3);
    ChartBasis ch = build_chart(sp, {0}, ChartStyle::ModalComplex);
    Vec f0(3);
    f0 << 0.5, 0.1, -0.7;
    double Om = 1.1;
    CVec v1 = manifold_correction(sp, ch, model, f0, Om, 0);
    for (double t : {0.0, 0.3, 1.7}) {
        CVec contrib = v1 * std::exp(Complex(0, Om * t));
        Vec phys = 2.0 * contrib.real();  // + conjugate harmonic
        CHECK(phys.allFinite());
        // imaginary parts cancel pairwise by construction of the +/- pair
        CVec total = contrib + contrib.conjugate();
        CHECK(total.imag().cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("lift_forcing assembles one RomHarmonic per positive harmonic") {
    MechModel model = chain(2, 0.01, 0.002);
    Spectrum sp = compute_spectrum(model, 2);
    ChartBasis ch = build_chart(sp, {0}, ChartStyle::ModalComplex);
    NormalFormModel nf;
    nf.lambdas = ch.lambdas;
    nf.P = ch.P;
    nf.Pinv = ch.P.inverse();

    Vec om(2);
    om << 0.9, 2.3;
    ForcingSpec spec(om, 0.01);
    CVec fa = (Vec(2) << 0.5, 0.0).finished().cast<Complex>();
    CVec fb = (Vec(2) << 0.0, 0.25).finished().cast<Complex>();
    spec.add_harmonic({1, 0}, fa);
    spec.add_harmonic({0, 1}, fb);

    auto harms = lift_forcing(sp, ch, model, nf, spec, 0);
    REQUIRE(harms.size() == 2);
    CHECK(harms[0].Omega == doctest::Approx(0.9));
    CHECK(harms[1].Omega == doctest::Approx(2.3));
    for (const auto& rh : harms) {
        CHECK((ch.W0 * rh.v1).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK(rh.rf.eps == doctest::Approx(0.01));
    }
}
