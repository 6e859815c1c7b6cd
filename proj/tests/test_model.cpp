#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "ssmred/model.hpp"

using namespace ssmred;

TEST_CASE("single-mass chain reduces to the Duffing oscillator") {
    Vec k(1), g(1);
    k << 1.0;
    g << 0.5;
    MechModel model = build_oscillator_chain(1, k, g, 0.02, 0.0);

    CHECK(model.n() == 1);
    CHECK(model.M()(0, 0) == doctest::Approx(1.0));
    CHECK(model.C()(0, 0) == doctest::Approx(0.02));
    CHECK(model.K()(0, 0) == doctest::Approx(1.0));
    CHECK(model.proportional());
    CHECK(model.alpha() == doctest::Approx(0.02));

    Vec q(1);
    q << 2.0;
    CHECK(model.f_int(q)(0) == doctest::Approx(0.5 * 8.0));  // gamma q^3
    CHECK(model.f_int_jacobian(q)(0, 0) == doctest::Approx(1.5 * 4.0));
}

TEST_CASE("equal-spring 2-DOF chain has natural frequencies 1 and sqrt(3)") {
    Vec k(3), g(3);
    k << 1.0, 1.0, 1.0;
    g.setZero();
    MechModel model = build_oscillator_chain(2, k, g, 0.0, 0.0);

    Eigen::SelfAdjointEigenSolver<Mat> es(model.K());
    CHECK(std::sqrt(es.eigenvalues()(0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::sqrt(es.eigenvalues()(1)) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("stiffness profile (1,4,1) tunes an exact 1:3 frequency ratio") {
    Vec k(3), g(3);
    k << 1.0, 4.0, 1.0;
    g.setZero();
    MechModel model = build_oscillator_chain(2, k, g, 0.0, 0.0);

    Eigen::SelfAdjointEigenSolver<Mat> es(model.K());
    double w1 = std::sqrt(es.eigenvalues()(0));
    double w2 = std::sqrt(es.eigenvalues()(1));
    CHECK(w2 / w1 == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("fixed-free chain from an n-length stiffness profile") {
    Vec k(2), g(2);
    k << 2.0, 1.0;
    g.setZero();
    MechModel model = build_oscillator_chain(2, k, g, 0.0, 0.0);
    // no spring from mass 2 to ground: K = [[3,-1],[-1,1]]
    CHECK(model.K()(0, 0) == doctest::Approx(3.0));
    CHECK(model.K()(1, 1) == doctest::Approx(1.0));
    CHECK(model.K()(0, 1) == doctest::Approx(-1.0));
}

TEST_CASE("non-positive stiffness is rejected") {
    Vec k(2), g(2);
    k << 1.0, -1.0;
    g.setZero();
    CHECK_THROWS_AS(build_oscillator_chain(1, k, g, 0.0, 0.0), ModelError);
}

TEST_CASE("static_solve") {
    Vec k(1), g(1);
    k << 1.0;
    g << 0.5;
    MechModel duffing = build_oscillator_chain(1, k, g, 0.02, 0.0);

    SUBCASE("zero load gives the origin") {
        Vec q = static_solve(duffing, Vec::Zero(1));
        CHECK(q.norm() == doctest::Approx(0.0));
    }
    SUBCASE("q + 0.5 q^3 = 1.5 has root q = 1") {
        Vec load(1);
        load << 1.5;
        Vec q = static_solve(duffing, load);
        CHECK(q(0) == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("linear model reduces to K^{-1} load") {
        Vec k2(3), g2(3);
        k2 << 1.0, 2.0, 3.0;
        g2.setZero();
        MechModel lin = build_oscillator_chain(2, k2, g2, 0.0, 0.0);
        Vec load(2);
        load << 0.3, -0.7;
        Vec q = static_solve(lin, load);
        CHECK((lin.K() * q - load).norm() <= 1e-12 * (1.0 + load.norm()));
    }
}

TEST_CASE("modal_initial_condition places displacement along mass-normalized modes") {
    Vec k(3), g(3);
    k << 1.0, 1.0, 1.0;
    g.setZero();
    MechModel model = build_oscillator_chain(2, k, g, 0.0, 0.0);

    Vec x0 = modal_initial_condition(model, {{0, 0.4}});
    CHECK(x0.size() == 4);
    CHECK(x0.tail(2).norm() == doctest::Approx(0.0));
    // mode 1 of the symmetric chain: (1,1)/sqrt(2) mass-normalized
    CHECK(std::abs(x0(0)) == doctest::Approx(0.4 / std::sqrt(2.0)).epsilon(1e-10));
    CHECK(x0(0) == doctest::Approx(x0(1)).epsilon(1e-10));

    CHECK(modal_initial_condition(model, {{1, 0.0}}).norm() == doctest::Approx(0.0));

    // two-mode combination is the sum of the single-mode ones
    Vec xa = modal_initial_condition(model, {{0, 0.3}});
    Vec xb = modal_initial_condition(model, {{1, 0.2}});
    Vec xc = modal_initial_condition(model, {{0, 0.3}, {1, 0.2}});
    CHECK((xc - xa - xb).norm() <= 1e-12);
}

TEST_CASE("nonlinearity_ratio_scan") {
    Vec k(1), g(1);
    k << 1.0;
    g << 0.5;
    MechModel duffing = build_oscillator_chain(1, k, g, 0.0, 0.0);

    SUBCASE("Duffing at amplitude 1 gives ratio 1/3") {
        Vec a(1);
        a << 1.0;
        Vec r = nonlinearity_ratio_scan(duffing, 0, a);
        CHECK(r(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
    }
    SUBCASE("ratio scales like a^2 for small cubic amplitudes") {
        Vec a(2);
        a << 1e-3, 2e-3;
        Vec r = nonlinearity_ratio_scan(duffing, 0, a);
        CHECK(r(1) / r(0) == doctest::Approx(4.0).epsilon(1e-4));
    }
    SUBCASE("linear model gives zero ratios") {
        Vec k2(2), g2(2);
        k2 << 1.0, 1.0;
        g2.setZero();
        MechModel lin = build_oscillator_chain(1, k2, g2, 0.0, 0.0);
        Vec a(3);
        a << 0.1, 1.0, 10.0;
        CHECK(nonlinearity_ratio_scan(lin, 0, a).norm() == doctest::Approx(0.0));
    }
}

TEST_CASE("energy combines kinetic, elastic, and nonlinear potential terms") {
    Vec k(1), g(1);
    k << 1.0;
    g << 0.5;
    MechModel duffing = build_oscillator_chain(1, k, g, 0.0, 0.0);

    Vec x(2);
    x << 2.0, 3.0;
    // 0.5 v^2 + 0.5 k q^2 + gamma q^4 / 4
    CHECK(duffing.energy(x) == doctest::Approx(4.5 + 2.0 + 0.5 * 16.0 / 4.0));
    CHECK(duffing.energy(Vec::Zero(2)) == doctest::Approx(0.0));
}

TEST_CASE("rhs matches the first-order equations of motion") {
    Vec k(1), g(1);
    k << 1.0;
    g << 0.5;
    MechModel duffing = build_oscillator_chain(1, k, g, 0.02, 0.0);
    Vec x(2);
    x << 0.7, -0.1;
    Vec dx = duffing.rhs(x);
    CHECK(dx(0) == doctest::Approx(-0.1));
    CHECK(dx(1) == doctest::Approx(-(0.7 + 0.5 * 0.7 * 0.7 * 0.7) - 0.02 * (-0.1)));
}

TEST_CASE("proportional damping detection") {
    Mat M = Mat::Identity(2, 2);
    Mat K(2, 2);
    K << 2.0, -1.0, -1.0, 2.0;

    SUBCASE("alpha M + beta K is flagged with recovered coefficients") {
        Mat C = 0.01 * M + 0.002 * K;
        MechModel model(M, C, K);
        CHECK(model.proportional());
        CHECK(model.alpha() == doctest::Approx(0.01).epsilon(1e-10));
        CHECK(model.beta() == doctest::Approx(0.002).epsilon(1e-10));
    }
    SUBCASE("non-proportional damping is not flagged") {
        Mat C = Mat::Zero(2, 2);
        C(0, 0) = 0.05;
        MechModel model(M, C, K);
        CHECK_FALSE(model.proportional());
    }
}

TEST_CASE("cosine ForcingSpec produces eps f0 cos(Omega t)") {
    Vec f0(2);
    f0 << 1.0, -2.0;
    ForcingSpec spec = ForcingSpec::cosine(f0, 1.3, 0.01);
    for (double t : {0.0, 0.4, 2.9}) {
        Vec f = spec.force(t);
        CHECK((f - 0.01 * std::cos(1.3 * t) * f0).norm() <= 1e-14);
    }
}

TEST_CASE("ForcingSpec harmonics close under conjugation") {
    Vec omega(1);
    omega << 2.0;
    ForcingSpec spec(omega, 1.0);
    CVec fk(1);
    fk << Complex(0.5, 0.25);
    spec.add_harmonic({1}, fk);
    // physical force 2 Re(fk e^{i 2 t}) must be real by construction
    Vec f = spec.force(0.7);
    CHECK(f(0) == doctest::Approx(2.0 * (0.5 * std::cos(1.4) - 0.25 * std::sin(1.4))));
}
