#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ssmred/integrate.hpp"
#include "ssmred/manifold_fit.hpp"

using namespace ssmred;

namespace {

MechModel chain(int n, double alpha, double beta, double gamma = 0.0) {
    Vec ks = Vec::Constant(n + 1, 1.0);
    Vec gs = Vec::Constant(n + 1, gamma);
    return build_oscillator_chain(n, ks, gs, alpha, beta);
}

// Dataset lying exactly on a synthetic polynomial graph x = V0 y + V* phi(y),
// with reduced dynamics ydot = R0 y (kinematics only; good enough for the
// parametrization fit).
ReducedDataset synthetic_graph(const ChartBasis& ch, const CMat& Vstar,
                               const std::vector<Exponents>& table, int n_samples,
                               unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unif(-0.5, 0.5);
    ReducedDataset ds;
    ds.m = ch.m();
    ReducedTrajectory rt;
    const int m2 = 2 * ch.m();
    rt.y.resize(m2, n_samples);
    rt.x_full.resize(ch.V0.rows(), n_samples);
    for (int j = 0; j < n_samples; ++j) {
        CVec z(m2);
        for (int k = 0; k < ch.m(); ++k) {
            Complex v(unif(rng), unif(rng));
            z(k) = v;
            z(ch.m() + k) = std::conj(v);
        }
        rt.y.col(j) = z;
        rt.t.push_back(0.01 * j);
        rt.t_full.push_back(0.01 * j);
        CVec x = ch.V0 * z + Vstar * monomial_features(z, table);
        rt.x_full.col(j) = x.real();
    }
    rt.ydot = CMat::Zero(m2, n_samples);
    rt.s = Vec::Zero(n_samples);
    ds.trajectories.push_back(std::move(rt));
    ds.split.push_back("train");
    return ds;
}

// In-subspace coefficient matrix with W0 Vstar = 0 (so the graph is a valid
// SSM-style geometry and exactly recoverable).
CMat orthogonal_coeffs(const ChartBasis& ch, int n_mono, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const Eigen::Index twon = ch.V0.rows();
    CMat raw(twon, n_mono);
    for (Eigen::Index i = 0; i < twon; ++i)
        for (int j = 0; j < n_mono; ++j) raw(i, j) = Complex(unif(rng), unif(rng));
    // project out the chart subspace component
    return raw - ch.V0 * (ch.W0 * raw);
}

}  // namespace

TEST_CASE("known polynomial graph is recovered to 1e-8") {
    MechModel model = chain(3, 0.01, 0.002);
    Spectrum sp = compute_spectrum(model, 3);
    ChartBasis ch = build_chart(sp, {0}, ChartStyle::ModalComplex);
    auto table = monomial_exponents(2, 2, 3);
    CMat Vstar = orthogonal_coeffs(ch, static_cast<int>(table.size()), 7u);
    // keep outputs real-compatible: columns for conjugate tuples conjugated
    for (std::size_t i = 0; i < table.size(); ++i) {
        int ci = find_exponents(table, conjugate_tuple(table[i]));
        Vstar.col(static_cast<Eigen::Index>(i)) =
            0.5 * (Vstar.col(static_cast<Eigen::Index>(i)) +
                   Vstar.col(ci).conjugate());
        Vstar.col(ci) = Vstar.col(static_cast<Eigen::Index>(i)).conjugate();
    }
    ReducedDataset ds = synthetic_graph(ch, Vstar, table, 400, 3u);

    FitReport rep;
    PolyMap v_nl = fit_parametrization(ds, ch, 3, 0.0, &rep);
    REQUIRE(v_nl.table() == table);
    CHECK((v_nl.coeffs() - Vstar).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(rep.residual < 1e-8);
    CHECK(rep.w0_vnl_max <= 1e-10);

    // evaluate() composes back to the sampled graph
    CVec y = ds.trajectories[0].y.col(5);
    CVec x = evaluate_parametrization(ch, v_nl, y);
    CHECK((x.real() - ds.trajectories[0].x_full.col(5)).norm() < 1e-8);
    CHECK(x.imag().norm() < 1e-10);
}

TEST_CASE("linear decay data gives a flat manifold and linear dynamics") {
    MechModel model = chain(3, 0.01, 0.002);
    Spectrum sp = compute_spectrum(model, 3);
    ChartBasis ch = build_chart(sp, {0}, ChartStyle::ModalComplex);
    Vec x0 = modal_initial_condition(model, {{0, 0.4}});
    Trajectory traj = integrate(model, nullptr, x0, 0.0, 60.0, 1e-11, 0.01);
    ReducedDataset ds;
    ds.m = 1;
    ds.trajectories.push_back(project(traj, ch, model));
    ds.split.push_back("train");
    differentiate(ds);

    PolyMap v_nl = fit_parametrization(ds, ch, 3);
    CHECK(v_nl.coeffs().cwiseAbs().maxCoeff() < 1e-8 * ch.V0.norm());

    PolyMap r_nl = fit_reduced_dynamics(ds, ch, 3);
    CHECK(r_nl.coeffs().cwiseAbs().maxCoeff() < 1e-8);

    CVec y = ds.trajectories[0].y.col(10);
    CVec dy = evaluate_reduced_field(ch, r_nl, y);
    CHECK((dy - ch.R0 * y).norm() < 1e-6 * y.norm());
}

TEST_CASE("orthogonality property holds for unregularized full-rank fits") {
    MechModel model = chain(4, 0.005, 0.004, 0.4);
    Spectrum sp = compute_spectrum(model, 4);
    ChartBasis ch = build_chart(sp, {0}, ChartStyle::ModalComplex);
    Vec x0 = modal_initial_condition(model, {{0, 0.6}});
    Trajectory traj = integrate(model, nullptr, x0, 0.0, 120.0, 1e-10, 0.05);
    ReducedDataset ds;
    ds.m = 1;
    ds.trajectories.push_back(project(traj, ch, model, 5));
    ds.split.push_back("train");
    differentiate(ds);
    for (int order : {2, 3, 5}) {
        FitReport rep;
        fit_parametrization(ds, ch, order, 0.0, &rep);
        CHECK(rep.w0_vnl_max <= 1e-10);
    }
}

TEST_CASE("modal-mechanical chart forces the first m dynamic rows to zero") {
    MechModel model = chain(2, 0.004, 0.0, 0.5);
    Spectrum sp = compute_spectrum(model, 2);
    ChartBasis ch = build_chart(sp, {0}, ChartStyle::ModalMechanical);
    Vec x0 = modal_initial_condition(model, {{0, 0.5}});
    Trajectory traj = integrate(model, nullptr, x0, 0.0, 120.0, 1e-10, 0.05);
    ReducedDataset ds;
    ds.m = 1;
    ds.trajectories.push_back(project(traj, ch, model));
    ds.split.push_back("train");
    differentiate(ds);
    PolyMap r_nl = fit_reduced_dynamics(ds, ch, 3);
    CHECK(r_nl.coeffs().row(0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("1-DOF Duffing mechanical chart recovers the cubic coefficient") {
    // single-DOF system: the SSM is the whole phase space and the reduced
    // dynamics must reproduce q" = -q - gamma q^3 - c q'
    double gamma = 0.5;
    Vec ks(1), gs(1);
    ks << 1.0;
    gs << gamma;
    MechModel model = build_oscillator_chain(1, ks, gs, 0.004, 0.0);
    Spectrum sp = compute_spectrum(model, 1);
    ChartBasis ch = build_chart(sp, {0}, ChartStyle::ModalMechanical);
    Vec x0 = modal_initial_condition(model, {{0, 0.5}});
    Trajectory traj = integrate(model, nullptr, x0, 0.0, 200.0, 1e-11, 0.02);
    ReducedDataset ds;
    ds.m = 1;
    ds.trajectories.push_back(project(traj, ch, model));
    ds.split.push_back("train");
    differentiate(ds);
    PolyMap r_nl = fit_reduced_dynamics(ds, ch, 3);
    int icube = find_exponents(r_nl.table(), {3, 0});
    REQUIRE(icube >= 0);
    CHECK(r_nl.coeffs()(1, icube).real() == doctest::Approx(-gamma).epsilon(0.01));
}

TEST_CASE("scaling equivariance of the regression at order 3") {
    MechModel model = chain(3, 0.01, 0.002);
    Spectrum sp = compute_spectrum(model, 3);
    ChartBasis ch = build_chart(sp, {0}, ChartStyle::ModalComplex);
    auto table = monomial_exponents(2, 2, 3);
    CMat Vstar = orthogonal_coeffs(ch, static_cast<int>(table.size()), 11u);
    ReducedDataset ds = synthetic_graph(ch, Vstar, table, 300, 5u);
    PolyMap v1 = fit_parametrization(ds, ch, 3);

    double c = 0.5;
    ReducedDataset scaled = ds;
    for (auto& rt : scaled.trajectories) {
        rt.y *= c;
        rt.x_full *= c;
    }
    PolyMap v2 = fit_parametrization(scaled, ch, 3);
    for (std::size_t i = 0; i < table.size(); ++i) {
        double expect = std::pow(c, 1 - total_degree(table[i]));
        CMat col1 = v1.coeffs().col(static_cast<Eigen::Index>(i));
        CMat col2 = v2.coeffs().col(static_cast<Eigen::Index>(i));
        CHECK((col2 - expect * col1).cwiseAbs().maxCoeff() < 1e-6 * col1.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("rank-deficient fit without ridge is rejected") {
    MechModel model = chain(2, 0.01, 0.0);
    Spectrum sp = compute_spectrum(model, 2);
    ChartBasis ch = build_chart(sp, {0}, ChartStyle::ModalComplex);
    // a handful of identical samples cannot support an order-5 fit
    ReducedDataset ds;
    ds.m = 1;
    ReducedTrajectory rt;
    rt.y = CMat::Zero(2, 6);
    for (int j = 0; j < 6; ++j) {
        rt.y(0, j) = Complex(0.1, 0.1);
        rt.y(1, j) = Complex(0.1, -0.1);
        rt.t.push_back(0.1 * j);
        rt.t_full.push_back(0.1 * j);
    }
    rt.x_full = Mat::Zero(ch.V0.rows(), 6);
    rt.ydot = CMat::Zero(2, 6);
    rt.s = Vec::Zero(6);
    ds.trajectories.push_back(std::move(rt));
    ds.split.push_back("train");
    CHECK_THROWS_AS(fit_parametrization(ds, ch, 5), FitError);
}

TEST_CASE("v(0) = 0") {
    MechModel model = chain(2, 0.01, 0.0);
    Spectrum sp = compute_spectrum(model, 2);
    ChartBasis ch = build_chart(sp, {0}, ChartStyle::ModalComplex);
    auto table = monomial_exponents(2, 2, 3);
    CMat Vstar = orthogonal_coeffs(ch, static_cast<int>(table.size()), 2u);
    ReducedDataset ds = synthetic_graph(ch, Vstar, table, 200, 9u);
    PolyMap v_nl = fit_parametrization(ds, ch, 3);
    CHECK(evaluate_parametrization(ch, v_nl, CVec::Zero(2)).norm() ==
          doctest::Approx(0.0));
}
