#include "ssmred/manifold_fit.hpp"

#include <Eigen/QR>
#include <cmath>

namespace ssmred {

namespace {

bool use_trajectory(const ReducedDataset& data, std::size_t i) {
    bool any_train = false;
    for (const auto& tag : data.split)
        if (tag == "train") { any_train = true; break; }
    return !any_train || data.split[i] == "train";
}

// Least squares coeffs (d_out x n_mono) for targets ~ coeffs * features,
// with features stacked as columns of G (n_mono x P).
CMat solve_regression(const CMat& G, const CMat& targets, double ridge,
                      double* rms) {
    const Eigen::Index n_mono = G.rows(), P = G.cols();
    CMat A(P + (ridge > 0.0 ? n_mono : 0), n_mono);
    CMat B(A.rows(), targets.rows());
    A.topRows(P) = G.transpose();
    B.topRows(P) = targets.transpose();
    if (ridge > 0.0) {
        A.bottomRows(n_mono) = std::sqrt(ridge) * CMat::Identity(n_mono, n_mono);
        B.bottomRows(n_mono).setZero();
    }
    CMat X = A.colPivHouseholderQr().solve(B);
    if (rms) {
        double r2 = (G.transpose() * X - targets.transpose()).squaredNorm();
        *rms = std::sqrt(r2 / static_cast<double>(P * targets.rows()));
    }
    return X.transpose();
}

}  // namespace

PolyMap fit_parametrization(const ReducedDataset& data, const ChartBasis& chart,
                            int order, double ridge, FitReport* report) {
    if (order < 2) throw FitError("fit_parametrization: order >= 2 required");
    const int d = 2 * chart.m();
    auto table = monomial_exponents(d, 2, order);

    // pair each kept full snapshot with its reduced sample by time match
    std::vector<CVec> feats;
    std::vector<CVec> targs;
    for (std::size_t i = 0; i < data.trajectories.size(); ++i) {
        if (!use_trajectory(data, i)) continue;
        const auto& rt = data.trajectories[i];
        std::size_t j = 0;
        for (std::size_t c = 0; c < rt.t_full.size(); ++c) {
            while (j < rt.t.size() && rt.t[j] != rt.t_full[c]) ++j;
            if (j >= rt.t.size())
                throw FitError("fit_parametrization: full/dense grid mismatch");
            CVec y = rt.y.col(static_cast<Eigen::Index>(j));
            feats.push_back(monomial_features(y, table));
            targs.push_back(rt.x_full.col(static_cast<Eigen::Index>(c)).cast<Complex>() -
                            chart.V0 * y);
        }
    }
    if (feats.size() < table.size())
        throw FitError("fit_parametrization: fewer samples than monomials");

    CMat G(static_cast<Eigen::Index>(table.size()), static_cast<Eigen::Index>(feats.size()));
    CMat D(chart.V0.rows(), static_cast<Eigen::Index>(feats.size()));
    for (std::size_t p = 0; p < feats.size(); ++p) {
        G.col(static_cast<Eigen::Index>(p)) = feats[p];
        D.col(static_cast<Eigen::Index>(p)) = targs[p];
    }
    double rms = 0.0;
    CMat coeffs = solve_regression(G, D, ridge, &rms);

    bool cpairs = chart.style != ChartStyle::ModalMechanical;
    PolyMap v_nl(d, static_cast<int>(chart.V0.rows()), table, std::move(coeffs), cpairs);
    if (report) {
        report->residual = rms;
        report->w0_vnl_max = v_nl.empty() ? 0.0
                             : (chart.W0 * v_nl.coeffs()).cwiseAbs().maxCoeff();
        report->n_samples = static_cast<int>(feats.size());
        report->n_monomials = static_cast<int>(table.size());
    }
    return v_nl;
}

PolyMap fit_reduced_dynamics(const ReducedDataset& data, const ChartBasis& chart,
                             int order, double ridge, FitReport* report) {
    if (order < 2) throw FitError("fit_reduced_dynamics: order >= 2 required");
    const int d = 2 * chart.m();
    auto table = monomial_exponents(d, 2, order);

    CMat y, ydot;
    bool any_train = false;
    for (const auto& tag : data.split)
        if (tag == "train") { any_train = true; break; }
    data.stacked(y, ydot, any_train ? "train" : "");
    if (ydot.cwiseAbs().maxCoeff() == 0.0)
        throw FitError("fit_reduced_dynamics: dataset has no derivatives; call differentiate()");
    const Eigen::Index P = y.cols();
    if (P < static_cast<Eigen::Index>(table.size()))
        throw FitError("fit_reduced_dynamics: fewer samples than monomials");

    CMat G(static_cast<Eigen::Index>(table.size()), P);
    for (Eigen::Index p = 0; p < P; ++p)
        G.col(p) = monomial_features(y.col(p), table);
    CMat D = ydot - chart.R0 * y;

    const bool mechanical = chart.style == ChartStyle::ModalMechanical;
    double rms = 0.0;
    CMat coeffs;
    if (mechanical) {
        // position rows obey y_head' = y_tail exactly; only fit the bottom half
        const int m = chart.m();
        CMat bottom = solve_regression(G, CMat(D.bottomRows(m)), ridge, &rms);
        coeffs = CMat::Zero(d, static_cast<Eigen::Index>(table.size()));
        coeffs.bottomRows(m) = bottom;
    } else {
        coeffs = solve_regression(G, D, ridge, &rms);
    }

    PolyMap r_nl(d, d, table, std::move(coeffs), !mechanical);
    if (report) {
        report->residual = rms;
        report->w0_vnl_max = 0.0;
        report->n_samples = static_cast<int>(P);
        report->n_monomials = static_cast<int>(table.size());
    }
    return r_nl;
}

CVec evaluate_parametrization(const ChartBasis& chart, const PolyMap& v_nl,
                              const CVec& y) {
    CVec x = chart.V0 * y;
    if (!v_nl.empty()) x += v_nl(y);
    return x;
}

CVec evaluate_reduced_field(const ChartBasis& chart, const PolyMap& r_nl,
                            const CVec& y) {
    CVec f = chart.R0 * y;
    if (!r_nl.empty()) f += r_nl(y);
    return f;
}

}  // namespace ssmred
