#include "ssmred/trajectory_data.hpp"

#include <algorithm>
#include <cmath>

#include "ssmred/integrate.hpp"

namespace ssmred {

int ReducedDataset::n_samples() const {
    int p = 0;
    for (const auto& rt : trajectories) p += static_cast<int>(rt.t.size());
    return p;
}

void ReducedDataset::stacked(CMat& y, CMat& ydot, const std::string& tag) const {
    int p = 0;
    for (std::size_t i = 0; i < trajectories.size(); ++i)
        if (tag.empty() || split[i] == tag) p += static_cast<int>(trajectories[i].t.size());
    if (p == 0) throw DataError("stacked: no samples with tag '" + tag + "'");
    const Eigen::Index dim = trajectories.front().y.rows();
    y.resize(dim, p);
    ydot.resize(dim, p);
    Eigen::Index col = 0;
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        if (!tag.empty() && split[i] != tag) continue;
        const auto& rt = trajectories[i];
        y.middleCols(col, rt.y.cols()) = rt.y;
        if (rt.has_ydot())
            ydot.middleCols(col, rt.y.cols()) = rt.ydot;
        else
            ydot.middleCols(col, rt.y.cols()).setZero();
        col += rt.y.cols();
    }
}

Trajectory truncate_transient(const Trajectory& traj, const ChartBasis& chart,
                              double n_periods) {
    if (n_periods < 0.0) throw DataError("truncate_transient: n_periods >= 0 required");
    double w_slow = 1e300;
    for (int k = 0; k < chart.m(); ++k)
        w_slow = std::min(w_slow, std::abs(chart.lambdas(k).imag()));
    double t_cut = traj.times.front() + n_periods * (2.0 * M_PI / w_slow);
    std::size_t first = 0;
    while (first < traj.times.size() && traj.times[first] < t_cut) ++first;
    if (first >= traj.times.size())
        throw DataError("truncate_transient: nothing left after truncation");
    Trajectory out;
    out.times.assign(traj.times.begin() + static_cast<long>(first), traj.times.end());
    out.states = traj.states.rightCols(traj.states.cols() - static_cast<Eigen::Index>(first));
    out.stride_full = traj.stride_full;
    return out;
}

ReducedTrajectory project(const Trajectory& traj, const ChartBasis& chart,
                          const MechModel& model, int stride) {
    if (chart.W0.cols() != traj.states.rows())
        throw DataError("project: chart/state dimension mismatch");
    if (stride < 1) throw DataError("project: stride >= 1 required");
    ReducedTrajectory rt;
    rt.t = traj.times;
    rt.y = chart.W0 * traj.states.cast<Complex>();
    rt.s.resize(traj.n_samples());
    for (int j = 0; j < traj.n_samples(); ++j)
        rt.s(j) = model.observe(traj.states.col(j));
    const int nf = (traj.n_samples() + stride - 1) / stride;
    rt.t_full.reserve(static_cast<std::size_t>(nf));
    rt.x_full.resize(traj.states.rows(), nf);
    for (int j = 0, c = 0; j < traj.n_samples(); j += stride, ++c) {
        rt.t_full.push_back(traj.times[static_cast<std::size_t>(j)]);
        rt.x_full.col(c) = traj.states.col(j);
    }
    return rt;
}

void differentiate(ReducedTrajectory& rt) {
    const int nt = static_cast<int>(rt.t.size());
    if (nt < 5) throw DataError("differentiate: need at least 5 samples");
    double dt = rt.t[1] - rt.t[0];
    for (int j = 1; j + 1 < nt; ++j)
        if (std::abs((rt.t[static_cast<std::size_t>(j) + 1] - rt.t[static_cast<std::size_t>(j)]) - dt) > 1e-8 * dt)
            throw DataError("differentiate: non-uniform grid, resample first");
    rt.ydot.resize(rt.y.rows(), nt);
    const auto& y = rt.y;
    // 4th-order central differences, one-sided closures at the ends
    for (int j = 0; j < nt; ++j) {
        if (j >= 2 && j < nt - 2) {
            rt.ydot.col(j) =
                (y.col(j - 2) - 8.0 * y.col(j - 1) + 8.0 * y.col(j + 1) - y.col(j + 2)) /
                (12.0 * dt);
        } else if (j < 2) {
            rt.ydot.col(j) = (-25.0 * y.col(j) + 48.0 * y.col(j + 1) - 36.0 * y.col(j + 2) +
                              16.0 * y.col(j + 3) - 3.0 * y.col(j + 4)) /
                             (12.0 * dt);
        } else {
            rt.ydot.col(j) = (25.0 * y.col(j) - 48.0 * y.col(j - 1) + 36.0 * y.col(j - 2) -
                              16.0 * y.col(j - 3) + 3.0 * y.col(j - 4)) /
                             (12.0 * dt);
        }
    }
}

void differentiate(ReducedDataset& ds) {
    for (auto& rt : ds.trajectories) differentiate(rt);
}

CubicSpline::CubicSpline(const std::vector<double>& t, const Vec& values) : t_(t) {
    const int n = static_cast<int>(t.size());
    if (n < 2 || values.size() != n) throw DataError("CubicSpline: bad input");
    a_ = values;
    b_.resize(n); c_.resize(n); d_.resize(n);
    if (n == 2) {
        c_.setZero(); d_.setZero();
        b_(0) = b_(1) = (a_(1) - a_(0)) / (t[1] - t[0]);
        return;
    }
    // natural spline tridiagonal solve
    Vec h(n - 1);
    for (int i = 0; i < n - 1; ++i) h(i) = t[static_cast<std::size_t>(i) + 1] - t[static_cast<std::size_t>(i)];
    Vec alpha = Vec::Zero(n);
    for (int i = 1; i < n - 1; ++i)
        alpha(i) = 3.0 * ((a_(i + 1) - a_(i)) / h(i) - (a_(i) - a_(i - 1)) / h(i - 1));
    Vec l(n), mu(n), z(n);
    l(0) = 1.0; mu(0) = 0.0; z(0) = 0.0;
    for (int i = 1; i < n - 1; ++i) {
        l(i) = 2.0 * (t[static_cast<std::size_t>(i) + 1] - t[static_cast<std::size_t>(i) - 1]) - h(i - 1) * mu(i - 1);
        mu(i) = h(i) / l(i);
        z(i) = (alpha(i) - h(i - 1) * z(i - 1)) / l(i);
    }
    l(n - 1) = 1.0; z(n - 1) = 0.0; c_(n - 1) = 0.0;
    for (int i = n - 2; i >= 0; --i) {
        c_(i) = z(i) - mu(i) * c_(i + 1);
        b_(i) = (a_(i + 1) - a_(i)) / h(i) - h(i) * (c_(i + 1) + 2.0 * c_(i)) / 3.0;
        d_(i) = (c_(i + 1) - c_(i)) / (3.0 * h(i));
    }
}

double CubicSpline::operator()(double t) const {
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    int i = static_cast<int>(std::distance(t_.begin(), it)) - 1;
    i = std::clamp(i, 0, static_cast<int>(t_.size()) - 2);
    double dx = t - t_[static_cast<std::size_t>(i)];
    return a_(i) + dx * (b_(i) + dx * (c_(i) + dx * d_(i)));
}

double nmte(const Trajectory& predicted, const Trajectory& reference,
            const Vec* normalization) {
    const Eigen::Index dim = reference.states.rows();
    if (predicted.states.rows() != dim) throw DataError("nmte: dimension mismatch");
    // cubic-interpolate the prediction onto the reference grid
    std::vector<CubicSpline> splines;
    splines.reserve(static_cast<std::size_t>(dim));
    for (Eigen::Index r = 0; r < dim; ++r)
        splines.emplace_back(predicted.times, Vec(predicted.states.row(r).transpose()));

    double norm;
    if (normalization) {
        norm = normalization->norm();
    } else {
        norm = 0.0;
        for (int j = 0; j < reference.n_samples(); ++j)
            norm = std::max(norm, reference.states.col(j).norm());
    }
    if (norm == 0.0) throw DataError("nmte: zero normalization");

    double acc = 0.0;
    for (int j = 0; j < reference.n_samples(); ++j) {
        double t = reference.times[static_cast<std::size_t>(j)];
        Vec xh(dim);
        for (Eigen::Index r = 0; r < dim; ++r) xh(r) = splines[static_cast<std::size_t>(r)](t);
        acc += (reference.states.col(j) - xh).norm();
    }
    return 100.0 * acc / (reference.n_samples() * norm);
}

Vec one_step_error(const ReducedTrajectory& rt,
                   const std::function<CVec(double, const CVec&)>& rom_rhs,
                   double tol) {
    const int nt = static_cast<int>(rt.t.size());
    double ymax = 0.0;
    for (int j = 0; j < nt; ++j) ymax = std::max(ymax, rt.y.col(j).norm());
    if (ymax == 0.0) return Vec::Zero(std::max(nt - 1, 0));
    Vec err(nt - 1);
    const Eigen::Index d = rt.y.rows();
    OdeRhs f = [&](double t, const Vec& u) {
        CVec yc(d);
        for (Eigen::Index i = 0; i < d; ++i) yc(i) = Complex(u(i), u(d + i));
        CVec dy = rom_rhs(t, yc);
        Vec du(2 * d);
        du << dy.real(), dy.imag();
        return du;
    };
    for (int j = 0; j + 1 < nt; ++j) {
        Vec u0(2 * d);
        u0 << rt.y.col(j).real(), rt.y.col(j).imag();
        std::vector<double> tt = {rt.t[static_cast<std::size_t>(j)], rt.t[static_cast<std::size_t>(j) + 1]};
        Mat sol = rk45(f, u0, tt, tol);
        CVec y1(d);
        for (Eigen::Index i = 0; i < d; ++i) y1(i) = Complex(sol(i, 1), sol(d + i, 1));
        err(j) = (rt.y.col(j + 1) - y1).norm() / ymax;
    }
    return err;
}

std::vector<BackbonePoint> extract_backbone_pff(const Vec& signal,
                                                const std::vector<double>& t) {
    const int nt = static_cast<int>(t.size());
    struct Peak { double t, v; };
    std::vector<Peak> peaks;  // local extrema of either sign
    for (int j = 1; j + 1 < nt; ++j) {
        double a = signal(j - 1), b = signal(j), c = signal(j + 1);
        bool is_max = b > a && b >= c;
        bool is_min = b < a && b <= c;
        if (!is_max && !is_min) continue;
        // quadratic interpolation around the sample peak
        double denom = a - 2.0 * b + c;
        double delta = (std::abs(denom) > 1e-300) ? 0.5 * (a - c) / denom : 0.0;
        delta = std::clamp(delta, -0.5, 0.5);
        double dt = t[static_cast<std::size_t>(j) + 1] - t[static_cast<std::size_t>(j)];
        double tp = t[static_cast<std::size_t>(j)] + delta * dt;
        double vp = b - 0.25 * (a - c) * delta;
        peaks.push_back({tp, vp});
    }
    if (peaks.size() < 10)
        throw DataError("extract_backbone_pff: too few extrema (" +
                        std::to_string(peaks.size()) + ")");
    std::vector<BackbonePoint> out;
    for (std::size_t i = 0; i + 2 < peaks.size(); ++i) {
        BackbonePoint bp;
        bp.t = peaks[i + 1].t;
        bp.amplitude = std::abs(peaks[i + 1].v);
        bp.frequency = M_PI / (peaks[i + 1].t - peaks[i].t);  // consecutive extrema: half period
        double p0 = std::abs(peaks[i].v), p2 = std::abs(peaks[i + 2].v);
        bp.damping = (p0 > 0.0 && p2 > 0.0)
                         ? std::log(p0 / p2) / (peaks[i + 2].t - peaks[i].t)
                         : 0.0;
        out.push_back(bp);
    }
    return out;
}

}  // namespace ssmred
