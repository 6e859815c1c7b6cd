#include "ssmred/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "ssmred/io.hpp"

namespace ssmred {

Mat first_order_operator(const MechModel& model) {
    const int n = model.n();
    Eigen::PartialPivLU<Mat> Mlu(model.M());
    Mat A = Mat::Zero(2 * n, 2 * n);
    A.topRightCorner(n, n) = Mat::Identity(n, n);
    A.bottomLeftCorner(n, n) = -Mlu.solve(model.K());
    A.bottomRightCorner(n, n) = -Mlu.solve(model.C());
    return A;
}

Spectrum compute_spectrum(const MechModel& model, int m_keep) {
    const int n = model.n();
    if (m_keep > n) throw SpectralError("compute_spectrum: m_keep exceeds dof count");
    Mat A = first_order_operator(model);
    Eigen::EigenSolver<Mat> es(A);
    if (es.info() != Eigen::Success) throw SpectralError("eigen decomposition failed");
    CVec evals = es.eigenvalues();
    CMat V = es.eigenvectors();

    // order by non-increasing real part, pair conjugates
    std::vector<int> idx(static_cast<std::size_t>(2 * n));
    for (int i = 0; i < 2 * n; ++i) idx[static_cast<std::size_t>(i)] = i;
    double scale = evals.cwiseAbs().maxCoeff();
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        double ra = evals(a).real(), rb = evals(b).real();
        if (std::abs(ra - rb) > 1e-9 * scale) return ra > rb;
        return std::abs(evals(a).imag()) < std::abs(evals(b).imag());
    });

    CMat W = V.inverse();  // rows bi-orthonormal to the columns of V

    Spectrum sp;
    sp.eigenvalues.resize(m_keep);
    sp.right.resize(2 * n, 2 * m_keep);
    sp.left.resize(2 * m_keep, 2 * n);

    std::vector<bool> used(static_cast<std::size_t>(2 * n), false);
    int pair = 0;
    for (std::size_t s = 0; s < idx.size() && pair < m_keep; ++s) {
        int i = idx[s];
        if (used[static_cast<std::size_t>(i)]) continue;
        Complex li = evals(i);
        if (li.real() >= 0.0)
            throw SpectralError("compute_spectrum: non-negative real part at eigenvalue " +
                                std::to_string(pair));
        if (std::abs(li.imag()) < 1e-10 * scale)
            throw SpectralError("compute_spectrum: overdamped (real) eigenvalue among the " +
                                std::to_string(m_keep) + " slowest, pair " +
                                std::to_string(pair));
        // find the conjugate partner
        int partner = -1;
        double best = 1e300;
        for (int j = 0; j < 2 * n; ++j) {
            if (used[static_cast<std::size_t>(j)] || j == i) continue;
            double d = std::abs(evals(j) - std::conj(li));
            if (d < best) { best = d; partner = j; }
        }
        if (partner < 0 || best > 1e-6 * scale)
            throw SpectralError("compute_spectrum: conjugate partner not found");
        used[static_cast<std::size_t>(i)] = used[static_cast<std::size_t>(partner)] = true;
        int ip = (li.imag() > 0.0) ? i : partner;  // +Im representative first
        int im = (ip == i) ? partner : i;
        sp.eigenvalues(pair) = evals(ip);
        sp.right.col(2 * pair) = V.col(ip);
        sp.right.col(2 * pair + 1) = V.col(im);
        sp.left.row(2 * pair) = W.row(ip);
        sp.left.row(2 * pair + 1) = W.row(im);
        ++pair;
    }
    if (pair < m_keep) throw SpectralError("compute_spectrum: not enough complex pairs");

    if (model.proportional()) {
        sp.proportional = true;
        sp.alpha = model.alpha();
        sp.beta = model.beta();
        Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(model.K(), model.M());
        sp.omega0 = ges.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        sp.U0 = ges.eigenvectors();
    }
    return sp;
}

double spectral_gap(const Spectrum& spectrum, int m) {
    if (m < 1 || m >= spectrum.n_pairs())
        throw SpectralError("spectral_gap: need m < number of kept pairs");
    return spectrum.eigenvalues(m).real() / spectrum.eigenvalues(m - 1).real();
}

std::vector<ResonanceHit> detect_internal_resonance(const Spectrum& spectrum,
                                                    int max_order, double rel_tol) {
    const int p_count = spectrum.n_pairs();
    Vec w(p_count);
    for (int j = 0; j < p_count; ++j)
        w(j) = spectrum.proportional ? spectrum.omega0(j) : spectrum.eigenvalues(j).imag();

    std::vector<ResonanceHit> hits;
    for (int i = 0; i < p_count; ++i)
        for (int j = 0; j < p_count; ++j) {
            if (i == j) continue;
            if (w(i) > w(j)) continue;  // report with omega_i <= omega_j
            if (w(i) == w(j) && i > j) continue;
            for (int p = 1; p <= max_order; ++p)
                for (int q = p; p + q <= max_order; ++q) {
                    if (std::gcd(p, q) != 1) continue;
                    double d = std::abs(q * w(i) - p * w(j));
                    if (d <= rel_tol * w(j))
                        hits.push_back({i, j, p, q, d / w(j)});
                }
        }
    std::sort(hits.begin(), hits.end(),
              [](const ResonanceHit& a, const ResonanceHit& b) {
                  return a.detuning < b.detuning;
              });
    return hits;
}

CMat ChartBasis::RE() const {
    const int mm = m();
    CMat R = CMat::Zero(2 * mm, 2 * mm);
    for (int k = 0; k < mm; ++k) {
        R(k, k) = lambdas(k);
        R(mm + k, mm + k) = std::conj(lambdas(k));
    }
    return R;
}

Mat dof_selector_projection(int dof, int n) {
    Mat W = Mat::Zero(2, 2 * n);
    W(0, dof) = 1.0;
    W(1, n + dof) = 1.0;
    return W;
}

namespace {

void warn_outer_resonance(const Spectrum& sp, const std::vector<int>& sel,
                          int order = 3, double tol = 0.02) {
    std::vector<double> win, wout;
    for (int j = 0; j < sp.n_pairs(); ++j) {
        bool inside = std::find(sel.begin(), sel.end(), j) != sel.end();
        double w = sp.proportional ? sp.omega0(j) : sp.eigenvalues(j).imag();
        (inside ? win : wout).push_back(w);
    }
    // low-order integer combinations of inner frequencies vs the outer spectrum
    for (double wo : wout)
        for (std::size_t a = 0; a < win.size(); ++a)
            for (int ka = 1; ka <= order; ++ka) {
                if (std::abs(ka * win[a] - wo) <= tol * wo)
                    std::cerr << "[ssmred] warning: selected subspace is near-resonant "
                                 "with an outer mode ("
                              << ka << " x " << win[a] << " ~ " << wo << ")\n";
            }
}

}  // namespace

ChartBasis build_chart(const Spectrum& spectrum, const std::vector<int>& mode_indices,
                       ChartStyle style, const Mat* projection) {
    const int m = static_cast<int>(mode_indices.size());
    const int twon = static_cast<int>(spectrum.right.rows());
    ChartBasis cb;
    cb.mode_indices = mode_indices;
    cb.style = style;
    cb.lambdas.resize(m);
    cb.VE.resize(twon, 2 * m);
    CMat WE(2 * m, twon);
    for (int k = 0; k < m; ++k) {
        int j = mode_indices[static_cast<std::size_t>(k)];
        if (j < 0 || j >= spectrum.n_pairs())
            throw SpectralError("build_chart: mode index out of range");
        cb.lambdas(k) = spectrum.lambda(j);
        cb.VE.col(k) = spectrum.right.col(2 * j);
        cb.VE.col(m + k) = spectrum.right.col(2 * j + 1);
        WE.row(k) = spectrum.left.row(2 * j);
        WE.row(m + k) = spectrum.left.row(2 * j + 1);
    }
    warn_outer_resonance(spectrum, mode_indices);

    switch (style) {
        case ChartStyle::ModalComplex: {
            cb.P = CMat::Identity(2 * m, 2 * m);
            cb.W0 = WE;
            cb.V0 = cb.VE;
            cb.R0 = cb.RE();
            break;
        }
        case ChartStyle::ModalMechanical: {
            if (!spectrum.proportional)
                throw SpectralError(
                    "build_chart: modal-mechanical style needs proportional damping");
            const int n = twon / 2;
            Mat U(n, m), MU(n, m);
            Vec w0(m);
            for (int k = 0; k < m; ++k) {
                int j = mode_indices[static_cast<std::size_t>(k)];
                U.col(k) = spectrum.U0.col(j);
                w0(k) = spectrum.omega0(j);
            }
            Mat W0r = Mat::Zero(2 * m, 2 * n), V0r = Mat::Zero(2 * n, 2 * m);
            // y = (q_m, q_m') with q_m = U0^T M q
            W0r.topLeftCorner(m, n) = U.transpose();  // times M below
            Mat R0r = Mat::Zero(2 * m, 2 * m);
            R0r.topRightCorner(m, m) = Mat::Identity(m, m);
            for (int k = 0; k < m; ++k) {
                R0r(m + k, k) = -w0(k) * w0(k);
                R0r(m + k, m + k) = -(spectrum.alpha + spectrum.beta * w0(k) * w0(k));
            }
            // need M; recover it from the shapes: U0^T M U0 = I, so the rows of
            // U0^T M are U0^+; use the stored full mode set
            Mat U0TM = spectrum.U0.inverse();  // = U0^T M by mass-orthonormality
            for (int k = 0; k < m; ++k) {
                int j = mode_indices[static_cast<std::size_t>(k)];
                W0r.block(k, 0, 1, n) = U0TM.row(j);
                W0r.block(m + k, n, 1, n) = U0TM.row(j);
                V0r.block(0, k, n, 1) = U.col(k);
                V0r.block(n, m + k, n, 1) = U.col(k);
            }
            cb.W0 = W0r.cast<Complex>();
            cb.V0 = V0r.cast<Complex>();
            cb.R0 = R0r.cast<Complex>();
            cb.P = cb.W0 * cb.VE;
            break;
        }
        case ChartStyle::NonModal: {
            if (!projection)
                throw SpectralError("build_chart: non-modal style needs a projection");
            if (projection->rows() != 2 * m || projection->cols() != twon)
                throw SpectralError("build_chart: projection has wrong shape");
            cb.W0 = projection->cast<Complex>();
            cb.P = cb.W0 * cb.VE;
            Eigen::JacobiSVD<CMat> svd(cb.P);
            double smin = svd.singularValues().minCoeff();
            double smax = svd.singularValues().maxCoeff();
            if (smin <= 0.0 || smax / smin > 1e8 ||
                smax <= 1e-10 * cb.W0.norm() * cb.VE.norm())
                throw SpectralError(
                    "build_chart: chart degeneracy, P = W0 V_E singular or "
                    "ill-conditioned (cond > 1e8)");
            CMat Pinv = cb.P.inverse();
            cb.V0 = cb.VE * Pinv;
            cb.R0 = cb.P * cb.RE() * Pinv;
            break;
        }
    }
    return cb;
}

namespace {

void write_cmat(std::ostream& os, const std::string& name, const CMat& A) {
    os << name << " " << A.rows() << " " << A.cols() << "\n";
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            os << format_double(A(i, j).real()) << "," << format_double(A(i, j).imag())
               << (j + 1 < A.cols() ? " " : "");
        os << "\n";
    }
}

CMat read_cmat(std::istream& is, const std::string& expect) {
    std::string name;
    Eigen::Index r, c;
    is >> name >> r >> c;
    if (name != expect) throw IoError("chart file: expected block " + expect);
    CMat A(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) {
            std::string tok;
            is >> tok;
            auto comma = tok.find(',');
            A(i, j) = Complex(std::stod(tok.substr(0, comma)),
                              std::stod(tok.substr(comma + 1)));
        }
    return A;
}

}  // namespace

void save_chart(const ChartBasis& chart, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path);
    os << "ssmred-chart 1\n";
    os << "style " << static_cast<int>(chart.style) << "\n";
    os << "modes";
    for (int j : chart.mode_indices) os << " " << j;
    os << "\n";
    write_cmat(os, "lambdas", chart.lambdas);
    write_cmat(os, "W0", chart.W0);
    write_cmat(os, "V0", chart.V0);
    write_cmat(os, "R0", chart.R0);
    write_cmat(os, "P", chart.P);
    write_cmat(os, "VE", chart.VE);
}

ChartBasis load_chart(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path);
    std::string magic;
    int version;
    is >> magic >> version;
    if (magic != "ssmred-chart") throw IoError("not a chart file: " + path);
    ChartBasis cb;
    std::string key;
    int style;
    is >> key >> style;
    cb.style = static_cast<ChartStyle>(style);
    is >> key;  // "modes"
    // count comes from the lambdas block; read the rest of the line
    std::string line;
    std::getline(is, line);
    {
        std::istringstream ls(line);
        int j;
        while (ls >> j) cb.mode_indices.push_back(j);
    }
    cb.lambdas = read_cmat(is, "lambdas");
    cb.W0 = read_cmat(is, "W0");
    cb.V0 = read_cmat(is, "V0");
    cb.R0 = read_cmat(is, "R0");
    cb.P = read_cmat(is, "P");
    cb.VE = read_cmat(is, "VE");
    return cb;
}

}  // namespace ssmred
