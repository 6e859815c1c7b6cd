#include "ssmred/normal_form.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ssmred/io.hpp"

namespace ssmred {

bool ResonanceStructure::contains(int k, const Exponents& e) const {
    return find_exponents(terms[static_cast<std::size_t>(k)], e) >= 0;
}

ResonanceStructure select_resonant_terms(const CVec& lambdas, int order,
                                         const NormalFormOptions& opt) {
    const int m = static_cast<int>(lambdas.size());
    CVec full(2 * m);
    full.head(m) = lambdas;
    full.tail(m) = lambdas.conjugate();

    ResonanceStructure st;
    st.m = m;
    st.order = order;
    st.terms.resize(static_cast<std::size_t>(m));
    auto table = monomial_exponents(2 * m, 2, order);
    for (int k = 0; k < m; ++k) {
        double tol = opt.res_tol_abs_factor * std::abs(lambdas(k).real()) +
                     opt.res_tol_rel * std::abs(lambdas(k).imag());
        for (const auto& e : table) {
            double im = 0.0;
            for (int j = 0; j < 2 * m; ++j) im += e[static_cast<std::size_t>(j)] * full(j).imag();
            if (std::abs(im - lambdas(k).imag()) <= tol)
                st.terms[static_cast<std::size_t>(k)].push_back(e);
        }
    }
    return st;
}

CMat NormalFormModel::Lambda() const {
    const int mm = m();
    CMat L = CMat::Zero(2 * mm, 2 * mm);
    for (int k = 0; k < mm; ++k) {
        L(k, k) = lambdas(k);
        L(mm + k, mm + k) = std::conj(lambdas(k));
    }
    return L;
}

CVec NormalFormModel::pack(const CVec& z_half) {
    CVec z(2 * z_half.size());
    z.head(z_half.size()) = z_half;
    z.tail(z_half.size()) = z_half.conjugate();
    return z;
}

CVec NormalFormModel::z_from_y(const CVec& y) const {
    CVec zeta = Pinv * y;
    CVec z = zeta;
    if (!h_inv_nl.empty()) z += h_inv_nl(zeta);
    return z;
}

CVec NormalFormModel::y_from_z(const CVec& z) const {
    CVec zeta = z;
    if (!h_nl.empty()) zeta += h_nl(z);
    return P * zeta;
}

CVec NormalFormModel::field(const CVec& z) const {
    const int mm = m();
    CVec f(2 * mm);
    for (int k = 0; k < mm; ++k) {
        f(k) = lambdas(k) * z(k);
        f(mm + k) = std::conj(lambdas(k)) * z(mm + k);
    }
    if (!n_nl.empty()) f += n_nl(z);
    return f;
}

namespace {

// Mirrors coefficient rows 0..m-1 to conjugate rows m..2m-1: the coefficient
// at tuple t in row m+k is conj(coefficient at conjugate_tuple(t) in row k).
CMat mirror_rows(const CMat& top, const std::vector<Exponents>& table,
                 const std::vector<int>& conj_index) {
    const Eigen::Index m = top.rows();
    CMat full(2 * m, top.cols());
    full.topRows(m) = top;
    for (Eigen::Index k = 0; k < m; ++k)
        for (std::size_t t = 0; t < table.size(); ++t)
            full(m + k, static_cast<Eigen::Index>(t)) =
                std::conj(top(k, conj_index[t]));
    return full;
}

std::vector<int> build_conj_index(const std::vector<Exponents>& table) {
    std::vector<int> idx(table.size());
    for (std::size_t t = 0; t < table.size(); ++t) {
        int j = find_exponents(table, conjugate_tuple(table[t]));
        if (j < 0) throw FitError("monomial table not closed under conjugation");
        idx[t] = j;
    }
    return idx;
}

struct ConjugacyProblem {
    int m;
    CVec lambdas;
    std::vector<Exponents> h_table;
    std::vector<int> h_conj_index;
    const ResonanceStructure* st;
    CMat zeta, zetadot;  // 2m x P

    // free h parameters: (row, tuple) with the tuple non-resonant for that row
    std::vector<std::pair<int, int>> h_params;
    // n parameters: (row, index within st->terms[row])
    std::vector<std::pair<int, int>> n_params;

    int n_complex() const {
        return static_cast<int>(h_params.size() + n_params.size());
    }

    void unpack(const Vec& p, CMat& Hc, std::vector<CVec>& Nc) const {
        Hc = CMat::Zero(m, static_cast<Eigen::Index>(h_table.size()));
        Nc.assign(static_cast<std::size_t>(m), CVec());
        for (int k = 0; k < m; ++k)
            Nc[static_cast<std::size_t>(k)] =
                CVec::Zero(static_cast<Eigen::Index>(st->terms[static_cast<std::size_t>(k)].size()));
        int c = 0;
        for (const auto& [k, t] : h_params) {
            Hc(k, t) = Complex(p(2 * c), p(2 * c + 1));
            ++c;
        }
        for (const auto& [k, s] : n_params) {
            Nc[static_cast<std::size_t>(k)](s) = Complex(p(2 * c), p(2 * c + 1));
            ++c;
        }
    }

    // residual (2mP real) and optionally the Jacobian wrt the real params
    double evaluate(const Vec& p, Vec& r, Mat* J) const {
        CMat Hc;
        std::vector<CVec> Nc;
        unpack(p, Hc, Nc);
        const Eigen::Index P = zeta.cols();
        const int np = 2 * n_complex();
        r.resize(2 * m * P);
        if (J) J->setZero(2 * m * P, np);

        for (Eigen::Index j = 0; j < P; ++j) {
            CVec zt = zeta.col(j), ztd = zetadot.col(j);
            CVec phi = monomial_features(zt, h_table);
            CMat dphi = monomial_jacobian(zt, h_table);
            CVec u = dphi * ztd;  // d/dt of each h monomial along the sample

            CVec z = zt;
            for (int k = 0; k < m; ++k) {
                z(k) += (Hc.row(k) * phi)(0);
                Complex hk_conj = 0.0;
                for (std::size_t t = 0; t < h_table.size(); ++t)
                    hk_conj += std::conj(Hc(k, h_conj_index[t])) * phi(static_cast<Eigen::Index>(t));
                z(m + k) += hk_conj;
            }

            // n_k(z) and its gradient over all 2m coordinates, per row
            CVec res(m);
            std::vector<CMat> gn(static_cast<std::size_t>(m));
            for (int k = 0; k < m; ++k) {
                const auto& terms = st->terms[static_cast<std::size_t>(k)];
                Complex nk = 0.0;
                if (!terms.empty()) {
                    CVec psi = monomial_features(z, terms);
                    nk = (Nc[static_cast<std::size_t>(k)].transpose() * psi)(0);
                    if (J) gn[static_cast<std::size_t>(k)] =
                        Nc[static_cast<std::size_t>(k)].transpose() * monomial_jacobian(z, terms);
                } else if (J) {
                    gn[static_cast<std::size_t>(k)] = CMat::Zero(1, 2 * m);
                }
                Complex hu = 0.0, hk = 0.0;
                for (std::size_t t = 0; t < h_table.size(); ++t) {
                    hu += Hc(k, static_cast<Eigen::Index>(t)) * u(static_cast<Eigen::Index>(t));
                    hk += Hc(k, static_cast<Eigen::Index>(t)) * phi(static_cast<Eigen::Index>(t));
                }
                res(k) = ztd(k) + hu - lambdas(k) * (zt(k) + hk) - nk;
                r(2 * (m * j + k)) = res(k).real();
                r(2 * (m * j + k) + 1) = res(k).imag();
            }
            if (!J) continue;

            int c = 0;
            for (const auto& [kp, t] : h_params) {
                for (int k = 0; k < m; ++k) {
                    // holomorphic and antiholomorphic derivatives of res_k
                    Complex Dc = -gn[static_cast<std::size_t>(k)](0, kp) * phi(t);
                    if (k == kp) Dc += u(t) - lambdas(k) * phi(t);
                    int tc = h_conj_index[static_cast<std::size_t>(t)];
                    Complex Dcb = -gn[static_cast<std::size_t>(k)](0, m + kp) *
                                  std::conj(phi(tc));
                    Complex dRe = Dc + Dcb;
                    Complex dIm = Complex(0, 1) * (Dc - Dcb);
                    Eigen::Index row = 2 * (m * j + k);
                    (*J)(row, 2 * c) = dRe.real();
                    (*J)(row + 1, 2 * c) = dRe.imag();
                    (*J)(row, 2 * c + 1) = dIm.real();
                    (*J)(row + 1, 2 * c + 1) = dIm.imag();
                }
                ++c;
            }
            for (const auto& [kp, s] : n_params) {
                const auto& terms = st->terms[static_cast<std::size_t>(kp)];
                CVec psi = monomial_features(z, {terms[static_cast<std::size_t>(s)]});
                Complex Dc = -psi(0);
                Eigen::Index row = 2 * (m * j + kp);
                (*J)(row, 2 * c) = Dc.real();
                (*J)(row + 1, 2 * c) = Dc.imag();
                (*J)(row, 2 * c + 1) = -Dc.imag();
                (*J)(row + 1, 2 * c + 1) = Dc.real();
                ++c;
            }
        }
        return 0.5 * r.squaredNorm();
    }
};

}  // namespace

NormalFormModel fit_normal_form(const ReducedDataset& data, const ChartBasis& chart,
                                const ResonanceStructure& structure,
                                int h_order, const NormalFormOptions& opt) {
    if (h_order < 2) throw FitError("fit_normal_form: h_order >= 2 required");
    const int m = chart.m();
    if (structure.m != m) throw FitError("fit_normal_form: structure size mismatch");

    NormalFormModel model;
    model.lambdas = chart.lambdas;
    model.P = chart.P;
    model.Pinv = chart.P.inverse();
    model.structure = structure;

    CMat y, ydot;
    bool any_train = false;
    for (const auto& tag : data.split)
        if (tag == "train") { any_train = true; break; }
    data.stacked(y, ydot, any_train ? "train" : "");
    if (ydot.cwiseAbs().maxCoeff() == 0.0)
        throw FitError("fit_normal_form: dataset has no derivatives");

    ConjugacyProblem prob;
    prob.m = m;
    prob.lambdas = chart.lambdas;
    prob.h_table = monomial_exponents(2 * m, 2, h_order);
    prob.h_conj_index = build_conj_index(prob.h_table);
    prob.st = &structure;
    prob.zeta = model.Pinv * y;
    prob.zetadot = model.Pinv * ydot;

    // Resonant tuples stay in n; everything else is removable through h.
    for (int k = 0; k < m; ++k)
        for (std::size_t t = 0; t < prob.h_table.size(); ++t)
            if (!structure.contains(k, prob.h_table[t]))
                prob.h_params.push_back({k, static_cast<int>(t)});
    for (int k = 0; k < m; ++k)
        for (std::size_t s = 0; s < structure.terms[static_cast<std::size_t>(k)].size(); ++s)
            prob.n_params.push_back({k, static_cast<int>(s)});

    const int np = 2 * prob.n_complex();
    Vec p = Vec::Zero(np);

    // Levenberg-Marquardt on the conjugacy error
    Vec r;
    Mat J;
    double cost = prob.evaluate(p, r, &J);
    double mu = 0.0;
    for (int it = 0; it < opt.max_iter; ++it) {
        Vec g = J.transpose() * r;
        if (g.lpNorm<Eigen::Infinity>() <= opt.gtol * (1.0 + cost)) break;
        Mat H = J.transpose() * J;
        if (mu == 0.0) mu = 1e-6 * H.diagonal().maxCoeff();
        bool accepted = false;
        for (int tr = 0; tr < 12 && !accepted; ++tr) {
            Mat Hm = H;
            Hm.diagonal().array() += mu;
            Vec dp = Eigen::LDLT<Mat>(Hm).solve(-g);
            Vec rn;
            double cn = prob.evaluate(p + dp, rn, nullptr);
            if (cn < cost) {
                p += dp;
                cost = cn;
                mu = std::max(mu * 0.3, 1e-14);
                accepted = true;
            } else {
                mu *= 4.0;
            }
        }
        if (!accepted) break;
        cost = prob.evaluate(p, r, &J);
    }

    CMat Hc;
    std::vector<CVec> Nc;
    prob.unpack(p, Hc, Nc);

    model.h_inv_nl = PolyMap(2 * m, 2 * m, prob.h_table,
                             mirror_rows(Hc, prob.h_table, prob.h_conj_index), true);

    // n_nl over the union of the resonant tuples and their conjugates
    std::vector<Exponents> n_table;
    for (int k = 0; k < m; ++k)
        for (const auto& e : structure.terms[static_cast<std::size_t>(k)]) {
            if (find_exponents(n_table, e) < 0) n_table.push_back(e);
            Exponents ec = conjugate_tuple(e);
            if (find_exponents(n_table, ec) < 0) n_table.push_back(ec);
        }
    CMat n_top = CMat::Zero(m, static_cast<Eigen::Index>(n_table.size()));
    for (int k = 0; k < m; ++k) {
        const auto& terms = structure.terms[static_cast<std::size_t>(k)];
        for (std::size_t s = 0; s < terms.size(); ++s)
            n_top(k, find_exponents(n_table, terms[s])) = Nc[static_cast<std::size_t>(k)](static_cast<Eigen::Index>(s));
    }
    model.n_nl = PolyMap(2 * m, 2 * m, n_table,
                         mirror_rows(n_top, n_table, build_conj_index(n_table)), true);

    // forward transform h_nl by regression: zeta - z on monomials of z
    {
        const Eigen::Index P = prob.zeta.cols();
        CMat G(static_cast<Eigen::Index>(prob.h_table.size()), P);
        CMat D(m, P);
        for (Eigen::Index j = 0; j < P; ++j) {
            CVec zt = prob.zeta.col(j);
            CVec z = zt + model.h_inv_nl(zt);
            G.col(j) = monomial_features(z, prob.h_table);
            D.col(j) = (zt - z).head(m);
        }
        CMat Ht = G.transpose().colPivHouseholderQr().solve(D.transpose()).transpose();
        model.h_nl = PolyMap(2 * m, 2 * m, prob.h_table,
                             mirror_rows(Ht, prob.h_table, prob.h_conj_index), true);
    }

    double zd_rms = std::sqrt(prob.zetadot.topRows(m).squaredNorm() /
                              static_cast<double>(m * prob.zeta.cols()));
    double res_rms = std::sqrt(2.0 * cost / static_cast<double>(m * prob.zeta.cols()));
    model.conjugacy_residual = (zd_rms > 0.0) ? res_rms / zd_rms : res_rms;
    return model;
}

PolarForm::PolarForm(const NormalFormModel& model)
    : m_(model.m()), lambdas_(model.lambdas) {
    terms_.resize(static_cast<std::size_t>(m_));
    for (int k = 0; k < m_; ++k) {
        Term lin;
        lin.amp_powers.assign(static_cast<std::size_t>(m_), 0);
        lin.amp_powers[static_cast<std::size_t>(k)] = 1;
        lin.phase.assign(static_cast<std::size_t>(m_), 0);
        lin.c = lambdas_(k);
        terms_[static_cast<std::size_t>(k)].push_back(lin);
    }
    if (model.n_nl.empty()) return;
    const auto& table = model.n_nl.table();
    for (int k = 0; k < m_; ++k)
        for (std::size_t t = 0; t < table.size(); ++t) {
            Complex c = model.n_nl.coeffs()(k, static_cast<Eigen::Index>(t));
            if (std::abs(c) == 0.0) continue;
            const auto& e = table[t];
            Term tm;
            tm.amp_powers.resize(static_cast<std::size_t>(m_));
            tm.phase.resize(static_cast<std::size_t>(m_));
            for (int j = 0; j < m_; ++j) {
                int a = e[static_cast<std::size_t>(j)];
                int b = e[static_cast<std::size_t>(m_ + j)];
                tm.amp_powers[static_cast<std::size_t>(j)] = a + b;
                tm.phase[static_cast<std::size_t>(j)] = a - b;
            }
            tm.phase[static_cast<std::size_t>(k)] -= 1;  // the exp(-i theta_k) factor
            tm.c = c;
            terms_[static_cast<std::size_t>(k)].push_back(tm);
        }
}

namespace {
Complex polar_term_value(const PolarForm::Term& t, const Vec& rho, const Vec& theta) {
    double amp = 1.0;
    double ph = 0.0;
    for (std::size_t j = 0; j < t.amp_powers.size(); ++j) {
        amp *= std::pow(rho(static_cast<Eigen::Index>(j)), t.amp_powers[j]);
        ph += t.phase[j] * theta(static_cast<Eigen::Index>(j));
    }
    return t.c * amp * std::exp(Complex(0.0, ph));
}
}  // namespace

void PolarForm::eval(const Vec& rho, const Vec& theta, Vec& rhodot, Vec& thetadot) const {
    rhodot.resize(m_);
    thetadot.resize(m_);
    for (int k = 0; k < m_; ++k) {
        Complex s = 0.0;
        for (const auto& t : terms_[static_cast<std::size_t>(k)])
            s += polar_term_value(t, rho, theta);
        rhodot(k) = s.real();
        thetadot(k) = (rho(k) != 0.0) ? s.imag() / rho(k) : 0.0;
    }
}

double PolarForm::alpha(int k, const Vec& rho) const {
    double s = 0.0;
    for (const auto& t : terms_[static_cast<std::size_t>(k)]) {
        bool trivial = std::all_of(t.phase.begin(), t.phase.end(),
                                   [](int p) { return p == 0; });
        if (!trivial) continue;
        double amp = 1.0;
        for (std::size_t j = 0; j < t.amp_powers.size(); ++j)
            amp *= std::pow(rho(static_cast<Eigen::Index>(j)), t.amp_powers[j]);
        s += t.c.real() * amp;
    }
    return s;
}

double PolarForm::omega(int k, const Vec& rho) const {
    if (rho(k) == 0.0) return lambdas_(k).imag();
    double s = 0.0;
    for (const auto& t : terms_[static_cast<std::size_t>(k)]) {
        bool trivial = std::all_of(t.phase.begin(), t.phase.end(),
                                   [](int p) { return p == 0; });
        if (!trivial) continue;
        double amp = 1.0;
        for (std::size_t j = 0; j < t.amp_powers.size(); ++j)
            amp *= std::pow(rho(static_cast<Eigen::Index>(j)), t.amp_powers[j]);
        s += t.c.imag() * amp;
    }
    return s / rho(k);
}

bool PolarForm::has_phase_coupling(int k) const {
    for (const auto& t : terms_[static_cast<std::size_t>(k)])
        if (std::any_of(t.phase.begin(), t.phase.end(), [](int p) { return p != 0; }))
            return true;
    return false;
}

double invert_consistency(const NormalFormModel& model, const CMat& samples) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < samples.cols(); ++j) {
        CVec y = samples.col(j);
        double yn = y.norm();
        if (yn == 0.0) continue;
        CVec back = model.y_from_z(model.z_from_y(y));
        worst = std::max(worst, (back - y).norm() / yn);
    }
    return worst;
}

namespace {

void write_cmat(std::ostream& os, const CMat& A) {
    os << A.rows() << " " << A.cols() << "\n";
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            os << format_double(A(i, j).real()) << "," << format_double(A(i, j).imag())
               << (j + 1 < A.cols() ? " " : "");
        os << "\n";
    }
}

CMat read_cmat(std::istream& is) {
    Eigen::Index r, c;
    is >> r >> c;
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

void save_normal_form(const NormalFormModel& model, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw FitError("save_normal_form: cannot open " + path);
    os << "normalform " << model.m() << " " << model.structure.order << " "
       << format_double(model.conjugacy_residual) << "\n";
    for (int k = 0; k < model.m(); ++k)
        os << format_double(model.lambdas(k).real()) << ","
           << format_double(model.lambdas(k).imag()) << "\n";
    write_cmat(os, model.P);
    write_cmat(os, model.Pinv);
    for (int k = 0; k < model.m(); ++k) {
        const auto& terms = model.structure.terms[static_cast<std::size_t>(k)];
        os << terms.size() << "\n";
        for (const auto& e : terms) {
            for (std::size_t i = 0; i < e.size(); ++i) os << (i ? " " : "") << e[i];
            os << "\n";
        }
    }
    model.n_nl.save(os);
    model.h_inv_nl.save(os);
    model.h_nl.save(os);
}

NormalFormModel load_normal_form(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FitError("load_normal_form: cannot open " + path);
    std::string magic;
    int m;
    NormalFormModel model;
    is >> magic >> m >> model.structure.order >> model.conjugacy_residual;
    if (magic != "normalform") throw FitError("load_normal_form: bad header");
    model.structure.m = m;
    model.lambdas.resize(m);
    for (int k = 0; k < m; ++k) {
        std::string tok;
        is >> tok;
        auto comma = tok.find(',');
        model.lambdas(k) = Complex(std::stod(tok.substr(0, comma)),
                                   std::stod(tok.substr(comma + 1)));
    }
    model.P = read_cmat(is);
    model.Pinv = read_cmat(is);
    model.structure.terms.resize(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
        std::size_t nt;
        is >> nt;
        auto& terms = model.structure.terms[static_cast<std::size_t>(k)];
        terms.assign(nt, Exponents(static_cast<std::size_t>(2 * m)));
        for (auto& e : terms)
            for (auto& v : e) is >> v;
    }
    model.n_nl = PolyMap::load(is);
    model.h_inv_nl = PolyMap::load(is);
    model.h_nl = PolyMap::load(is);
    return model;
}

}  // namespace ssmred
