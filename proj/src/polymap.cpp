#include "ssmred/polymap.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ssmred/io.hpp"

namespace ssmred {

namespace {

// all tuples of `dim` nonnegative integers summing to `deg`, lexicographic
// (descending first index), which combined with the degree grading gives
// graded-lexicographic order
void tuples_of_degree(int dim, int deg, Exponents& cur, std::vector<Exponents>& out) {
    if (dim == 1) {
        cur.push_back(deg);
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (int k = deg; k >= 0; --k) {
        cur.push_back(k);
        tuples_of_degree(dim - 1, deg - k, cur, out);
        cur.pop_back();
    }
}

}  // namespace

std::vector<Exponents> monomial_exponents(int dim, int o_min, int o_max) {
    if (o_min < 1) throw std::invalid_argument("monomial_exponents: o_min >= 1 required");
    std::vector<Exponents> out;
    Exponents cur;
    for (int deg = o_min; deg <= o_max; ++deg) tuples_of_degree(dim, deg, cur, out);
    return out;
}

std::size_t monomial_count(int dim, int o_min, int o_max) {
    auto binom = [](long long n, long long k) {
        long long r = 1;
        for (long long i = 1; i <= k; ++i) r = r * (n - k + i) / i;
        return r;
    };
    std::size_t c = 0;
    for (int deg = o_min; deg <= o_max; ++deg)
        c += static_cast<std::size_t>(binom(dim + deg - 1, deg));
    return c;
}

CVec monomial_features(const CVec& y, const std::vector<Exponents>& table) {
    CVec out(static_cast<Eigen::Index>(table.size()));
    for (std::size_t i = 0; i < table.size(); ++i) {
        Complex v = 1.0;
        const auto& e = table[i];
        for (std::size_t k = 0; k < e.size(); ++k)
            for (int p = 0; p < e[k]; ++p) v *= y(static_cast<Eigen::Index>(k));
        out(static_cast<Eigen::Index>(i)) = v;
    }
    return out;
}

CMat monomial_jacobian(const CVec& y, const std::vector<Exponents>& table) {
    const Eigen::Index d = y.size();
    CMat J = CMat::Zero(static_cast<Eigen::Index>(table.size()), d);
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& e = table[i];
        for (Eigen::Index k = 0; k < d; ++k) {
            if (e[static_cast<std::size_t>(k)] == 0) continue;
            Complex v = static_cast<double>(e[static_cast<std::size_t>(k)]);
            for (Eigen::Index l = 0; l < d; ++l) {
                int p = e[static_cast<std::size_t>(l)] - (l == k ? 1 : 0);
                for (int q = 0; q < p; ++q) v *= y(l);
            }
            J(static_cast<Eigen::Index>(i), k) = v;
        }
    }
    return J;
}

int find_exponents(const std::vector<Exponents>& table, const Exponents& e) {
    for (std::size_t i = 0; i < table.size(); ++i)
        if (table[i] == e) return static_cast<int>(i);
    return -1;
}

Exponents conjugate_tuple(const Exponents& e) {
    const std::size_t m = e.size() / 2;
    Exponents out(e.size());
    for (std::size_t k = 0; k < m; ++k) {
        out[k] = e[m + k];
        out[m + k] = e[k];
    }
    return out;
}

PolyMap::PolyMap(int d_in, int d_out, std::vector<Exponents> table, CMat coeffs,
                 bool conjugate_pairs)
    : d_in_(d_in), d_out_(d_out), table_(std::move(table)), coeffs_(std::move(coeffs)),
      conjugate_pairs_(conjugate_pairs) {
    if (coeffs_.rows() != d_out_ ||
        coeffs_.cols() != static_cast<Eigen::Index>(table_.size()))
        throw std::invalid_argument("PolyMap: coefficient shape mismatch");
    for (std::size_t i = 0; i < table_.size(); ++i) {
        if (static_cast<int>(table_[i].size()) != d_in_)
            throw std::invalid_argument("PolyMap: exponent tuple length mismatch");
        for (std::size_t j = i + 1; j < table_.size(); ++j)
            if (table_[i] == table_[j])
                throw std::invalid_argument("PolyMap: duplicate exponent tuple");
    }
}

PolyMap PolyMap::zero(int d_in, int d_out) {
    return PolyMap(d_in, d_out, {}, CMat::Zero(d_out, 0), false);
}

CVec PolyMap::operator()(const CVec& y) const {
    if (y.size() != d_in_) throw std::invalid_argument("PolyMap: input dimension mismatch");
    if (table_.empty()) return CVec::Zero(d_out_);
    return coeffs_ * monomial_features(y, table_);
}

CMat PolyMap::jacobian(const CVec& y) const {
    if (table_.empty()) return CMat::Zero(d_out_, d_in_);
    return coeffs_ * monomial_jacobian(y, table_);
}

void PolyMap::save(std::ostream& os) const {
    os << "polymap " << d_in_ << " " << d_out_ << " " << table_.size() << " "
       << (conjugate_pairs_ ? 1 : 0) << "\n";
    for (const auto& e : table_) {
        for (std::size_t k = 0; k < e.size(); ++k) os << (k ? " " : "") << e[k];
        os << "\n";
    }
    for (Eigen::Index i = 0; i < coeffs_.rows(); ++i) {
        for (Eigen::Index j = 0; j < coeffs_.cols(); ++j)
            os << format_double(coeffs_(i, j).real()) << ","
               << format_double(coeffs_(i, j).imag()) << (j + 1 < coeffs_.cols() ? " " : "");
        os << "\n";
    }
}

PolyMap PolyMap::load(std::istream& is) {
    std::string magic;
    int d_in, d_out, cp;
    std::size_t nmono;
    is >> magic >> d_in >> d_out >> nmono >> cp;
    if (magic != "polymap") throw std::runtime_error("PolyMap::load: bad header");
    std::vector<Exponents> table(nmono, Exponents(static_cast<std::size_t>(d_in)));
    for (auto& e : table)
        for (auto& v : e) is >> v;
    CMat coeffs(d_out, static_cast<Eigen::Index>(nmono));
    for (Eigen::Index i = 0; i < d_out; ++i)
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(nmono); ++j) {
            std::string tok;
            is >> tok;
            auto comma = tok.find(',');
            coeffs(i, j) = Complex(std::stod(tok.substr(0, comma)),
                                   std::stod(tok.substr(comma + 1)));
        }
    return PolyMap(d_in, d_out, std::move(table), std::move(coeffs), cp != 0);
}

}  // namespace ssmred
