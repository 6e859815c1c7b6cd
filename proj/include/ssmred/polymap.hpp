#pragma once

#include <iosfwd>

#include "ssmred/types.hpp"

namespace ssmred {

/// Graded-lexicographic exponent tuples for all monomials in `dim` variables
/// with total degree in [o_min, o_max].
std::vector<Exponents> monomial_exponents(int dim, int o_min, int o_max);

/// Feature vector of those monomials evaluated at y.
CVec monomial_features(const CVec& y, const std::vector<Exponents>& table);

/// d(features)/dy, one row per monomial.
CMat monomial_jacobian(const CVec& y, const std::vector<Exponents>& table);

std::size_t monomial_count(int dim, int o_min, int o_max);

/// Multivariate polynomial map: exponent table + coefficient matrix.
/// When `conjugate_pairs` is set, inputs are (z_1..z_m, conj(z_1)..conj(z_m))
/// and the coefficient rows come in conjugate-mirrored pairs, which keeps
/// physical outputs real.
class PolyMap {
public:
    PolyMap() = default;
    PolyMap(int d_in, int d_out, std::vector<Exponents> table, CMat coeffs,
            bool conjugate_pairs = false);

    int d_in() const { return d_in_; }
    int d_out() const { return d_out_; }
    const std::vector<Exponents>& table() const { return table_; }
    const CMat& coeffs() const { return coeffs_; }
    bool conjugate_pairs() const { return conjugate_pairs_; }
    bool empty() const { return table_.empty(); }

    CVec operator()(const CVec& y) const;
    /// Jacobian d(map)/dy at y.
    CMat jacobian(const CVec& y) const;

    static PolyMap zero(int d_in, int d_out);

    void save(std::ostream& os) const;
    static PolyMap load(std::istream& is);

private:
    int d_in_ = 0, d_out_ = 0;
    std::vector<Exponents> table_;
    CMat coeffs_;  // d_out x n_monomials
    bool conjugate_pairs_ = false;
};

/// Index of an exponent tuple within a table, or -1.
int find_exponents(const std::vector<Exponents>& table, const Exponents& e);

/// Exponent tuple with the first and second halves of the variables swapped
/// (conjugation for conjugate-pair coordinates).
Exponents conjugate_tuple(const Exponents& e);

}  // namespace ssmred
