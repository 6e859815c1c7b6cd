#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace ssmred {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using Complex = std::complex<double>;

/// Multi-index exponent tuple for a multivariate monomial.
using Exponents = std::vector<int>;

inline int total_degree(const Exponents& e) {
    int d = 0;
    for (int k : e) d += k;
    return d;
}

}  // namespace ssmred
