#pragma once

#include <Eigen/Dense>
#include <complex>
#include <utility>
#include <vector>

#include "hocorr/geometry.hpp"

namespace hocorr {

// Largest matrix side accepted by the permanent-based correlation paths.
// 2n = 12 covers every studied order (n <= 5) with headroom.
inline constexpr int kPermanentOrderCap = 12;

// Permanent by Ryser's inclusion-exclusion formula with Gray-code subset
// iteration, O(2^n n). Throws on non-square input.
double permanent(const Eigen::MatrixXd& matrix);
std::complex<double> permanent(const Eigen::MatrixXcd& matrix);
// Allocation-free variant for hot loops; column-major n x n buffer.
double permanent(const double* column_major, int side);

// Permanent of the matrix whose distinct rows and columns are given by
// an r x r matrix with row i and column i repeated multiplicity[i]
// times. Subset enumeration runs over multiplicity counts instead of
// individual columns, prod(m_i + 1) terms instead of 2^n. The plan
// (enumeration order, binomial weights) is reusable across matrices with
// the same multiplicity pattern.
class MultisetPermanent {
public:
    explicit MultisetPermanent(std::vector<int> multiplicity);
    // column-major r x r buffer of the distinct-position matrix
    double evaluate(const double* distinct) const;
    int distinct_count() const { return static_cast<int>(multiplicity_.size()); }
    int total_order() const { return order_; }

private:
    std::vector<int> multiplicity_;
    std::vector<std::pair<int, int>> moves_;  // (coordinate, +-1)
    std::vector<double> binomial_;            // (m_j choose k), k-major per coordinate
    int order_ = 0;
};

double permanent_multiset(const Eigen::MatrixXd& distinct, const std::vector<int>& multiplicity);

struct CorrelationSpec {
    int order = 2;                   // n
    std::vector<double> positions;   // scanning position first, then s_2..s_n
    double mean_intensity = 1.0;     // <I>, arbitrary units

    void validate() const;
};

// n-point intensity correlation G^(n) = perm(<I> gamma_ij) for uniform
// thermal light.
double g_n(const CorrelationSpec& spec, const SourceGeometry& source,
           const DetectorArray& array);

// Repeated-reference closed forms, algebraically identical to the
// permanent on the corresponding position tuples. The gamma-level kernels
// are exposed for callers that precompute coherence tables.
double g_n_scheme1_kernel(int order, double gamma_xs);
double g_2n_scheme1_kernel(int order, double gamma_xi_xj, double gamma_xi_s, double gamma_xj_s);

// G^(n)(x, s, ..., s) = <I>^n (n-1)! [1 + (n-1) |gamma(x,s)|^2]
double g_n_scheme1(double x, double s, int order, double mean_intensity,
                   const SourceGeometry& source, const DetectorArray& array);

// G^(2n)(x_i, x_j, s, ..., s) with 2n-2 repetitions of s.
double g_2n_scheme1(double xi, double xj, double s, int order, double mean_intensity,
                    const SourceGeometry& source, const DetectorArray& array);

// G^(2n)(x_i, x_j, s_2, s_2, ..., s_n, s_n): permanent of the coherence
// matrix on the duplicated tuple. refs holds s_2..s_n. Throws when the
// total order 2n exceeds order_cap.
double g_2n_general(double xi, double xj, const std::vector<double>& refs,
                    double mean_intensity, const SourceGeometry& source,
                    const DetectorArray& array, int order_cap = kPermanentOrderCap);

}  // namespace hocorr
