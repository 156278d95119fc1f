#include "hocorr/correlations.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace hocorr {

namespace {

// Ryser: perm(A) = (-1)^n sum_{S != 0} (-1)^|S| prod_i sum_{j in S} a_ij.
// Gray-code iteration updates the row sums with one column per subset.
template <typename Scalar, typename Matrix>
Scalar permanent_impl(const Matrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("permanent: matrix must be square");
    const int n = static_cast<int>(a.rows());
    if (n == 0) return Scalar(1);
    if (n == 1) return a(0, 0);
    if (n > 62) throw std::invalid_argument("permanent: side too large for subset enumeration");

    Scalar row_sum[64];
    for (int i = 0; i < n; ++i) row_sum[i] = Scalar(0);
    Scalar total(0);
    std::uint64_t gray = 0;
    const std::uint64_t subsets = (std::uint64_t{1} << n) - 1;
    for (std::uint64_t k = 1; k <= subsets; ++k) {
        const std::uint64_t next = k ^ (k >> 1);
        const std::uint64_t changed = next ^ gray;
        const int col = std::countr_zero(changed);
        const Scalar sign = (next & changed) ? Scalar(1) : Scalar(-1);
        for (int i = 0; i < n; ++i) row_sum[i] += sign * a(i, col);
        gray = next;
        Scalar prod = row_sum[0];
        for (int i = 1; i < n; ++i) prod *= row_sum[i];
        total += (std::popcount(next) & 1) ? -prod : prod;
    }
    return (n & 1) ? -total : total;
}

}  // namespace

double permanent(const Eigen::MatrixXd& matrix) {
    return permanent_impl<double>(matrix);
}

std::complex<double> permanent(const Eigen::MatrixXcd& matrix) {
    return permanent_impl<std::complex<double>>(matrix);
}

double permanent(const double* column_major, int side) {
    return permanent_impl<double>(
        Eigen::Map<const Eigen::MatrixXd>(column_major, side, side));
}

namespace {

// Reflected mixed-radix Gray sequence over prod(m_i + 1) count vectors;
// each step changes exactly one coordinate by +-1. Digit j sweeps up or
// down according to the parity of the number of completed sweeps,
// floor(t / (w_j (m_j + 1))).
std::vector<std::pair<int, int>> mixed_radix_moves(const std::vector<int>& mult) {
    const int r = static_cast<int>(mult.size());
    long total = 1;
    for (int m : mult) total *= m + 1;
    std::vector<long> weight(r, 1);
    for (int j = 1; j < r; ++j) weight[j] = weight[j - 1] * (mult[j - 1] + 1);
    std::vector<int> previous(r, 0), digits(r);
    std::vector<std::pair<int, int>> moves;
    moves.reserve(total - 1);
    for (long t = 1; t < total; ++t) {
        for (int j = 0; j < r; ++j) {
            const int raw = static_cast<int>((t / weight[j]) % (mult[j] + 1));
            const long sweeps = t / (weight[j] * (mult[j] + 1));
            digits[j] = (sweeps & 1) ? mult[j] - raw : raw;
        }
        int changed = -1;
        for (int j = 0; j < r; ++j)
            if (digits[j] != previous[j]) {
                if (changed >= 0 || std::abs(digits[j] - previous[j]) != 1)
                    throw std::logic_error("mixed_radix_moves: enumeration lost Gray property");
                changed = j;
                moves.push_back({j, digits[j] - previous[j]});
            }
        previous = digits;
    }
    return moves;
}

}  // namespace

MultisetPermanent::MultisetPermanent(std::vector<int> multiplicity)
    : multiplicity_(std::move(multiplicity)) {
    const int r = static_cast<int>(multiplicity_.size());
    if (r < 1 || r > 16)
        throw std::invalid_argument("MultisetPermanent: need 1..16 distinct positions");
    int max_mult = 0;
    for (int m : multiplicity_) {
        if (m < 1) throw std::invalid_argument("MultisetPermanent: multiplicities must be >= 1");
        order_ += m;
        max_mult = std::max(max_mult, m);
    }
    if (order_ > 62) throw std::invalid_argument("MultisetPermanent: total order too large");
    moves_ = mixed_radix_moves(multiplicity_);
    binomial_.assign(static_cast<std::size_t>(r) * (max_mult + 1), 0.0);
    for (int j = 0; j < r; ++j) {
        binomial_[j] = 1.0;
        for (int k = 1; k <= multiplicity_[j]; ++k)
            binomial_[static_cast<std::size_t>(k) * r + j] =
                binomial_[static_cast<std::size_t>(k - 1) * r + j] *
                (multiplicity_[j] - k + 1) / k;
    }
}

// perm = (-1)^n sum_k (-1)^{|k|} prod_j C(m_j,k_j) prod_i (sum_j k_j D_ij)^{m_i}
double MultisetPermanent::evaluate(const double* distinct) const {
    const int r = static_cast<int>(multiplicity_.size());
    double row_sum[16] = {};
    int count[16] = {};
    double weight = 1.0;
    int parity = 0;
    double total = 0.0;
    for (const auto& [j, delta] : moves_) {
        weight /= binomial_[static_cast<std::size_t>(count[j]) * r + j];
        count[j] += delta;
        weight *= binomial_[static_cast<std::size_t>(count[j]) * r + j];
        parity ^= 1;
        const double* column = distinct + static_cast<std::size_t>(j) * r;
        for (int i = 0; i < r; ++i) row_sum[i] += delta * column[i];
        double prod = 1.0;
        for (int i = 0; i < r; ++i)
            for (int p = 0; p < multiplicity_[i]; ++p) prod *= row_sum[i];
        total += (parity & 1) ? -weight * prod : weight * prod;
    }
    return (order_ & 1) ? -total : total;
}

double permanent_multiset(const Eigen::MatrixXd& distinct, const std::vector<int>& multiplicity) {
    const int r = static_cast<int>(distinct.rows());
    if (distinct.cols() != r)
        throw std::invalid_argument("permanent_multiset: matrix must be square");
    if (static_cast<int>(multiplicity.size()) != r)
        throw std::invalid_argument("permanent_multiset: one multiplicity per distinct position");
    const MultisetPermanent plan(multiplicity);
    Eigen::MatrixXd buffer = distinct;  // ensure contiguous column-major storage
    return plan.evaluate(buffer.data());
}

void CorrelationSpec::validate() const {
    if (order < 2) throw std::invalid_argument("CorrelationSpec: order must be >= 2");
    if (static_cast<int>(positions.size()) != order)
        throw std::invalid_argument("CorrelationSpec: order must equal the number of positions");
    if (!(mean_intensity >= 0))
        throw std::invalid_argument("CorrelationSpec: mean_intensity must be >= 0");
}

double g_n(const CorrelationSpec& spec, const SourceGeometry& source,
           const DetectorArray& array) {
    spec.validate();
    const Eigen::MatrixXd gamma = coherence_matrix(spec.positions, source, array);
    return std::pow(spec.mean_intensity, spec.order) * permanent(gamma);
}

double g_n_scheme1_kernel(int order, double gamma_xs) {
    double fact = 1.0;
    for (int i = 2; i < order; ++i) fact *= i;
    return fact * (1.0 + (order - 1) * gamma_xs * gamma_xs);
}

// Closed form of the permanent on (x_i, x_j, s^(2n-2)). With m = 2n-2 and
// w = gamma(x_i,x_j), u = gamma(x_i,s), v = gamma(x_j,s):
//   m! [1 + |w|^2 + m(|u|^2 + |v|^2) + 2m Re(w conj(u) v) + m(m-1)|u|^2|v|^2]
// The published repeated-reference display carries (n-2)!/(n-2)-style
// coefficients that disagree with the permanent expansion (and can make
// the assembled data covariance indefinite); this form is the one the
// permutation sum actually produces, verified against brute force.
double g_2n_scheme1_kernel(int order, double w, double u, double v) {
    const int m = 2 * order - 2;
    double fact = 1.0;
    for (int i = 2; i <= m; ++i) fact *= i;
    const double triple = w * u * v;  // Re(w u* v) for the real-valued kernels
    return fact * (1.0 + w * w + m * (u * u + v * v) + 2.0 * m * triple +
                   static_cast<double>(m) * (m - 1) * u * u * v * v);
}

double g_n_scheme1(double x, double s, int order, double mean_intensity,
                   const SourceGeometry& source, const DetectorArray& array) {
    if (order < 2) throw std::invalid_argument("g_n_scheme1: order must be >= 2");
    return std::pow(mean_intensity, order) *
           g_n_scheme1_kernel(order, coherence(x, s, source, array));
}

double g_2n_scheme1(double xi, double xj, double s, int order, double mean_intensity,
                    const SourceGeometry& source, const DetectorArray& array) {
    if (order < 2) throw std::invalid_argument("g_2n_scheme1: order must be >= 2");
    return std::pow(mean_intensity, 2 * order) *
           g_2n_scheme1_kernel(order, coherence(xi, xj, source, array),
                               coherence(xi, s, source, array),
                               coherence(xj, s, source, array));
}

double g_2n_general(double xi, double xj, const std::vector<double>& refs,
                    double mean_intensity, const SourceGeometry& source,
                    const DetectorArray& array, int order_cap) {
    const int order = static_cast<int>(refs.size()) + 1;
    if (order < 2) throw std::invalid_argument("g_2n_general: need at least one reference");
    if (2 * order > order_cap)
        throw std::invalid_argument("g_2n_general: total order " + std::to_string(2 * order) +
                                    " exceeds cap " + std::to_string(order_cap));
    std::vector<double> tuple;
    tuple.reserve(2 * order);
    tuple.push_back(xi);
    tuple.push_back(xj);
    for (double s : refs) {
        tuple.push_back(s);
        tuple.push_back(s);
    }
    const Eigen::MatrixXd gamma = coherence_matrix(tuple, source, array);
    return std::pow(mean_intensity, 2 * order) * permanent(gamma);
}

}  // namespace hocorr
