#include "hocorr/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hocorr {

namespace {

// Evaluates P(x)/Q(x) for same-degree coefficient arrays in ascending
// order. For |x| > 1 both polynomials are evaluated in 1/x from the top
// coefficient down so the intermediate terms stay bounded.
template <int N>
double evaluate_rational(const double (&num)[N], const double (&den)[N], double x) {
    if (x <= 1.0) {
        double p = num[N - 1], q = den[N - 1];
        for (int i = N - 2; i >= 0; --i) {
            p = p * x + num[i];
            q = q * x + den[i];
        }
        return p / q;
    }
    const double z = 1.0 / x;
    double p = num[0], q = den[0];
    for (int i = 1; i < N; ++i) {
        p = p * z + num[i];
        q = q * z + den[i];
    }
    return p / q;
}

}  // namespace

// Minimax rational approximations on root-bracketing intervals for
// x <= 8 and the Hankel asymptotic form beyond; coefficients from
// boost::math::detail::bessel_j1 (Boost Software License, X. Zhang 2006).
double bessel_j1(double x) {
    static const double P1[7] = {
        -1.4258509801366645672e+11, 6.6781041261492395835e+09, -1.1548696764841276794e+08,
        9.8062904098958257677e+05,  -4.4615792982775076130e+03, 1.0650724020080236441e+01,
        -1.0767857011487300348e-02};
    static const double Q1[7] = {
        4.1868604460820175290e+12, 4.2091902282580133541e+10, 2.0228375140097033958e+08,
        5.9117614494174794095e+05, 1.0742272239517380498e+03, 1.0, 0.0};
    static const double P2[8] = {
        -1.7527881995806511112e+16, 1.6608531731299018674e+15, -3.6658018905416665164e+13,
        3.5580665670910619166e+11,  -1.8113931269860667829e+09, 5.0793266148011179143e+06,
        -7.5023342220781607561e+03, 4.6179191852758252278e+00};
    static const double Q2[8] = {
        1.7253905888447681194e+18, 1.7128800897135812012e+16, 8.4899346165481429307e+13,
        2.7622777286244082666e+11, 6.4872502899596389593e+08, 1.1267125065029138050e+06,
        1.3886978985861357615e+03, 1.0};
    static const double PC[7] = {
        -4.4357578167941278571e+06, -9.9422465050776411957e+06, -6.6033732483649391093e+06,
        -1.5235293511811373833e+06, -1.0982405543459346727e+05, -1.6116166443246101165e+03,
        0.0};
    static const double QC[7] = {
        -4.4357578167941278568e+06, -9.9341243899345856590e+06, -6.5853394797230870728e+06,
        -1.5118095066341608816e+06, -1.0726385991103820119e+05, -1.4550094401904961825e+03,
        1.0};
    static const double PS[7] = {
        3.3220913409857223519e+04, 8.5145160675335701966e+04, 6.6178836581270835179e+04,
        1.8494262873223866797e+04, 1.7063754290207680021e+03, 3.5265133846636032186e+01,
        0.0};
    static const double QS[7] = {
        7.0871281941028743574e+05, 1.8194580422439972989e+06, 1.4194606696037208929e+06,
        4.0029443582266975117e+05, 3.7890229745772202641e+04, 8.6383677696049909675e+02,
        1.0};
    static const double root1 = 3.8317059702075123156e+00;
    static const double root2 = 7.0155866698156187535e+00;
    static const double root1_hi = 9.810e+02 / 256;
    static const double root1_lo = -3.2527979248768438556e-04;
    static const double root2_hi = 1.7960e+03 / 256;
    static const double root2_lo = -3.8330184381246462950e-05;

    const double w = std::abs(x);
    double value;
    if (x == 0.0) return 0.0;
    if (w <= 4.0) {
        const double y = x * x;
        const double r = evaluate_rational(P1, Q1, y);
        value = w * (w + root1) * ((w - root1_hi) - root1_lo) * r;
    } else if (w <= 8.0) {
        const double y = x * x;
        const double r = evaluate_rational(P2, Q2, y);
        value = w * (w + root2) * ((w - root2_hi) - root2_lo) * r;
    } else {
        const double y = 8.0 / w;
        const double y2 = y * y;
        const double z = w - 0.75 * M_PI;
        const double rc = evaluate_rational(PC, QC, y2);
        const double rs = evaluate_rational(PS, QS, y2);
        value = std::sqrt(2.0 / (w * M_PI)) * (rc * std::cos(z) - y * rs * std::sin(z));
    }
    return x < 0 ? -value : value;
}

double DetectorArray::wavenumber() const {
    return 2.0 * M_PI / wavelength;
}

void DetectorArray::validate() const {
    if (pixel_count < 2) throw std::invalid_argument("DetectorArray: pixel_count must be >= 2");
    if (!(pixel_pitch > 0)) throw std::invalid_argument("DetectorArray: pixel_pitch must be > 0");
    if (!(wavelength > 0)) throw std::invalid_argument("DetectorArray: wavelength must be > 0");
}

double physical_position(int index, const DetectorArray& array) {
    if (index < 1 || index > array.pixel_count)
        throw std::invalid_argument("physical_position: pixel index " + std::to_string(index) +
                                    " outside 1.." + std::to_string(array.pixel_count));
    return (index - 1) * array.pixel_pitch;
}

double SourceGeometry::angular_diameter() const {
    return 2.0 * std::atan(dimension / distance);
}

double SourceGeometry::angular_diameter_paraxial() const {
    return 2.0 * dimension / distance;
}

void SourceGeometry::validate() const {
    if (!(dimension > 0)) throw std::invalid_argument("SourceGeometry: dimension must be > 0");
    if (!(distance > 0)) throw std::invalid_argument("SourceGeometry: distance must be > 0");
}

double coherence_argument(double separation, const SourceGeometry& source,
                          const DetectorArray& array) {
    return 0.5 * source.angular_diameter_paraxial() * array.wavenumber() * std::abs(separation);
}

double coherence_kernel(SourceKind kind, double u) {
    const double au = std::abs(u);
    if (kind == SourceKind::CircularDisc) {
        // 2 J1(u)/u; 4-term Taylor expansion below the cancellation threshold
        if (au < 1e-4) {
            const double u2 = u * u;
            return 1.0 - u2 / 8.0 + u2 * u2 / 192.0 - u2 * u2 * u2 / 9216.0;
        }
        return 2.0 * bessel_j1(u) / u;
    }
    if (au < 1e-4) {
        const double u2 = u * u;
        return 1.0 - u2 / 6.0 + u2 * u2 / 120.0 - u2 * u2 * u2 / 5040.0;
    }
    return std::sin(u) / u;
}

double coherence_kernel_zero(SourceKind kind, int which) {
    if (which < 1 || which > 2)
        throw std::invalid_argument("coherence_kernel_zero: only the first two zeros are tabulated");
    if (kind == SourceKind::Slit) return which * M_PI;
    return which == 1 ? 3.8317059702075123156 : 7.0155866698156187535;
}

double coherence_kernel_half_power(SourceKind kind) {
    // Solves kernel(u)^2 = 1/2 on (0, first zero) by bisection.
    const double target = 1.0 / std::sqrt(2.0);
    double lo = 0.0, hi = coherence_kernel_zero(kind, 1);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (coherence_kernel(kind, mid) > target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double coherence(double x1, double x2, const SourceGeometry& source, const DetectorArray& array) {
    return coherence_kernel(source.kind, coherence_argument(x1 - x2, source, array));
}

Eigen::MatrixXd coherence_matrix(const std::vector<double>& positions,
                                 const SourceGeometry& source, const DetectorArray& array) {
    if (positions.empty()) throw std::invalid_argument("coherence_matrix: empty position set");
    const auto n = static_cast<Eigen::Index>(positions.size());
    Eigen::MatrixXd gamma(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        gamma(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double g = coherence(positions[i], positions[j], source, array);
            gamma(i, j) = g;
            gamma(j, i) = g;
        }
    }
    return gamma;
}

}  // namespace hocorr
