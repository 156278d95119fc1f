#include "hocorr/noise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hocorr {

namespace {

// <eta^k> via the normal-law recurrence m_k = nu m_{k-1} + (k-1) sigma^2 m_{k-2}.
double raw_moment_recurrence(int order, double nu, double sigma) {
    double prev = 1.0, cur = nu;
    const double var = sigma * sigma;
    for (int k = 2; k <= order; ++k) {
        const double next = nu * cur + (k - 1) * var * prev;
        prev = cur;
        cur = next;
    }
    return order == 0 ? 1.0 : cur;
}

enum class RefScheme { Repeated, Distinct };

RefScheme classify_refs(const std::vector<int>& refs) {
    if (refs.empty()) throw std::invalid_argument("noise moment: empty reference set");
    if (refs.size() == 1) return RefScheme::Distinct;  // both schemes coincide
    bool all_equal = true, all_distinct = true;
    for (std::size_t i = 0; i < refs.size(); ++i)
        for (std::size_t j = i + 1; j < refs.size(); ++j) {
            if (refs[i] != refs[j]) all_equal = false;
            else all_distinct = false;
        }
    if (all_equal) return RefScheme::Repeated;
    if (all_distinct) return RefScheme::Distinct;
    throw std::invalid_argument(
        "noise moment: mixed reference multiplicities are not supported (references must be "
        "all equal or all distinct)");
}

double checked_moment(int order, const NoiseModel& model) {
    if (model.sigma == 0.0) return std::pow(model.nu, order);
    if (order > kMaxRawMomentOrder)
        throw std::invalid_argument("noise moment: requires <eta^" + std::to_string(order) +
                                    ">, beyond the supported order " +
                                    std::to_string(kMaxRawMomentOrder));
    return raw_moment_recurrence(order, model.nu, model.sigma);
}

}  // namespace

void NoiseModel::validate() const {
    if (!(nu > 0) || nu > 1) throw std::invalid_argument("NoiseModel: nu must be in (0, 1]");
    if (!(sigma >= 0)) throw std::invalid_argument("NoiseModel: sigma must be >= 0");
}

double gaussian_raw_moment(int order, const NoiseModel& model) {
    if (order < 1 || order > kMaxRawMomentOrder)
        throw std::invalid_argument("gaussian_raw_moment: order must be in 1.." +
                                    std::to_string(kMaxRawMomentOrder));
    if (model.sigma == 0.0) return std::pow(model.nu, order);
    return raw_moment_recurrence(order, model.nu, model.sigma);
}

double unit_gaussian_raw_moment(int order, double chi) {
    if (order < 0) throw std::invalid_argument("unit_gaussian_raw_moment: negative order");
    if (chi == 0.0) return 1.0;
    return raw_moment_recurrence(order, 1.0, chi);
}

double noise_moment_n(int xi, const std::vector<int>& refs, const NoiseModel& model) {
    const int n = static_cast<int>(refs.size()) + 1;
    const RefScheme scheme = classify_refs(refs);
    if (model.sigma == 0.0) return std::pow(model.nu, n);

    if (scheme == RefScheme::Distinct) {
        // nu^n (1 + sum_j delta_{x_i s_j} chi^2); at most one delta fires.
        const bool coincident = std::find(refs.begin(), refs.end(), xi) != refs.end();
        const double chi = model.chi();
        return std::pow(model.nu, n) * (1.0 + (coincident ? chi * chi : 0.0));
    }
    // Repeated reference s: nu <eta^{n-1}> away from s, <eta^n> on it.
    if (xi == refs.front()) return checked_moment(n, model);
    return model.nu * checked_moment(n - 1, model);
}

double noise_moment_2n(int xi, int xj, const std::vector<int>& refs, const NoiseModel& model) {
    const int n = static_cast<int>(refs.size()) + 1;
    const RefScheme scheme = classify_refs(refs);
    if (model.sigma == 0.0) return std::pow(model.nu, 2 * n);

    if (scheme == RefScheme::Distinct) {
        const double m2 = checked_moment(2, model);
        const double m3 = checked_moment(3, model);
        const double m4 = checked_moment(4, model);
        const double j3 = std::pow(m2, n - 1);  // prod_j <eta(s_j)^2>
        const bool i_in = std::find(refs.begin(), refs.end(), xi) != refs.end();
        const bool j_in = std::find(refs.begin(), refs.end(), xj) != refs.end();
        if (xi == xj) return i_in ? (m4 / m2) * j3 : m2 * j3;
        if (i_in && j_in) return (m3 / m2) * (m3 / m2) * j3;
        if (!i_in && !j_in) return model.nu * model.nu * j3;
        return model.nu * (m3 / m2) * j3;
    }
    const int s = refs.front();
    const double j4 = checked_moment(2 * n - 2, model);  // <eta(s)^{2n-2}>
    if (xi == xj) {
        if (xi == s) return checked_moment(2 * n, model);
        return checked_moment(2, model) * j4;
    }
    if (xi != s && xj != s) return model.nu * model.nu * j4;
    return model.nu * checked_moment(2 * n - 1, model);
}

}  // namespace hocorr
