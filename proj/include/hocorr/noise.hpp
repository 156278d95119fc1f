#pragma once

#include <vector>

namespace hocorr {

// Per-pixel Gaussian efficiency eta ~ Normal(nu, sigma^2), independent
// across pixels and frames. sigma = 0 recovers the constant-loss model.
struct NoiseModel {
    double nu = 0.5;
    double sigma = 0.0;

    double chi() const { return sigma / nu; }
    void validate() const;
};

inline constexpr int kMaxRawMomentOrder = 8;

// Raw moment <eta^order> of the normal law, order 1..8.
double gaussian_raw_moment(int order, const NoiseModel& model);

// Same moment for unit mean and std chi: <z^order>, z ~ Normal(1, chi^2).
// Moments factor as nu^order * unit moment, which is what the
// (I_eff, chi) parameterization of the measurement model consumes.
double unit_gaussian_raw_moment(int order, double chi);

// <eta(x_i) eta(s_2) ... eta(s_n)> for reference pixels that are either
// all distinct (detection scheme 2) or all equal (scheme 1). Pixels are
// compared by index so coincidences are exact.
double noise_moment_n(int xi, const std::vector<int>& refs, const NoiseModel& model);

// <eta(x_i) eta(x_j) eta(s_2)^2 ... eta(s_n)^2>, the factor appearing in
// the covariance of the measured correlations.
double noise_moment_2n(int xi, int xj, const std::vector<int>& refs, const NoiseModel& model);

}  // namespace hocorr
