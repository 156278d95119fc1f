#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "hocorr/geometry.hpp"
#include "hocorr/noise.hpp"
#include "hocorr/rng.hpp"
#include "hocorr/statistics.hpp"

namespace hocorr {

// One measurement run: N frames of the M-pixel array, column k = frame k.
struct FrameSet {
    Eigen::MatrixXd intensities;  // pixel_count rows x frames cols
    std::uint64_t seed = 0;
    std::uint64_t noise_seed = 0;
    bool noise_applied = false;
    SourceGeometry source;
    DetectorArray array;
    NoiseModel noise;
    double mean_intensity = 1.0;

    int pixel_count() const { return static_cast<int>(intensities.rows()); }
    long frame_count() const { return static_cast<long>(intensities.cols()); }
};

// Draws thermal-light frames: per frame, complex field alpha = a + ib with
// <a a^T> = <b b^T> = (1/2) <I> Gamma sampled through a pivoted factorization,
// intensity |alpha|^2. Frame k depends only on (seed, k).
FrameSet sample_thermal_fields(const SourceGeometry& source, const DetectorArray& array,
                               double mean_intensity, long frames, std::uint64_t seed);

// Multiplies every intensity by an independent efficiency draw
// eta ~ Normal(nu, sigma^2) clamped at zero.
FrameSet apply_detector_noise(FrameSet frames, const NoiseModel& noise, std::uint64_t seed);

// Sample correlation over the scheme's scan pixels:
// entry i = (1/N) sum_k I_k(x_i) I_k(s_2) ... I_k(s_n).
Eigen::VectorXd sample_correlation(const FrameSet& frames, const DetectionScheme& scheme);

// Streamed simulate-and-correlate used by the Monte Carlo studies: only
// the scan-union-reference pixels are sampled and frames never
// materialize. Statistically identical to the FrameSet pipeline.
Eigen::VectorXd simulate_measured_correlation(const SourceGeometry& source,
                                              const DetectorArray& array,
                                              const NoiseModel& noise, double mean_intensity,
                                              long frames, const DetectionScheme& scheme,
                                              std::array<std::uint64_t, 2> field_key,
                                              std::array<std::uint64_t, 2> noise_key);

// Sampling operator T with T T^T = (1/2) <I> Gamma + jitter, via pivoted
// LDLT with negative pivots clamped to zero.
Eigen::MatrixXd field_sampling_transform(const Eigen::MatrixXd& coherence,
                                         double mean_intensity);

}  // namespace hocorr
