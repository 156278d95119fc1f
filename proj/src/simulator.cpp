#include "hocorr/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hocorr {

namespace {

constexpr double kFactorJitterScale = 1e-12;
constexpr long kFrameBlock = 256;

// Draws the two field-normal vectors of frame `frame` into the given
// columns. Draw order is fixed per frame, so results do not depend on
// how frames are grouped into blocks.
void fill_frame_normals(std::array<std::uint64_t, 2> key, long frame,
                        Eigen::Ref<Eigen::VectorXd> za, Eigen::Ref<Eigen::VectorXd> zb) {
    const auto p = za.size();
    std::vector<double> draws(2 * p);
    NormalBlockStream(key, static_cast<std::uint64_t>(frame)).fill(draws.data(), 2 * p);
    for (Eigen::Index i = 0; i < p; ++i) za(i) = draws[i];
    for (Eigen::Index i = 0; i < p; ++i) zb(i) = draws[p + i];
}

}  // namespace

Eigen::MatrixXd field_sampling_transform(const Eigen::MatrixXd& coherence,
                                         double mean_intensity) {
    Eigen::MatrixXd cov = 0.5 * mean_intensity * coherence;
    cov.diagonal().array() += kFactorJitterScale * mean_intensity;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("field sampling: coherence matrix factorization failed");
    Eigen::VectorXd d = ldlt.vectorD();
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = d(i) > 0 ? std::sqrt(d(i)) : 0.0;
    Eigen::MatrixXd t = ldlt.matrixL();
    t = t * d.asDiagonal();
    // undo the pivoting: rows back to original order
    t = ldlt.transpositionsP().transpose() * t;
    return t;
}

FrameSet sample_thermal_fields(const SourceGeometry& source, const DetectorArray& array,
                               double mean_intensity, long frames, std::uint64_t seed) {
    source.validate();
    array.validate();
    if (frames < 1) throw std::invalid_argument("sample_thermal_fields: frames must be >= 1");
    if (!(mean_intensity >= 0))
        throw std::invalid_argument("sample_thermal_fields: mean intensity must be >= 0");

    std::vector<double> positions(array.pixel_count);
    for (int i = 0; i < array.pixel_count; ++i) positions[i] = physical_position(i + 1, array);
    const Eigen::MatrixXd transform =
        field_sampling_transform(coherence_matrix(positions, source, array), mean_intensity);

    FrameSet set;
    set.intensities.resize(array.pixel_count, frames);
    set.seed = seed;
    set.source = source;
    set.array = array;
    set.mean_intensity = mean_intensity;

    const auto key = derive_key(seed, stream_purpose::kThermalField, 0);
    const auto p = static_cast<Eigen::Index>(array.pixel_count);
    Eigen::MatrixXd z1(p, kFrameBlock), z2(p, kFrameBlock), fa(p, kFrameBlock),
        fb(p, kFrameBlock);
    for (long begin = 0; begin < frames; begin += kFrameBlock) {
        const long count = std::min(kFrameBlock, frames - begin);
        for (long k = 0; k < count; ++k)
            fill_frame_normals(key, begin + k, z1.col(k), z2.col(k));
        fa.leftCols(count).noalias() = transform * z1.leftCols(count);
        fb.leftCols(count).noalias() = transform * z2.leftCols(count);
        set.intensities.middleCols(begin, count) =
            fa.leftCols(count).array().square() + fb.leftCols(count).array().square();
    }
    return set;
}

FrameSet apply_detector_noise(FrameSet frames, const NoiseModel& noise, std::uint64_t seed) {
    noise.validate();
    const auto key = derive_key(seed, stream_purpose::kDetectorNoise, 0);
    const int m = frames.pixel_count();
    std::vector<double> draws(m);
    for (long k = 0; k < frames.frame_count(); ++k) {
        NormalBlockStream(key, static_cast<std::uint64_t>(k)).fill(draws.data(), m);
        for (int i = 0; i < m; ++i) {
            const double eta = std::max(0.0, noise.nu + noise.sigma * draws[i]);
            frames.intensities(i, k) *= eta;
        }
    }
    frames.noise = noise;
    frames.noise_seed = seed;
    frames.noise_applied = true;
    return frames;
}

Eigen::VectorXd sample_correlation(const FrameSet& frames, const DetectionScheme& scheme) {
    scheme.validate(frames.array);
    if (frames.pixel_count() != frames.array.pixel_count)
        throw std::invalid_argument("sample_correlation: frame set does not match its array");
    const long n_frames = frames.frame_count();
    const auto m = static_cast<Eigen::Index>(scheme.scan_pixels.size());
    Eigen::VectorXd out = Eigen::VectorXd::Zero(m);

    // Reference product per frame; the repeated-reference scheme takes
    // powers of the single reference row by repeated multiplication so it
    // is bit-identical to multiplying duplicated columns.
    Eigen::VectorXd ref_product(n_frames);
    for (long k = 0; k < n_frames; ++k) {
        double prod = 1.0;
        if (scheme.kind == SchemeKind::RepeatedReference) {
            const double value = frames.intensities(scheme.reference_pixels[0] - 1, k);
            for (int t = 0; t < scheme.order - 1; ++t) prod *= value;
        } else {
            for (int s : scheme.reference_pixels) prod *= frames.intensities(s - 1, k);
        }
        ref_product(k) = prod;
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        const int row = scheme.scan_pixels[i] - 1;
        double acc = 0.0;
        for (long k = 0; k < n_frames; ++k) acc += frames.intensities(row, k) * ref_product(k);
        out(i) = acc / static_cast<double>(n_frames);
    }
    return out;
}

Eigen::VectorXd simulate_measured_correlation(const SourceGeometry& source,
                                              const DetectorArray& array,
                                              const NoiseModel& noise, double mean_intensity,
                                              long frames, const DetectionScheme& scheme,
                                              std::array<std::uint64_t, 2> field_key,
                                              std::array<std::uint64_t, 2> noise_key) {
    source.validate();
    array.validate();
    noise.validate();
    scheme.validate(array);
    if (frames < 1) throw std::invalid_argument("simulate: frames must be >= 1");

    // union of scan and reference pixels, in pixel order
    std::vector<int> pixels = scheme.scan_pixels;
    for (int s : scheme.reference_pixels)
        if (std::find(pixels.begin(), pixels.end(), s) == pixels.end()) pixels.push_back(s);
    std::sort(pixels.begin(), pixels.end());
    auto slot_of = [&](int pixel) {
        return static_cast<int>(std::lower_bound(pixels.begin(), pixels.end(), pixel) -
                                pixels.begin());
    };

    std::vector<double> positions(pixels.size());
    for (std::size_t i = 0; i < pixels.size(); ++i)
        positions[i] = physical_position(pixels[i], array);
    const Eigen::MatrixXd transform =
        field_sampling_transform(coherence_matrix(positions, source, array), mean_intensity);

    const auto p = static_cast<Eigen::Index>(pixels.size());
    const auto m = static_cast<Eigen::Index>(scheme.scan_pixels.size());
    std::vector<int> scan_slot(m), ref_slot(scheme.reference_pixels.size());
    for (Eigen::Index i = 0; i < m; ++i) scan_slot[i] = slot_of(scheme.scan_pixels[i]);
    for (std::size_t t = 0; t < ref_slot.size(); ++t)
        ref_slot[t] = slot_of(scheme.reference_pixels[t]);

    Eigen::VectorXd out = Eigen::VectorXd::Zero(m);
    Eigen::MatrixXd z1(p, kFrameBlock), z2(p, kFrameBlock), fa(p, kFrameBlock),
        fb(p, kFrameBlock);
    Eigen::VectorXd intensity(p);
    std::vector<double> eta(p);
    const bool noisy = noise.nu != 1.0 || noise.sigma != 0.0;
    for (long begin = 0; begin < frames; begin += kFrameBlock) {
        const long count = std::min(kFrameBlock, frames - begin);
        for (long k = 0; k < count; ++k)
            fill_frame_normals(field_key, begin + k, z1.col(k), z2.col(k));
        fa.leftCols(count).noalias() = transform * z1.leftCols(count);
        fb.leftCols(count).noalias() = transform * z2.leftCols(count);
        for (long k = 0; k < count; ++k) {
            intensity = fa.col(k).array().square() + fb.col(k).array().square();
            if (noisy) {
                NormalBlockStream(noise_key, static_cast<std::uint64_t>(begin + k))
                    .fill(eta.data(), p);
                for (Eigen::Index i = 0; i < p; ++i)
                    intensity(i) *= std::max(0.0, noise.nu + noise.sigma * eta[i]);
            }
            double prod = 1.0;
            if (scheme.kind == SchemeKind::RepeatedReference) {
                const double value = intensity(ref_slot[0]);
                for (int t = 0; t < scheme.order - 1; ++t) prod *= value;
            } else {
                for (int slot : ref_slot) prod *= intensity(slot);
            }
            for (Eigen::Index i = 0; i < m; ++i) out(i) += intensity(scan_slot[i]) * prod;
        }
    }
    return out / static_cast<double>(frames);
}

}  // namespace hocorr
