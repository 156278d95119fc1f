#include "hocorr/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "hocorr/parallel.hpp"
#include "hocorr/rng.hpp"

namespace hocorr {

namespace {

bool positive(const Eigen::VectorXd& v) {
    return (v.array() > 0).all();
}

// Relative change of the parameter vector between iterates. Measured
// against the vector scale: the per-component alternative would demand
// steps orders of magnitude below the statistical resolution of the
// smallest-magnitude parameter.
[[maybe_unused]] double relative_change(const Eigen::VectorXd& from, const Eigen::VectorXd& to) {
    return (to - from).cwiseAbs().maxCoeff() / from.cwiseAbs().maxCoeff();
}

// Kahan-compensated accumulator for the study statistics.
struct CompensatedSum {
    double sum = 0.0, carry = 0.0;
    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

}  // namespace

ParameterVector score_step(const Eigen::VectorXd& data, const ParameterVector& theta,
                           const MeasurementModel& model, const ScoringConfig& config) {
    const ModelDerivatives d = evaluate_with_jacobians(theta, model);
    if (data.size() != d.value.mean.size())
        throw std::invalid_argument("score_step: data length does not match the scan window");
    const FactoredCovariance fc = factor_covariance(d.value.covariance);
    const Eigen::VectorXd residual = data - d.value.mean;
    const Eigen::VectorXd score = score_from_derivatives(residual, fc, d.jacobians);
    const Eigen::MatrixXd fisher = fisher_from_derivatives(fc, d.jacobians).total();

    Eigen::FullPivLU<Eigen::MatrixXd> lu(fisher);
    if (!lu.isInvertible())
        throw std::runtime_error("score_step: singular Fisher matrix at the current iterate");
    Eigen::VectorXd delta = lu.solve(score);

    const Eigen::VectorXd base = theta.to_vector();
    const double loglik_here = mvn_log_likelihood(residual, fc);
    int halvings = 0;
    // keep all parameters strictly positive
    while (!positive(base + delta)) {
        if (++halvings > config.max_damping_steps)
            throw std::runtime_error("score_step: step rejected (cannot stay positive)");
        delta *= config.step_damping;
    }
    if (config.use_damping) {
        // slack covers the evaluation noise of the near-singular
        // quadratic form; damping guards against overshoot, not ulps
        const double slack = 1e-9 * (1.0 + std::abs(loglik_here));
        bool accepted = false;
        double cand_loglik = loglik_here;
        while (halvings <= config.max_damping_steps) {
            const ParameterVector candidate =
                ParameterVector::from_vector(base + delta, theta.chi.has_value());
            cand_loglik = log_likelihood(data, candidate, model);
            if (cand_loglik >= loglik_here - slack) {
                accepted = true;
                break;
            }
            ++halvings;
            delta *= config.step_damping;
        }
        // The fully damped step is below the resolution of the likelihood
        // evaluation: take it unless it is a material decrease (which signals a
        // genuinely rejected direction).
        if (!accepted) {
            if (!std::isfinite(cand_loglik) ||
                cand_loglik < loglik_here - 1e-3 * (1.0 + std::abs(loglik_here)))
                throw std::runtime_error("score_step: step rejected (damping exhausted)");
        }
    }
    return ParameterVector::from_vector(base + delta, theta.chi.has_value());
}

namespace {

// Scale-free fallback: sweep the source dimension over a log grid and
// keep the value whose mean shape correlates best with the data. Covers
// reference layouts whose lobes tile the scan (no visible plateau).
ParameterVector shape_correlation_guess(const Eigen::VectorXd& data,
                                        const MeasurementModel& model) {
    const int n = model.scheme.order;
    const double wavenumber = model.array.wavenumber();
    const double span = (model.scheme.scan_pixels.back() - model.scheme.scan_pixels.front()) *
                        model.array.pixel_pitch;
    const double half_u = coherence_kernel_half_power(model.source_kind);
    // half-power widths from two pixels up to the full window
    const double a_hi = half_u * model.source_distance / (wavenumber * 2 * model.array.pixel_pitch);
    const double a_lo = half_u * model.source_distance / (wavenumber * span);

    ParameterVector probe;
    probe.effective_intensity = 1.0;
    if (model.estimate_chi) probe.chi = model.chi_init;
    const Eigen::VectorXd centered = data.array() - data.mean();

    double best_a = std::sqrt(a_lo * a_hi), best_score = -2.0, best_level = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
        const double lo = pass == 0 ? a_lo : best_a * 0.6;
        const double hi = pass == 0 ? a_hi : best_a / 0.6;
        const int points = pass == 0 ? 32 : 16;
        for (int g = 0; g <= points; ++g) {
            probe.dimension = lo * std::pow(hi / lo, static_cast<double>(g) / points);
            const Eigen::VectorXd shape = mean_vector(probe, model);
            const Eigen::VectorXd sc = shape.array() - shape.mean();
            const double denom = sc.norm() * centered.norm();
            if (!(denom > 0)) continue;
            const double score = sc.dot(centered) / denom;
            if (score > best_score) {
                best_score = score;
                best_a = probe.dimension;
                best_level = shape.mean();
            }
        }
    }
    if (best_score < 0.2)
        throw std::runtime_error("initial_guess: data shape matches no source dimension");
    ParameterVector theta;
    theta.dimension = best_a;
    theta.effective_intensity = std::pow(data.mean() / best_level, 1.0 / n);
    if (model.estimate_chi) theta.chi = model.chi_init;
    theta.validate();
    return theta;
}

}  // namespace

ParameterVector initial_guess(const Eigen::VectorXd& data, const MeasurementModel& model) {
    model.validate();
    const int n = model.scheme.order;
    const auto m = data.size();
    if (m != static_cast<Eigen::Index>(model.scheme.scan_pixels.size()))
        throw std::invalid_argument("initial_guess: data length does not match the scan window");
    const std::vector<double> scan = model.scan_positions();
    const std::vector<double> refs = model.reference_positions();

    Eigen::Index peak = 0;
    data.maxCoeff(&peak);
    const double peak_value = data(peak);
    std::vector<double> sorted(data.data(), data.data() + m);
    std::nth_element(sorted.begin(), sorted.begin() + m / 2, sorted.end());
    const double median = sorted[m / 2];
    if (!(peak_value > 1.05 * median) || !(median > 0))
        throw std::runtime_error("initial_guess: no correlation peak detected in the data");

    // Bunching fixes the peak-to-plateau ratio: n at a repeated reference,
    // 2 at an isolated one, so the plateau follows from the peak alone.
    const double peak_ratio = model.scheme.kind == SchemeKind::RepeatedReference ? n : 2.0;
    double plateau = peak_value / peak_ratio;

    try {

    const double wavenumber = model.array.wavenumber();
    const double half_u = coherence_kernel_half_power(model.source_kind);
    const double zero_u = coherence_kernel_zero(model.source_kind, 1);

    auto half_width = [&](double level) -> double {
        // distance from the peak to where the excess drops below half,
        // linearly interpolated; averaged over the sides that resolve it
        const double target = level + 0.5 * (data(peak) - level);
        double total = 0.0;
        int sides = 0;
        for (int dir : {+1, -1}) {
            for (Eigen::Index i = peak + dir; i >= 0 && i < m; i += dir) {
                if (data(i) <= target) {
                    const double x0 = scan[i - dir], x1 = scan[i];
                    const double y0 = data(i - dir), y1 = data(i);
                    const double frac = (y0 - target) / (y0 - y1);
                    total += std::abs(x0 + frac * (x1 - x0) - scan[peak]);
                    ++sides;
                    break;
                }
            }
        }
        if (sides == 0)
            throw std::runtime_error("initial_guess: correlation peak wider than the scan window");
        return total / sides;
    };

    double dx_half = half_width(plateau);
    double dimension = half_u * model.source_distance / (wavenumber * dx_half);

    // Refine the plateau with the spec'd construction (median of pixels
    // beyond the first coherence zero) when the window reaches that far.
    const double zero_distance = zero_u * model.source_distance / (wavenumber * dimension);
    std::vector<double> far;
    for (Eigen::Index i = 0; i < m; ++i) {
        double nearest = 1e300;
        for (double r : refs) nearest = std::min(nearest, std::abs(scan[i] - r));
        if (nearest > zero_distance) far.push_back(data(i));
    }
    if (far.size() >= 5) {
        std::nth_element(far.begin(), far.begin() + far.size() / 2, far.end());
        plateau = far[far.size() / 2];
        dx_half = half_width(plateau);
        dimension = half_u * model.source_distance / (wavenumber * dx_half);
    }

    // plateau = I_eff^n * perm(Gamma_refs); (n-1)! for a repeated reference
    double ref_perm;
    if (model.scheme.kind == SchemeKind::RepeatedReference) {
        ref_perm = 1.0;
        for (int i = 2; i < n; ++i) ref_perm *= i;
    } else {
        const SourceGeometry source = model.source_for(dimension);
        ref_perm = permanent(coherence_matrix(refs, source, model.array));
    }
    if (!(plateau > 0) || !(ref_perm > 0))
        throw std::runtime_error("initial_guess: degenerate plateau estimate");

    ParameterVector theta;
    theta.dimension = dimension;
    theta.effective_intensity = std::pow(plateau / ref_perm, 1.0 / n);
    if (model.estimate_chi) theta.chi = model.chi_init;
    theta.validate();
    return theta;
    } catch (const std::runtime_error&) {
        // peak width unresolved (e.g. reference lobes tile the scan):
        // fall back to matching the mean shape over a dimension grid
        return shape_correlation_guess(data, model);
    }
}

EstimationResult estimate(const Eigen::VectorXd& data, const MeasurementModel& model,
                          const ScoringConfig& config,
                          const std::optional<ParameterVector>& theta0) {
    ParameterVector theta = theta0 ? *theta0 : initial_guess(data, model);
    EstimationResult result;
    result.theta_hat = theta;

    // Trust radius on the vector-relative step. Near the optimum the score
    // inherits the evaluation noise of the near-singular covariance and the
    // iterates chatter instead of contracting; shrinking the radius once
    // the likelihood stops improving measurably forces termination at a
    // statistically stationary point.
    double radius = 0.5;
    double best_loglik = -std::numeric_limits<double>::infinity();
    bool stalled = false;
    for (int it = 0; it < config.max_iterations; ++it) {
        Eigen::VectorXd step;
        try {
            const ParameterVector proposed = score_step(data, theta, model, config);
            step = proposed.to_vector() - theta.to_vector();
        } catch (const std::runtime_error&) {
            stalled = true;  // rejected step or singular Fisher: flag, keep current iterate
        }
        result.iterations = it + 1;
        if (stalled) break;
        const double scale = theta.to_vector().cwiseAbs().maxCoeff();
        double rel = step.cwiseAbs().maxCoeff() / scale;
        if (rel > radius) {
            step *= radius / rel;
            rel = radius;
        }
        const ParameterVector next =
            ParameterVector::from_vector(theta.to_vector() + step, theta.chi.has_value());
        const double loglik = log_likelihood(data, next, model);
        if (loglik > best_loglik + 1e-4 * (1.0 + std::abs(loglik))) {
            best_loglik = std::max(best_loglik, loglik);
            radius = std::min(2.0 * radius, 0.5);
        } else {
            radius *= 0.5;
        }
        theta = next;
        if (rel < config.tolerance) {
            result.converged = true;
            break;
        }
    }
    result.theta_hat = theta;
    result.log_likelihood = log_likelihood(data, theta, model);
    try {
        result.fisher = fisher_information(theta, model).total();
        result.crb = crb_from_fisher(result.fisher);
    } catch (const std::runtime_error&) {
        result.converged = false;  // no usable curvature at the solution
    }
    return result;
}

MeasurementModel study_model(const StudySetup& setup, int order) {
    MeasurementModel model;
    model.source_kind = setup.source.kind;
    model.source_distance = setup.source.distance;
    model.array = setup.array;
    model.scheme = setup.scheme_kind == SchemeKind::RepeatedReference
                       ? DetectionScheme::repeated(order, setup.array, setup.scan_count)
                       : DetectionScheme::distinct(order, setup.separation, setup.array,
                                                   setup.scan_count);
    model.frames = setup.frames;
    model.estimate_chi = setup.estimate_chi;
    model.fixed_chi = setup.noise.chi();
    model.threads = 1;  // trials parallelize; keep per-trial work single-threaded
    return model;
}

ParameterVector study_truth(const StudySetup& setup) {
    ParameterVector truth;
    truth.dimension = setup.source.dimension;
    truth.effective_intensity = setup.noise.nu * setup.mean_intensity;
    if (setup.estimate_chi) truth.chi = setup.noise.chi();
    return truth;
}

StudyReport monte_carlo_study(const StudySetup& setup) {
    if (setup.repetitions < 2)
        throw std::invalid_argument("monte_carlo_study: need at least 2 repetitions");
    StudyReport report;
    const ParameterVector truth = study_truth(setup);

    for (int order : setup.orders) {
        MeasurementModel model = study_model(setup, order);
        MeasurementModel crb_model = model;
        crb_model.threads = setup.threads;
        const Eigen::VectorXd bound = crb(truth, crb_model);

        const int r = setup.repetitions;
        std::vector<double> a_hat(r);
        std::vector<char> ok(r, 0);
        parallel_for(r, setup.threads, [&](long trial) {
            const std::uint64_t trial_index =
                setup.reuse_trial_seed ? 0 : static_cast<std::uint64_t>(trial);
            const auto field_key = derive_key(
                setup.seed, stream_purpose::kThermalField ^ static_cast<std::uint64_t>(order),
                trial_index);
            const auto noise_key = derive_key(
                setup.seed, stream_purpose::kDetectorNoise ^ static_cast<std::uint64_t>(order),
                trial_index);
            try {
                const Eigen::VectorXd data = simulate_measured_correlation(
                    setup.source, setup.array, setup.noise, setup.mean_intensity, setup.frames,
                    model.scheme, field_key, noise_key);
                const EstimationResult est = estimate(data, model, setup.scoring);
                if (est.converged && std::isfinite(est.theta_hat.dimension)) {
                    a_hat[trial] = est.theta_hat.dimension;
                    ok[trial] = 1;
                }
            } catch (const std::exception&) {
                // counted as a failure below
            }
        });

        StudyRow row;
        row.order = order;
        row.scheme = setup.scheme_kind;
        row.separation =
            setup.scheme_kind == SchemeKind::DistinctReferences ? setup.separation : 0;
        CompensatedSum sum;
        int good = 0;
        for (int t = 0; t < r; ++t)
            if (ok[t]) {
                sum.add(a_hat[t]);
                ++good;
            }
        row.trials = good;
        row.failures = r - good;
        if (good >= 2) {
            const double mean = sum.sum / good;
            CompensatedSum sq;
            for (int t = 0; t < r; ++t)
                if (ok[t]) sq.add((a_hat[t] - mean) * (a_hat[t] - mean));
            row.mean_dimension = mean;
            row.var_sim = sq.sum / (good - 1);
        }
        row.var_crb = bound(0);
        if (row.failures > setup.max_failure_fraction * r)
            throw std::runtime_error("study invalid: order " + std::to_string(order) + " had " +
                                     std::to_string(row.failures) + " failed trials out of " +
                                     std::to_string(r));
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace hocorr
