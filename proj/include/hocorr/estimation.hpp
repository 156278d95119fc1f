#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "hocorr/simulator.hpp"
#include "hocorr/statistics.hpp"

namespace hocorr {

struct ScoringConfig {
    int max_iterations = 50;
    double tolerance = 1e-8;    // relative parameter change
    double step_damping = 0.5;  // shrink factor when the likelihood decreases
    int max_damping_steps = 10;
    bool use_damping = true;
};

struct EstimationResult {
    ParameterVector theta_hat;
    int iterations = 0;
    bool converged = false;
    double log_likelihood = 0.0;
    Eigen::MatrixXd fisher;  // at the solution
    Eigen::VectorXd crb;     // empty when the Fisher matrix is singular there
};

// One scoring update: solve I(theta_k) (theta_{k+1} - theta_k) = score.
// Steps that cross zero or (with damping enabled) decrease the
// log-likelihood are halved; throws once the halving budget is spent.
ParameterVector score_step(const Eigen::VectorXd& data, const ParameterVector& theta,
                           const MeasurementModel& model, const ScoringConfig& config = {});

// Rough starting point: intensity from the correlation plateau, dimension
// from the half-power width of the central peak, chi from the configured
// prior. Throws when no peak stands out of the data.
ParameterVector initial_guess(const Eigen::VectorXd& data, const MeasurementModel& model);

EstimationResult estimate(const Eigen::VectorXd& data, const MeasurementModel& model,
                          const ScoringConfig& config = {},
                          const std::optional<ParameterVector>& theta0 = std::nullopt);

struct StudyRow {
    int order = 0;
    SchemeKind scheme = SchemeKind::RepeatedReference;
    int separation = 0;
    double mean_dimension = 0.0;   // mean of a-hat (m)
    double var_sim = 0.0;          // sample variance of a-hat (m^2)
    double var_crb = 0.0;          // CRB at the true parameters (m^2)
    int trials = 0;                // successful trials
    int failures = 0;
};

struct StudyReport {
    std::vector<StudyRow> rows;
};

struct StudySetup {
    SourceGeometry source;  // true source, dimension = a_true
    DetectorArray array;
    NoiseModel noise;
    double mean_intensity = 1.0;
    long frames = 50000;
    std::vector<int> orders = {2, 3, 4, 5};
    SchemeKind scheme_kind = SchemeKind::RepeatedReference;
    int separation = 0;  // scheme 2 reference spacing
    int scan_count = 0;  // 0 = scan the whole array
    bool estimate_chi = false;
    int repetitions = 1000;
    std::uint64_t seed = 0;
    int threads = 1;
    ScoringConfig scoring;
    double max_failure_fraction = 0.01;
    bool reuse_trial_seed = false;  // degenerate determinism check: all trials share trial 0
};

// Builds the model for the given order under this setup.
MeasurementModel study_model(const StudySetup& setup, int order);
// True parameter vector ((a, nu<I>) plus chi when estimated).
ParameterVector study_truth(const StudySetup& setup);

// R independent simulate-and-estimate trials per order; failures are
// counted, excluded from the statistics, and the study throws if they
// exceed max_failure_fraction.
StudyReport monte_carlo_study(const StudySetup& setup);

}  // namespace hocorr
