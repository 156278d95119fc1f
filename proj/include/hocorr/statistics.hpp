#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "hocorr/correlations.hpp"
#include "hocorr/geometry.hpp"
#include "hocorr/noise.hpp"

namespace hocorr {

enum class SchemeKind { RepeatedReference, DistinctReferences };

// Reference-pixel placement plus the scan pixels that form the data
// vector. Pixel indices are 1-based. Scheme 1 repeats one reference
// n-1 times; scheme 2 uses n-1 distinct references at uniform
// separation d.
struct DetectionScheme {
    int order = 2;
    SchemeKind kind = SchemeKind::RepeatedReference;
    std::vector<int> reference_pixels;
    std::vector<int> scan_pixels;

    int separation() const;  // uniform d between adjacent references (0 if single)
    void validate(const DetectorArray& array) const;

    // Central repeated reference s = floor(M/2); scan_count = 0 scans the
    // whole array, otherwise a centered window of that many pixels.
    static DetectionScheme repeated(int order, const DetectorArray& array, int scan_count = 0);
    // n-1 references at separation d, centered on the array.
    static DetectionScheme distinct(int order, int separation, const DetectorArray& array,
                                    int scan_count = 0);
};

// Estimation parameters: source dimension a, effective intensity
// I_eff = nu <I>, and optionally the noise ratio chi = sigma/nu.
struct ParameterVector {
    double dimension = 100e-6;
    double effective_intensity = 0.5;
    std::optional<double> chi;

    int size() const { return chi ? 3 : 2; }
    Eigen::VectorXd to_vector() const;
    static ParameterVector from_vector(const Eigen::VectorXd& v, bool with_chi);
    void validate() const;
};

struct MeasurementModel {
    SourceKind source_kind = SourceKind::CircularDisc;
    double source_distance = 0.25;
    DetectorArray array;
    DetectionScheme scheme;
    long frames = 50000;  // N
    bool estimate_chi = false;
    double fixed_chi = 0.0;   // used when theta carries no chi
    double chi_init = 0.02;   // starting value handed to initial guesses
    int threads = 1;          // matrix assembly parallelism
    bool check_closed_forms = false;  // cross-check scheme-1 closed forms vs permanents

    void validate() const;
    SourceGeometry source_for(double dimension) const;
    std::vector<double> scan_positions() const;
    std::vector<double> reference_positions() const;
};

// mu_i = <G^(n)(x_i, s_2..s_n)> x <eta(x_i) eta(s_2)..eta(s_n)> in the
// (I_eff, chi) parameterization.
Eigen::VectorXd mean_vector(const ParameterVector& theta, const MeasurementModel& model);

// C_ij = (1/N) [ G^(2n) x <eta...eta> - mu_i mu_j ], plus the documented
// conditioning jitter (1e-10 x mean diagonal) that keeps the
// rank-deficient field covariance factorable.
Eigen::MatrixXd covariance_matrix(const ParameterVector& theta, const MeasurementModel& model);

struct ModelEval {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};
ModelEval evaluate_model(const ParameterVector& theta, const MeasurementModel& model);

// Cholesky factorization of a model covariance (already jittered by the
// assembly). Throws if the matrix is not positive definite.
struct FactoredCovariance {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double log_det = 0.0;
};
FactoredCovariance factor_covariance(Eigen::MatrixXd covariance);

double mvn_log_likelihood(const Eigen::VectorXd& residual, const FactoredCovariance& factored);
double log_likelihood(const Eigen::VectorXd& data, const ParameterVector& theta,
                      const MeasurementModel& model);

// Central finite-difference derivatives of mean and covariance with
// relative step 1e-5 per component.
struct ModelJacobians {
    Eigen::MatrixXd mean;                      // M x p
    std::vector<Eigen::MatrixXd> covariance;   // p matrices, M x M
};
ModelJacobians param_jacobians(const ParameterVector& theta, const MeasurementModel& model);

struct ModelDerivatives {
    ModelEval value;
    ModelJacobians jacobians;
};
// Shares the coherence tables between the value and the derivative
// evaluations; cheaper than calling the two operations separately.
ModelDerivatives evaluate_with_jacobians(const ParameterVector& theta,
                                         const MeasurementModel& model);

// Fisher information split into the mean term and the covariance term.
struct FisherSplit {
    Eigen::MatrixXd mean_term;        // dmu^T C^-1 dmu
    Eigen::MatrixXd covariance_term;  // 1/2 Tr[C^-1 dC C^-1 dC]
    Eigen::MatrixXd total() const { return mean_term + covariance_term; }
};
FisherSplit fisher_from_derivatives(const FactoredCovariance& factored,
                                    const ModelJacobians& jac);
FisherSplit fisher_information(const ParameterVector& theta, const MeasurementModel& model);

// Multivariate-normal score at theta given data residual r = x - mu.
Eigen::VectorXd score_from_derivatives(const Eigen::VectorXd& residual,
                                       const FactoredCovariance& factored,
                                       const ModelJacobians& jac);

// Per-parameter Cramer-Rao bounds = diagonal of the inverse Fisher matrix.
Eigen::VectorXd crb_from_fisher(const Eigen::MatrixXd& fisher);
Eigen::VectorXd crb(const ParameterVector& theta, const MeasurementModel& model);

}  // namespace hocorr
