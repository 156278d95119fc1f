#include "hocorr/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hocorr/parallel.hpp"

namespace hocorr {

namespace {

constexpr double kJitterScale = 1e-10;
constexpr double kClosedFormCheckTol = 1e-10;
constexpr double kDerivativeRelStep = 1e-5;

int scan_window_start(int pixel_count, int scan_count) {
    const int center = (pixel_count + 1) / 2;
    return center - scan_count / 2;
}

// gamma tables shared by every theta with the same source dimension.
struct CorrelationTables {
    Eigen::VectorXd gn;   // unit-intensity G^(n) per scan pixel
    Eigen::MatrixXd g2n;  // unit-intensity G^(2n) per scan pair
};

// Unit-efficiency noise factors for the five coincidence patterns of a
// covariance entry and the two of a mean entry, pulled from the noise
// module with synthetic pixel indices that realize each case.
struct NoiseFactors {
    double mean_plain = 1.0, mean_coincident = 1.0;
    double diag_on_ref = 1.0, diag_off_ref = 1.0;
    double off_both_ref = 1.0, off_neither = 1.0, off_one_ref = 1.0;
};

NoiseFactors make_noise_factors(const DetectionScheme& scheme, double chi) {
    NoiseModel unit{1.0, chi};
    const int n = scheme.order;
    std::vector<int> refs;
    if (scheme.kind == SchemeKind::RepeatedReference)
        refs.assign(n - 1, 1);
    else {
        refs.resize(n - 1);
        for (int t = 0; t < n - 1; ++t) refs[t] = t + 1;
    }
    NoiseFactors f;
    f.mean_plain = noise_moment_n(-1, refs, unit);
    f.mean_coincident = noise_moment_n(refs[0], refs, unit);
    f.diag_on_ref = noise_moment_2n(refs[0], refs[0], refs, unit);
    f.diag_off_ref = noise_moment_2n(-1, -1, refs, unit);
    f.off_neither = noise_moment_2n(-1, -2, refs, unit);
    f.off_one_ref = noise_moment_2n(refs[0], -1, refs, unit);
    f.off_both_ref = refs.size() >= 2 && scheme.kind == SchemeKind::DistinctReferences
                         ? noise_moment_2n(refs[0], refs[1], refs, unit)
                         : 0.0;
    return f;
}

struct SchemeIndex {
    std::vector<double> scan_pos;
    std::vector<double> ref_pos;
    std::vector<char> scan_in_refs;  // scan pixel coincides with a reference
};

SchemeIndex index_scheme(const MeasurementModel& model) {
    SchemeIndex idx;
    idx.scan_pos = model.scan_positions();
    idx.ref_pos = model.reference_positions();
    idx.scan_in_refs.resize(idx.scan_pos.size());
    const auto& refs = model.scheme.reference_pixels;
    for (std::size_t i = 0; i < model.scheme.scan_pixels.size(); ++i)
        idx.scan_in_refs[i] =
            std::find(refs.begin(), refs.end(), model.scheme.scan_pixels[i]) != refs.end();
    return idx;
}

CorrelationTables make_tables(double dimension, const MeasurementModel& model,
                              const SchemeIndex& idx, bool with_pairs = true) {
    const SourceGeometry source = model.source_for(dimension);
    const int n = model.scheme.order;
    const auto m = static_cast<Eigen::Index>(idx.scan_pos.size());
    const auto r = static_cast<Eigen::Index>(idx.ref_pos.size());

    Eigen::MatrixXd scan_scan(m, m), scan_ref(m, r), ref_ref(r, r);
    parallel_for(m, model.threads, [&](long i) {
        scan_scan(i, i) = 1.0;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double g = coherence(idx.scan_pos[i], idx.scan_pos[j], source, model.array);
            scan_scan(i, j) = g;
        }
        for (Eigen::Index t = 0; t < r; ++t)
            scan_ref(i, t) = coherence(idx.scan_pos[i], idx.ref_pos[t], source, model.array);
    });
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i + 1; j < m; ++j) scan_scan(i, j) = scan_scan(j, i);
    for (Eigen::Index s = 0; s < r; ++s)
        for (Eigen::Index t = 0; t < r; ++t)
            ref_ref(s, t) = coherence(idx.ref_pos[s], idx.ref_pos[t], source, model.array);

    CorrelationTables tables;
    tables.gn.resize(m);
    if (with_pairs) tables.g2n.resize(m, m);

    if (model.scheme.kind == SchemeKind::RepeatedReference) {
        for (Eigen::Index i = 0; i < m; ++i)
            tables.gn(i) = g_n_scheme1_kernel(n, scan_ref(i, 0));
        if (!with_pairs) return tables;
        parallel_for(m, model.threads, [&](long i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                const double value =
                    g_2n_scheme1_kernel(n, scan_scan(i, j), scan_ref(i, 0), scan_ref(j, 0));
                tables.g2n(i, j) = value;
                tables.g2n(j, i) = value;
            }
        });
        if (model.check_closed_forms) {
            const SourceGeometry src = source;
            const double s_pos = idx.ref_pos[0];
            std::vector<double> refs(n - 1, s_pos);
            for (Eigen::Index i = 0; i < m; i += std::max<Eigen::Index>(1, m / 16)) {
                const double direct = g_n({n,
                                           [&] {
                                               std::vector<double> p{idx.scan_pos[i]};
                                               p.insert(p.end(), refs.begin(), refs.end());
                                               return p;
                                           }(),
                                           1.0},
                                          src, model.array);
                if (std::abs(direct - tables.gn(i)) > kClosedFormCheckTol * std::abs(direct))
                    throw std::runtime_error("scheme-1 G^(n) closed form disagrees with permanent");
                for (Eigen::Index j = 0; j < m; j += std::max<Eigen::Index>(1, m / 16)) {
                    const double d2 = g_2n_general(idx.scan_pos[i], idx.scan_pos[j], refs, 1.0,
                                                   src, model.array);
                    if (std::abs(d2 - tables.g2n(i, j)) > kClosedFormCheckTol * std::abs(d2))
                        throw std::runtime_error(
                            "scheme-1 G^(2n) closed form disagrees with permanent");
                }
            }
        }
        return tables;
    }

    // Distinct references: permanents of the small coherence matrices.
    // The duplicated reference pair in the 2n-tuple is handled by the
    // multiset evaluator on the n+1 distinct positions (x_i, x_j, s_2..s_n).
    if (with_pairs && 2 * n > kPermanentOrderCap)
        throw std::invalid_argument("covariance: correlation order 2n exceeds the permanent cap");
    std::vector<int> mult(n + 1, 2);
    mult[0] = mult[1] = 1;
    const std::optional<MultisetPermanent> pair_plan =
        with_pairs ? std::optional<MultisetPermanent>(MultisetPermanent(mult)) : std::nullopt;
    parallel_for(m, model.threads, [&](long i) {
        double buf[kPermanentOrderCap * kPermanentOrderCap];
        {
            // (x_i, s_2..s_n)
            const int side = n;
            auto at = [&](int a, int b) -> double& { return buf[a + side * b]; };
            at(0, 0) = 1.0;
            for (int t = 0; t < n - 1; ++t) {
                at(0, t + 1) = scan_ref(i, t);
                at(t + 1, 0) = scan_ref(i, t);
                for (int u = 0; u < n - 1; ++u) at(t + 1, u + 1) = ref_ref(t, u);
            }
            tables.gn(i) = permanent(buf, side);
        }
        if (!with_pairs) return;
        const int side = n + 1;
        auto at = [&](int a, int b) -> double& { return buf[a + side * b]; };
        for (Eigen::Index j = 0; j <= i; ++j) {
            at(0, 0) = 1.0;
            at(1, 1) = 1.0;
            at(0, 1) = scan_scan(i, j);
            at(1, 0) = scan_scan(i, j);
            for (int t = 0; t < n - 1; ++t) {
                at(0, 2 + t) = at(2 + t, 0) = scan_ref(i, t);
                at(1, 2 + t) = at(2 + t, 1) = scan_ref(j, t);
                for (int u = 0; u < n - 1; ++u) at(2 + t, 2 + u) = ref_ref(t, u);
            }
            const double value = pair_plan->evaluate(buf);
            tables.g2n(i, j) = value;
            tables.g2n(j, i) = value;
        }
    });
    return tables;
}

double chi_of(const ParameterVector& theta, const MeasurementModel& model) {
    return theta.chi ? *theta.chi : model.fixed_chi;
}

Eigen::VectorXd assemble_mean(const ParameterVector& theta, const MeasurementModel& model,
                              const SchemeIndex& idx, const CorrelationTables& tables) {
    const int n = model.scheme.order;
    const auto m = static_cast<Eigen::Index>(idx.scan_pos.size());
    const NoiseFactors nf = make_noise_factors(model.scheme, chi_of(theta, model));
    const double in = std::pow(theta.effective_intensity, n);
    Eigen::VectorXd mean(m);
    for (Eigen::Index i = 0; i < m; ++i)
        mean(i) = in * tables.gn(i) * (idx.scan_in_refs[i] ? nf.mean_coincident : nf.mean_plain);
    return mean;
}

ModelEval assemble(const ParameterVector& theta, const MeasurementModel& model,
                   const SchemeIndex& idx, const CorrelationTables& tables) {
    const int n = model.scheme.order;
    const auto m = static_cast<Eigen::Index>(idx.scan_pos.size());
    const NoiseFactors nf = make_noise_factors(model.scheme, chi_of(theta, model));
    const double i2n = std::pow(theta.effective_intensity, 2 * n);
    const double inv_frames = 1.0 / static_cast<double>(model.frames);

    ModelEval eval;
    eval.mean = assemble_mean(theta, model, idx, tables);

    eval.covariance.resize(m, m);
    parallel_for(m, model.threads, [&](long i) {
        const bool i_ref = idx.scan_in_refs[i];
        for (Eigen::Index j = 0; j <= i; ++j) {
            const bool j_ref = idx.scan_in_refs[j];
            double factor;
            if (i == j)
                factor = i_ref ? nf.diag_on_ref : nf.diag_off_ref;
            else if (i_ref && j_ref)
                factor = nf.off_both_ref;
            else if (!i_ref && !j_ref)
                factor = nf.off_neither;
            else
                factor = nf.off_one_ref;
            const double value =
                (i2n * tables.g2n(i, j) * factor - eval.mean(i) * eval.mean(j)) * inv_frames;
            eval.covariance(i, j) = value;
            eval.covariance(j, i) = value;
        }
    });
    // Conditioning jitter applied here, in the model itself, so the
    // likelihood, its finite-difference derivatives and the score all see
    // the same matrix. The underlying field covariance is massively
    // rank-deficient (a few coherence cells span the scan), so the bare
    // matrix is numerically singular.
    eval.covariance.diagonal().array() += kJitterScale * eval.covariance.diagonal().mean();
    return eval;
}

void check_theta(const ParameterVector& theta, const MeasurementModel& model) {
    theta.validate();
    if (theta.chi.has_value() != model.estimate_chi)
        throw std::invalid_argument(
            "ParameterVector/model mismatch: chi must be present exactly when the model "
            "estimates it");
}

}  // namespace

int DetectionScheme::separation() const {
    if (reference_pixels.size() < 2) return 0;
    return std::abs(reference_pixels[1] - reference_pixels[0]);
}

void DetectionScheme::validate(const DetectorArray& array) const {
    if (order < 2) throw std::invalid_argument("DetectionScheme: order must be >= 2");
    const int expected = kind == SchemeKind::RepeatedReference ? 1 : order - 1;
    if (static_cast<int>(reference_pixels.size()) != expected)
        throw std::invalid_argument("DetectionScheme: expected " + std::to_string(expected) +
                                    " reference pixels, got " +
                                    std::to_string(reference_pixels.size()));
    for (int s : reference_pixels)
        if (s < 1 || s > array.pixel_count)
            throw std::invalid_argument("DetectionScheme: reference pixel outside the array");
    if (kind == SchemeKind::DistinctReferences && reference_pixels.size() >= 2) {
        const int d = reference_pixels[1] - reference_pixels[0];
        if (d == 0) throw std::invalid_argument("DetectionScheme: reference pixels must be distinct");
        for (std::size_t t = 1; t < reference_pixels.size(); ++t)
            if (reference_pixels[t] - reference_pixels[t - 1] != d)
                throw std::invalid_argument(
                    "DetectionScheme: distinct references must have uniform separation");
    }
    if (scan_pixels.empty()) throw std::invalid_argument("DetectionScheme: empty scan window");
    for (std::size_t i = 0; i < scan_pixels.size(); ++i) {
        if (scan_pixels[i] < 1 || scan_pixels[i] > array.pixel_count)
            throw std::invalid_argument("DetectionScheme: scan pixel outside the array");
        if (i > 0 && scan_pixels[i] <= scan_pixels[i - 1])
            throw std::invalid_argument("DetectionScheme: scan pixels must be strictly increasing");
    }
}

DetectionScheme DetectionScheme::repeated(int order, const DetectorArray& array, int scan_count) {
    DetectionScheme scheme;
    scheme.order = order;
    scheme.kind = SchemeKind::RepeatedReference;
    scheme.reference_pixels = {std::max(1, array.pixel_count / 2)};
    if (scan_count <= 0 || scan_count > array.pixel_count) scan_count = array.pixel_count;
    const int start = scan_window_start(array.pixel_count, scan_count);
    scheme.scan_pixels.resize(scan_count);
    for (int i = 0; i < scan_count; ++i) scheme.scan_pixels[i] = start + i;
    scheme.validate(array);
    return scheme;
}

DetectionScheme DetectionScheme::distinct(int order, int separation, const DetectorArray& array,
                                          int scan_count) {
    if (separation < 1 && order > 2)
        throw std::invalid_argument("DetectionScheme: separation must be >= 1");
    DetectionScheme scheme;
    scheme.order = order;
    scheme.kind = SchemeKind::DistinctReferences;
    const int center = (array.pixel_count + 1) / 2;
    const int count = order - 1;
    const int start = center - separation * (count - 1) / 2;
    for (int t = 0; t < count; ++t) scheme.reference_pixels.push_back(start + t * separation);
    if (scan_count <= 0 || scan_count > array.pixel_count) scan_count = array.pixel_count;
    const int scan_start = scan_window_start(array.pixel_count, scan_count);
    scheme.scan_pixels.resize(scan_count);
    for (int i = 0; i < scan_count; ++i) scheme.scan_pixels[i] = scan_start + i;
    scheme.validate(array);
    return scheme;
}

Eigen::VectorXd ParameterVector::to_vector() const {
    Eigen::VectorXd v(size());
    v(0) = dimension;
    v(1) = effective_intensity;
    if (chi) v(2) = *chi;
    return v;
}

ParameterVector ParameterVector::from_vector(const Eigen::VectorXd& v, bool with_chi) {
    if (v.size() != (with_chi ? 3 : 2))
        throw std::invalid_argument("ParameterVector: wrong vector length");
    ParameterVector theta;
    theta.dimension = v(0);
    theta.effective_intensity = v(1);
    if (with_chi) theta.chi = v(2);
    return theta;
}

void ParameterVector::validate() const {
    if (!(dimension > 0)) throw std::invalid_argument("ParameterVector: dimension must be > 0");
    if (!(effective_intensity > 0))
        throw std::invalid_argument("ParameterVector: effective intensity must be > 0");
    if (chi && !(*chi >= 0)) throw std::invalid_argument("ParameterVector: chi must be >= 0");
}

void MeasurementModel::validate() const {
    array.validate();
    scheme.validate(array);
    if (frames < 2) throw std::invalid_argument("MeasurementModel: frames must be >= 2");
    if (!(source_distance > 0))
        throw std::invalid_argument("MeasurementModel: source distance must be > 0");
    if (fixed_chi < 0) throw std::invalid_argument("MeasurementModel: fixed_chi must be >= 0");
}

SourceGeometry MeasurementModel::source_for(double dimension) const {
    return SourceGeometry{source_kind, dimension, source_distance};
}

std::vector<double> MeasurementModel::scan_positions() const {
    std::vector<double> pos(scheme.scan_pixels.size());
    for (std::size_t i = 0; i < pos.size(); ++i)
        pos[i] = physical_position(scheme.scan_pixels[i], array);
    return pos;
}

std::vector<double> MeasurementModel::reference_positions() const {
    std::vector<double> pos(scheme.reference_pixels.size());
    for (std::size_t i = 0; i < pos.size(); ++i)
        pos[i] = physical_position(scheme.reference_pixels[i], array);
    return pos;
}

ModelEval evaluate_model(const ParameterVector& theta, const MeasurementModel& model) {
    model.validate();
    check_theta(theta, model);
    const SchemeIndex idx = index_scheme(model);
    const CorrelationTables tables = make_tables(theta.dimension, model, idx);
    return assemble(theta, model, idx, tables);
}

Eigen::VectorXd mean_vector(const ParameterVector& theta, const MeasurementModel& model) {
    model.validate();
    check_theta(theta, model);
    const SchemeIndex idx = index_scheme(model);
    const CorrelationTables tables = make_tables(theta.dimension, model, idx, false);
    return assemble_mean(theta, model, idx, tables);
}

Eigen::MatrixXd covariance_matrix(const ParameterVector& theta, const MeasurementModel& model) {
    return evaluate_model(theta, model).covariance;
}

FactoredCovariance factor_covariance(Eigen::MatrixXd covariance) {
    if (covariance.rows() != covariance.cols())
        throw std::invalid_argument("factor_covariance: matrix must be square");
    FactoredCovariance fc;
    fc.llt.compute(covariance);
    if (fc.llt.info() != Eigen::Success)
        throw std::runtime_error(
            "covariance factorization failed: matrix not positive definite after jitter");
    fc.log_det = 2.0 * fc.llt.matrixLLT().diagonal().array().log().sum();
    return fc;
}

double mvn_log_likelihood(const Eigen::VectorXd& residual, const FactoredCovariance& factored) {
    const double quad = residual.dot(factored.llt.solve(residual));
    const double m = static_cast<double>(residual.size());
    return -0.5 * (quad + factored.log_det + m * std::log(2.0 * M_PI));
}

double log_likelihood(const Eigen::VectorXd& data, const ParameterVector& theta,
                      const MeasurementModel& model) {
    const ModelEval eval = evaluate_model(theta, model);
    if (data.size() != eval.mean.size())
        throw std::invalid_argument("log_likelihood: data length does not match the scan window");
    return mvn_log_likelihood(data - eval.mean, factor_covariance(eval.covariance));
}

ModelDerivatives evaluate_with_jacobians(const ParameterVector& theta,
                                         const MeasurementModel& model) {
    model.validate();
    check_theta(theta, model);
    const SchemeIndex idx = index_scheme(model);
    const Eigen::VectorXd v = theta.to_vector();
    const int p = static_cast<int>(v.size());
    for (int k = 0; k < p; ++k) {
        const double h = kDerivativeRelStep * std::abs(v(k));
        if (!(h > 0))
            throw std::invalid_argument(
                "param_jacobians: derivative step underflow for near-zero parameter " +
                std::to_string(k));
    }

    const CorrelationTables base = make_tables(theta.dimension, model, idx);
    const double ha = kDerivativeRelStep * theta.dimension;
    const CorrelationTables up = make_tables(theta.dimension + ha, model, idx);
    const CorrelationTables down = make_tables(theta.dimension - ha, model, idx);

    ModelDerivatives out;
    out.value = assemble(theta, model, idx, base);
    const auto m = out.value.mean.size();
    out.jacobians.mean.resize(m, p);
    out.jacobians.covariance.assign(p, Eigen::MatrixXd(m, m));

    for (int k = 0; k < p; ++k) {
        const double h = kDerivativeRelStep * std::abs(v(k));
        Eigen::VectorXd vp = v, vm = v;
        vp(k) += h;
        vm(k) -= h;
        const ParameterVector tp = ParameterVector::from_vector(vp, theta.chi.has_value());
        const ParameterVector tm = ParameterVector::from_vector(vm, theta.chi.has_value());
        const ModelEval ep = assemble(tp, model, idx, k == 0 ? up : base);
        const ModelEval em = assemble(tm, model, idx, k == 0 ? down : base);
        out.jacobians.mean.col(k) = (ep.mean - em.mean) / (2.0 * h);
        out.jacobians.covariance[k] = (ep.covariance - em.covariance) / (2.0 * h);
    }
    return out;
}

ModelJacobians param_jacobians(const ParameterVector& theta, const MeasurementModel& model) {
    return evaluate_with_jacobians(theta, model).jacobians;
}

FisherSplit fisher_from_derivatives(const FactoredCovariance& factored,
                                    const ModelJacobians& jac) {
    const int p = static_cast<int>(jac.mean.cols());
    FisherSplit f;
    f.mean_term = jac.mean.transpose() * factored.llt.solve(jac.mean);
    f.covariance_term.resize(p, p);
    std::vector<Eigen::MatrixXd> a(p);
    for (int k = 0; k < p; ++k) a[k] = factored.llt.solve(jac.covariance[k]);
    for (int k = 0; k < p; ++k)
        for (int l = k; l < p; ++l) {
            const double tr = a[k].cwiseProduct(a[l].transpose()).sum();
            f.covariance_term(k, l) = 0.5 * tr;
            f.covariance_term(l, k) = 0.5 * tr;
        }
    f.mean_term = 0.5 * (f.mean_term + f.mean_term.transpose()).eval();
    return f;
}

FisherSplit fisher_information(const ParameterVector& theta, const MeasurementModel& model) {
    const ModelDerivatives d = evaluate_with_jacobians(theta, model);
    return fisher_from_derivatives(factor_covariance(d.value.covariance), d.jacobians);
}

Eigen::VectorXd score_from_derivatives(const Eigen::VectorXd& residual,
                                       const FactoredCovariance& factored,
                                       const ModelJacobians& jac) {
    const int p = static_cast<int>(jac.mean.cols());
    const Eigen::VectorXd y = factored.llt.solve(residual);
    Eigen::VectorXd score = jac.mean.transpose() * y;
    for (int k = 0; k < p; ++k) {
        const Eigen::MatrixXd a = factored.llt.solve(jac.covariance[k]);
        score(k) += 0.5 * (y.dot(jac.covariance[k] * y) - a.trace());
    }
    return score;
}

Eigen::VectorXd crb_from_fisher(const Eigen::MatrixXd& fisher) {
    if (fisher.rows() != fisher.cols())
        throw std::invalid_argument("crb_from_fisher: matrix must be square");
    Eigen::FullPivLU<Eigen::MatrixXd> lu(fisher);
    if (!lu.isInvertible())
        throw std::runtime_error("singular Fisher matrix: parameterization not identifiable");
    const Eigen::VectorXd bounds = lu.inverse().diagonal();
    if (!(bounds.array() > 0).all())
        throw std::runtime_error("Fisher matrix not positive definite: negative variance bound");
    return bounds;
}

Eigen::VectorXd crb(const ParameterVector& theta, const MeasurementModel& model) {
    return crb_from_fisher(fisher_information(theta, model).total());
}

}  // namespace hocorr
