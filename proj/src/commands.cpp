#include "hocorr/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>
#include <stdexcept>

#include "hocorr/csv.hpp"
#include "hocorr/frameset_io.hpp"
#include "hocorr/parallel.hpp"
#include "hocorr/svg.hpp"

namespace hocorr {

namespace {

std::string ensure_dir(const std::string& out_dir) {
    std::filesystem::path p(out_dir.empty() ? "." : out_dir);
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + p.string() + "': " +
                                     ec.message());
    return p.string();
}

std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

// Pixel separations at which the source coherence vanishes.
std::pair<double, double> zero_separations_px(const ExperimentConfig& config) {
    const SourceGeometry source = config.source();
    const DetectorArray array = config.array();
    const double u_per_px = coherence_argument(array.pixel_pitch, source, array);
    return {coherence_kernel_zero(source.kind, 1) / u_per_px,
            coherence_kernel_zero(source.kind, 2) / u_per_px};
}

}  // namespace

std::vector<DScanRow> crb_d_scan(const ExperimentConfig& config, int threads) {
    config.validate();
    if (config.scheme_kind() != SchemeKind::DistinctReferences)
        throw std::invalid_argument("scan-d requires the distinct-reference scheme");
    if (config.d_min < 1)
        throw std::invalid_argument("scan-d: reference pixels must be distinct (d >= 1)");
    if (config.d_max < config.d_min || config.d_step < 1)
        throw std::invalid_argument("scan-d: bad separation range");

    std::vector<int> ds;
    for (int d = config.d_min; d <= config.d_max; d += config.d_step) ds.push_back(d);
    const auto [zero1, zero2] = zero_separations_px(config);

    const StudySetup base = config.study_setup();
    const ParameterVector truth = study_truth(base);
    const long total = static_cast<long>(ds.size()) * static_cast<long>(config.orders.size());
    std::vector<DScanRow> rows(total);
    std::vector<char> feasible(total, 0);
    parallel_for(total, threads, [&](long idx) {
        const int d = ds[idx / config.orders.size()];
        const int order = config.orders[idx % config.orders.size()];
        StudySetup setup = base;
        setup.separation = d;
        MeasurementModel model;
        try {
            model = study_model(setup, order);
        } catch (const std::invalid_argument&) {
            return;  // references do not fit the array at this separation
        }
        DScanRow& row = rows[idx];
        row.separation = d;
        row.order = order;
        row.std_crb = std::sqrt(crb(truth, model)(0));
        row.nearest_zero = std::abs(d - zero1) <= std::abs(d - zero2) ? zero1 : zero2;
        row.at_zero = std::abs(d - row.nearest_zero) < 0.5;
        feasible[idx] = 1;
    });
    std::vector<DScanRow> kept;
    kept.reserve(total);
    for (long i = 0; i < total; ++i)
        if (feasible[i]) kept.push_back(rows[i]);
    return kept;
}

std::vector<SigmaScanRow> crb_sigma_scan(const ExperimentConfig& config, int threads) {
    config.validate();
    if (config.sigma_count < 2) throw std::invalid_argument("scan-sigma: need >= 2 grid points");
    if (!(config.sigma_max >= config.sigma_min) || config.sigma_min < 0)
        throw std::invalid_argument("scan-sigma: bad sigma range");

    std::vector<SigmaScanRow> rows(config.sigma_nus.size() * config.sigma_count);
    const StudySetup base = config.study_setup();
    parallel_for(static_cast<long>(rows.size()), threads, [&](long idx) {
        const double nu = config.sigma_nus[idx / config.sigma_count];
        const int step = static_cast<int>(idx % config.sigma_count);
        const double sigma = config.sigma_min + (config.sigma_max - config.sigma_min) * step /
                                                    (config.sigma_count - 1);
        StudySetup setup = base;
        setup.noise = NoiseModel{nu, sigma};
        // (a, I_eff) with the noise known: bound comparable across the
        // grid and exactly the constant-loss model at sigma = 0
        setup.estimate_chi = false;
        MeasurementModel model = study_model(setup, config.sigma_order);
        const ParameterVector truth = study_truth(setup);
        rows[idx] = {nu, sigma, crb(truth, model)(0)};
    });
    return rows;
}

std::vector<CurveRow> correlation_curves(const ExperimentConfig& config) {
    const DetectorArray array = config.array();
    array.validate();
    SourceGeometry source = config.source();
    if (config.curve_angular_diameter > 0) {
        // same curve by the scaling invariance u = (theta k/2) |dx|
        source.dimension = 0.5 * config.curve_angular_diameter * source.distance;
    }
    source.validate();
    std::vector<CurveRow> rows;
    for (int sep = -config.curve_half_window; sep <= config.curve_half_window; ++sep) {
        const double dx = sep * array.pixel_pitch;
        const double gamma = coherence(dx, 0.0, source, array);
        for (int n : config.curve_orders)
            rows.push_back({static_cast<double>(sep), n,
                            std::pow(config.mean_intensity, n) * g_n_scheme1_kernel(n, gamma)});
    }
    return rows;
}

std::vector<std::string> cmd_simulate(const ExperimentConfig& config, const std::string& out_dir) {
    config.validate();
    const std::string dir = ensure_dir(out_dir);
    FrameSet frames = sample_thermal_fields(config.source(), config.array(),
                                            config.mean_intensity, config.frames, config.seed);
    const NoiseModel noise = config.noise();
    if (noise.nu != 1.0 || noise.sigma != 0.0)
        frames = apply_detector_noise(std::move(frames), noise, config.seed + 1);
    const std::string path = join(dir, "frames.hbtf");
    write_frameset(path, frames);
    return {path, frameset_meta_path(path)};
}

void write_study_csv(const std::string& path, const StudyReport& report) {
    CsvWriter csv(path);
    csv.header({"n", "scheme", "d", "mean_a_um", "var_sim_um2", "var_crb_um2", "trials",
                "failures"});
    for (const StudyRow& row : report.rows) {
        csv.cell(row.order);
        csv.cell(row.scheme == SchemeKind::RepeatedReference ? 1 : 2);
        csv.cell(row.separation);
        csv.cell(row.mean_dimension * 1e6);
        csv.cell(row.var_sim * 1e12);
        csv.cell(row.var_crb * 1e12);
        csv.cell(row.trials);
        csv.cell(row.failures);
        csv.end_row();
    }
}

std::vector<std::string> cmd_study(const ExperimentConfig& config, int threads,
                                   const std::string& out_dir, bool svg, StudyReport* report_out) {
    config.validate();
    const std::string dir = ensure_dir(out_dir);
    StudySetup setup = config.study_setup();
    setup.threads = threads;
    const StudyReport report = monte_carlo_study(setup);
    const std::string path = join(dir, "study.csv");
    write_study_csv(path, report);
    std::vector<std::string> written{path};
    if (svg) {
        SvgSeries sim{"var_sim", {}, {}}, bound{"var_crb", {}, {}};
        for (const auto& row : report.rows) {
            sim.x.push_back(row.order);
            sim.y.push_back(row.var_sim * 1e12);
            bound.x.push_back(row.order);
            bound.y.push_back(row.var_crb * 1e12);
        }
        const std::string plot = join(dir, "study.svg");
        write_svg_plot(plot, "estimator variance vs correlation order", "n", "var(a) (um^2)",
                       {sim, bound});
        written.push_back(plot);
    }
    if (report_out) *report_out = report;
    return written;
}

std::vector<std::string> cmd_scan_d(const ExperimentConfig& config, int threads,
                                    const std::string& out_dir, bool svg) {
    const std::string dir = ensure_dir(out_dir);
    const auto rows = crb_d_scan(config, threads);
    const std::string path = join(dir, "scan_d.csv");
    {
        CsvWriter csv(path);
        csv.header({"d", "n", "std_crb_um", "nearest_coherence_zero_d", "at_zero"});
        for (const auto& row : rows) {
            csv.cell(row.separation);
            csv.cell(row.order);
            csv.cell(row.std_crb * 1e6);
            csv.cell(row.nearest_zero);
            csv.cell(row.at_zero ? 1 : 0);
        csv.end_row();
        }
    }
    std::vector<std::string> written{path};
    if (svg) {
        std::map<int, SvgSeries> by_order;
        for (const auto& row : rows) {
            auto& s = by_order[row.order];
            s.label = "n=" + std::to_string(row.order);
            s.x.push_back(row.separation);
            s.y.push_back(row.std_crb * 1e6);
        }
        std::vector<SvgSeries> series;
        for (auto& [n, s] : by_order) series.push_back(std::move(s));
        const std::string plot = join(dir, "scan_d.svg");
        write_svg_plot(plot, "CRB std dev of a vs reference separation", "d (pixels)",
                       "std(a) (um)", series);
        written.push_back(plot);
    }
    return written;
}

std::vector<std::string> cmd_scan_sigma(const ExperimentConfig& config, int threads,
                                        const std::string& out_dir, bool svg) {
    const std::string dir = ensure_dir(out_dir);
    const auto rows = crb_sigma_scan(config, threads);
    const std::string path = join(dir, "scan_sigma.csv");
    {
        CsvWriter csv(path);
        csv.header({"nu", "sigma", "var_crb_um2"});
        for (const auto& row : rows) {
            csv.cell(row.nu);
            csv.cell(row.sigma);
            csv.cell(row.var_crb * 1e12);
            csv.end_row();
        }
    }
    std::vector<std::string> written{path};
    if (svg) {
        std::map<double, SvgSeries> by_nu;
        for (const auto& row : rows) {
            auto& s = by_nu[row.nu];
            s.label = "nu=" + format_double(row.nu);
            s.x.push_back(row.sigma);
            s.y.push_back(row.var_crb * 1e12);
        }
        std::vector<SvgSeries> series;
        for (auto& [nu, s] : by_nu) series.push_back(std::move(s));
        const std::string plot = join(dir, "scan_sigma.svg");
        write_svg_plot(plot, "CRB variance of a vs efficiency noise", "sigma", "var(a) (um^2)",
                       series);
        written.push_back(plot);
    }
    return written;
}

std::vector<std::string> cmd_curves(const ExperimentConfig& config, const std::string& out_dir,
                                    bool svg) {
    const std::string dir = ensure_dir(out_dir);
    const auto rows = correlation_curves(config);
    const std::string path = join(dir, "curves.csv");
    {
        CsvWriter csv(path);
        csv.header({"separation_px", "n", "g"});
        for (const auto& row : rows) {
            csv.cell(row.separation_px);
            csv.cell(row.order);
            csv.cell(row.value);
            csv.end_row();
        }
    }
    std::vector<std::string> written{path};
    if (svg) {
        std::map<int, SvgSeries> by_order;
        for (const auto& row : rows) {
            auto& s = by_order[row.order];
            s.label = "n=" + std::to_string(row.order);
            s.x.push_back(row.separation_px);
            s.y.push_back(row.value);
        }
        std::vector<SvgSeries> series;
        for (auto& [n, s] : by_order) series.push_back(std::move(s));
        const std::string plot = join(dir, "curves.svg");
        write_svg_plot(plot, "analytic intensity correlations", "separation (pixels)", "G^(n)",
                       series);
        written.push_back(plot);
    }
    return written;
}

EstimationResult cmd_estimate(const ExperimentConfig& config, const std::string& frames_path,
                              std::string& report_text) {
    const FrameSet frames = read_frameset(frames_path);
    const int order = config.orders.at(0);
    MeasurementModel model;
    model.source_kind = frames.source.kind;
    model.source_distance = frames.source.distance;
    model.array = frames.array;
    model.scheme = config.scheme_kind() == SchemeKind::RepeatedReference
                       ? DetectionScheme::repeated(order, frames.array, config.scan_count)
                       : DetectionScheme::distinct(order, config.separation, frames.array,
                                                   config.scan_count);
    model.frames = frames.frame_count();
    model.estimate_chi = config.estimate_chi;
    model.fixed_chi = frames.noise.chi();
    model.chi_init = config.chi_init;

    const Eigen::VectorXd data = sample_correlation(frames, model.scheme);
    const EstimationResult result = estimate(data, model, config.scoring);

    std::ostringstream out;
    out << "order=" << order << "\n";
    out << "converged=" << (result.converged ? 1 : 0) << "\n";
    out << "iterations=" << result.iterations << "\n";
    out << "a_um=" << format_double(result.theta_hat.dimension * 1e6) << "\n";
    out << "i_eff=" << format_double(result.theta_hat.effective_intensity) << "\n";
    if (result.theta_hat.chi) out << "chi=" << format_double(*result.theta_hat.chi) << "\n";
    out << "log_likelihood=" << format_double(result.log_likelihood) << "\n";
    if (result.crb.size() > 0)
        out << "crb_a_um2=" << format_double(result.crb(0) * 1e12) << "\n";
    report_text = out.str();
    return result;
}

}  // namespace hocorr
