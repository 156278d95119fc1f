#pragma once

#include <string>
#include <vector>

#include "hocorr/config.hpp"
#include "hocorr/estimation.hpp"

namespace hocorr {

// Computation cores behind the CLI subcommands; the CLI adds argument
// parsing and file placement on top.

struct DScanRow {
    int separation = 0;
    int order = 0;
    double std_crb = 0.0;          // std dev bound on a-hat (m)
    double nearest_zero = 0.0;     // analytic zero-coherence separation (pixels)
    bool at_zero = false;          // within half a pixel of a coherence zero
};
std::vector<DScanRow> crb_d_scan(const ExperimentConfig& config, int threads);

struct SigmaScanRow {
    double nu = 0.0;
    double sigma = 0.0;
    double var_crb = 0.0;  // variance bound on a-hat (m^2)
};
std::vector<SigmaScanRow> crb_sigma_scan(const ExperimentConfig& config, int threads);

struct CurveRow {
    double separation_px = 0.0;
    int order = 0;
    double value = 0.0;
};
std::vector<CurveRow> correlation_curves(const ExperimentConfig& config);

// File-producing commands; every path written is returned.
std::vector<std::string> cmd_simulate(const ExperimentConfig& config, const std::string& out_dir);
std::vector<std::string> cmd_study(const ExperimentConfig& config, int threads,
                                   const std::string& out_dir, bool svg, StudyReport* report_out);
std::vector<std::string> cmd_scan_d(const ExperimentConfig& config, int threads,
                                    const std::string& out_dir, bool svg);
std::vector<std::string> cmd_scan_sigma(const ExperimentConfig& config, int threads,
                                        const std::string& out_dir, bool svg);
std::vector<std::string> cmd_curves(const ExperimentConfig& config, const std::string& out_dir,
                                    bool svg);
EstimationResult cmd_estimate(const ExperimentConfig& config, const std::string& frames_path,
                              std::string& report_text);

void write_study_csv(const std::string& path, const StudyReport& report);

}  // namespace hocorr
