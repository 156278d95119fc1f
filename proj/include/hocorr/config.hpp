#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hocorr/estimation.hpp"
#include "hocorr/geometry.hpp"
#include "hocorr/noise.hpp"
#include "hocorr/statistics.hpp"

namespace hocorr {

// Experiment description as serialized to/from JSON. Length fields keep
// the units of their JSON keys so the file round-trips bit-exactly; the
// accessors below convert to SI once, on use.
struct ExperimentConfig {
    std::string source_kind = "disc";  // disc | slit
    double dimension_um = 100.0;
    double distance_m = 0.25;

    int pixel_count = 201;
    double pixel_pitch_um = 5.3;
    double wavelength_nm = 633.0;

    double nu = 0.5;
    double sigma = 0.0;
    double mean_intensity = 1.0;

    std::vector<int> orders = {2, 3, 4, 5};
    std::string scheme = "repeated";  // repeated | distinct
    int separation = 0;
    int scan_count = 0;  // 0 = whole array
    bool estimate_chi = false;
    double chi_init = 0.02;

    long frames = 50000;
    int repetitions = 1000;
    std::uint64_t seed = 1;

    // scan-d command
    int d_min = 4, d_max = 360, d_step = 2;
    // scan-sigma command
    std::vector<double> sigma_nus = {0.2, 0.5, 0.9};
    double sigma_min = 0.0, sigma_max = 0.05;
    int sigma_count = 11;
    int sigma_order = 2;
    // curves command: angular diameter used directly (rad); 0 falls back
    // to 2 * dimension / distance
    double curve_angular_diameter = 0.0;
    std::vector<int> curve_orders = {2, 3, 4};
    int curve_half_window = 600;  // pixels either side of the reference

    ScoringConfig scoring;

    SourceKind kind() const;
    SchemeKind scheme_kind() const;
    SourceGeometry source() const;
    DetectorArray array() const;
    NoiseModel noise() const;
    StudySetup study_setup() const;
    void validate() const;
};

std::string to_json_text(const ExperimentConfig& config);
ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);
void save_config(const std::string& path, const ExperimentConfig& config);

// Shipped presets reproducing the published tables and figures:
// table1, table2, fig3, fig5, fig6, fig7.
std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);

}  // namespace hocorr
