#include "hocorr/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace hocorr {

namespace {

using nlohmann::json;

json scoring_to_json(const ScoringConfig& s) {
    return json{{"max_iterations", s.max_iterations},
                {"tolerance", s.tolerance},
                {"step_damping", s.step_damping},
                {"max_damping_steps", s.max_damping_steps},
                {"use_damping", s.use_damping}};
}

void scoring_from_json(const json& j, ScoringConfig& s) {
    j.at("max_iterations").get_to(s.max_iterations);
    j.at("tolerance").get_to(s.tolerance);
    j.at("step_damping").get_to(s.step_damping);
    j.at("max_damping_steps").get_to(s.max_damping_steps);
    j.at("use_damping").get_to(s.use_damping);
}

}  // namespace

SourceKind ExperimentConfig::kind() const {
    if (source_kind == "disc") return SourceKind::CircularDisc;
    if (source_kind == "slit") return SourceKind::Slit;
    throw std::invalid_argument("config: source kind must be 'disc' or 'slit', got '" +
                                source_kind + "'");
}

SchemeKind ExperimentConfig::scheme_kind() const {
    if (scheme == "repeated") return SchemeKind::RepeatedReference;
    if (scheme == "distinct") return SchemeKind::DistinctReferences;
    throw std::invalid_argument("config: scheme must be 'repeated' or 'distinct', got '" +
                                scheme + "'");
}

SourceGeometry ExperimentConfig::source() const {
    return SourceGeometry{kind(), dimension_um * 1e-6, distance_m};
}

DetectorArray ExperimentConfig::array() const {
    return DetectorArray{pixel_count, pixel_pitch_um * 1e-6, wavelength_nm * 1e-9};
}

NoiseModel ExperimentConfig::noise() const {
    return NoiseModel{nu, sigma};
}

StudySetup ExperimentConfig::study_setup() const {
    StudySetup setup;
    setup.source = source();
    setup.array = array();
    setup.noise = noise();
    setup.mean_intensity = mean_intensity;
    setup.frames = frames;
    setup.orders = orders;
    setup.scheme_kind = scheme_kind();
    setup.separation = separation;
    setup.scan_count = scan_count;
    setup.estimate_chi = estimate_chi;
    setup.repetitions = repetitions;
    setup.seed = seed;
    setup.scoring = scoring;
    return setup;
}

void ExperimentConfig::validate() const {
    source().validate();
    array().validate();
    noise().validate();
    if (orders.empty()) throw std::invalid_argument("config: orders must not be empty");
    for (int n : orders)
        if (n < 2) throw std::invalid_argument("config: correlation orders must be >= 2");
    if (frames < 2) throw std::invalid_argument("config: frames must be >= 2");
    if (repetitions < 2) throw std::invalid_argument("config: repetitions must be >= 2");
    kind();
    scheme_kind();
}

std::string to_json_text(const ExperimentConfig& c) {
    json j{{"source", {{"kind", c.source_kind},
                       {"dimension_um", c.dimension_um},
                       {"distance_m", c.distance_m}}},
           {"array", {{"pixel_count", c.pixel_count},
                      {"pixel_pitch_um", c.pixel_pitch_um},
                      {"wavelength_nm", c.wavelength_nm}}},
           {"noise", {{"nu", c.nu}, {"sigma", c.sigma}}},
           {"mean_intensity", c.mean_intensity},
           {"scheme", {{"orders", c.orders},
                       {"type", c.scheme},
                       {"separation", c.separation},
                       {"scan_count", c.scan_count},
                       {"estimate_chi", c.estimate_chi},
                       {"chi_init", c.chi_init}}},
           {"frames", c.frames},
           {"repetitions", c.repetitions},
           {"seed", c.seed},
           {"scan_d", {{"min", c.d_min}, {"max", c.d_max}, {"step", c.d_step}}},
           {"scan_sigma", {{"nus", c.sigma_nus},
                           {"sigma_min", c.sigma_min},
                           {"sigma_max", c.sigma_max},
                           {"count", c.sigma_count},
                           {"order", c.sigma_order}}},
           {"curves", {{"angular_diameter_rad", c.curve_angular_diameter},
                       {"orders", c.curve_orders},
                       {"half_window", c.curve_half_window}}},
           {"scoring", scoring_to_json(c.scoring)}};
    return j.dump(2) + "\n";
}

ExperimentConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig c;
    const json& src = j.at("source");
    src.at("kind").get_to(c.source_kind);
    src.at("dimension_um").get_to(c.dimension_um);
    src.at("distance_m").get_to(c.distance_m);
    const json& arr = j.at("array");
    arr.at("pixel_count").get_to(c.pixel_count);
    arr.at("pixel_pitch_um").get_to(c.pixel_pitch_um);
    arr.at("wavelength_nm").get_to(c.wavelength_nm);
    const json& noise = j.at("noise");
    noise.at("nu").get_to(c.nu);
    noise.at("sigma").get_to(c.sigma);
    j.at("mean_intensity").get_to(c.mean_intensity);
    const json& scheme = j.at("scheme");
    scheme.at("orders").get_to(c.orders);
    scheme.at("type").get_to(c.scheme);
    scheme.at("separation").get_to(c.separation);
    scheme.at("scan_count").get_to(c.scan_count);
    scheme.at("estimate_chi").get_to(c.estimate_chi);
    scheme.at("chi_init").get_to(c.chi_init);
    j.at("frames").get_to(c.frames);
    j.at("repetitions").get_to(c.repetitions);
    j.at("seed").get_to(c.seed);
    const json& sd = j.at("scan_d");
    sd.at("min").get_to(c.d_min);
    sd.at("max").get_to(c.d_max);
    sd.at("step").get_to(c.d_step);
    const json& ss = j.at("scan_sigma");
    ss.at("nus").get_to(c.sigma_nus);
    ss.at("sigma_min").get_to(c.sigma_min);
    ss.at("sigma_max").get_to(c.sigma_max);
    ss.at("count").get_to(c.sigma_count);
    ss.at("order").get_to(c.sigma_order);
    const json& cu = j.at("curves");
    cu.at("angular_diameter_rad").get_to(c.curve_angular_diameter);
    cu.at("orders").get_to(c.curve_orders);
    cu.at("half_window").get_to(c.curve_half_window);
    scoring_from_json(j.at("scoring"), c.scoring);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return config_from_json_text(buf.str());
}

void save_config(const std::string& path, const ExperimentConfig& config) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << to_json_text(config);
}

std::vector<std::string> preset_names() {
    return {"table1", "table2", "fig3", "fig5", "fig6", "fig7"};
}

ExperimentConfig preset(const std::string& name) {
    ExperimentConfig c;  // defaults already match the disc demonstrator
    if (name == "table1") {
        c.orders = {2, 3, 4, 5};
        c.scheme = "repeated";
        c.nu = 0.5;
        c.sigma = 0.0;
        c.seed = 1001;
        return c;
    }
    if (name == "table2") {
        c.orders = {2, 3, 4};
        c.scheme = "distinct";
        c.separation = 182;
        c.pixel_count = 365;
        c.scan_count = 0;
        c.nu = 0.5;
        c.sigma = 0.01;
        c.estimate_chi = true;
        c.seed = 1002;
        return c;
    }
    if (name == "fig3") {
        c.curve_angular_diameter = 5e-4;
        c.curve_orders = {2, 3, 4};
        c.curve_half_window = 600;
        c.seed = 1003;
        return c;
    }
    if (name == "fig5") {
        c.orders = {2, 3, 4};
        c.scheme = "distinct";
        c.pixel_count = 1101;
        c.scan_count = 365;
        c.nu = 0.5;
        c.sigma = 0.01;
        c.estimate_chi = true;
        c.d_min = 4;
        c.d_max = 360;
        c.d_step = 2;
        c.seed = 1005;
        return c;
    }
    if (name == "fig6") {
        c.orders = {2};
        c.scheme = "repeated";
        c.sigma_nus = {0.2, 0.5, 0.9};
        c.sigma_min = 0.0;
        c.sigma_max = 0.05;
        c.sigma_count = 11;
        c.sigma_order = 2;
        c.estimate_chi = false;
        c.seed = 1006;
        return c;
    }
    if (name == "fig7") {
        c.source_kind = "slit";
        c.dimension_um = 200.0;
        c.orders = {2, 3, 4};
        c.scheme = "distinct";
        c.pixel_count = 801;
        c.scan_count = 365;
        c.nu = 0.5;
        c.sigma = 0.01;
        c.estimate_chi = true;
        c.d_min = 4;
        c.d_max = 200;
        c.d_step = 2;
        c.seed = 1007;
        return c;
    }
    throw std::invalid_argument("unknown preset '" + name + "'; available: table1 table2 fig3 "
                                "fig5 fig6 fig7");
}

}  // namespace hocorr
