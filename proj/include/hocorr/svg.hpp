#pragma once

#include <string>
#include <vector>

namespace hocorr {

struct SvgSeries {
    std::string label;
    std::vector<double> x, y;
};

// Minimal static line plot; enough to eyeball the CSV outputs.
void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<SvgSeries>& series, bool log_y = false);

}  // namespace hocorr
