#include "hocorr/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "hocorr/csv.hpp"

namespace hocorr {

namespace {
const char* kColors[] = {"#2b7a2b", "#c62828", "#1a3a7a", "#b36a00", "#555555", "#7a1a7a"};
}

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<SvgSeries>& series, bool log_y) {
    const double width = 720, height = 480;
    const double left = 70, right = 30, top = 40, bottom = 55;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double y = log_y ? std::log10(s.y[i]) : s.y[i];
            if (!std::isfinite(y)) continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (!(xmax > xmin)) xmax = xmin + 1;
    if (!(ymax > ymin)) ymax = ymin + 1;
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;

    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (width - left - right); };
    auto py = [&](double y) {
        const double v = log_y ? std::log10(y) : y;
        return height - bottom - (v - ymin) / (ymax - ymin) * (height - top - bottom);
    };

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
        << "' viewBox='0 0 " << width << " " << height << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<text x='" << width / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
        << "</text>\n";
    out << "<text x='" << width / 2 << "' y='" << height - 12
        << "' text-anchor='middle' font-size='13'>" << x_label << "</text>\n";
    out << "<text x='16' y='" << height / 2 << "' text-anchor='middle' font-size='13' "
        << "transform='rotate(-90 16 " << height / 2 << ")'>" << y_label << "</text>\n";
    out << "<rect x='" << left << "' y='" << top << "' width='" << width - left - right
        << "' height='" << height - top - bottom << "' fill='none' stroke='#888'/>\n";

    // axis ticks
    for (int t = 0; t <= 5; ++t) {
        const double fx = xmin + t * (xmax - xmin) / 5;
        const double fy = ymin + t * (ymax - ymin) / 5;
        out << "<text x='" << px(fx) << "' y='" << height - bottom + 18
            << "' text-anchor='middle' font-size='11'>" << format_double(std::round(fx * 1e4) / 1e4)
            << "</text>\n";
        const double yv = log_y ? std::pow(10.0, fy) : fy;
        out << "<text x='" << left - 8 << "' y='"
            << height - bottom - t * (height - top - bottom) / 5 + 4
            << "' text-anchor='end' font-size='11'>"
            << format_double(std::round(yv * 1e6) / 1e6) << "</text>\n";
    }

    int color = 0;
    double legend_y = top + 16;
    for (const auto& s : series) {
        out << "<polyline fill='none' stroke='" << kColors[color % 6] << "' stroke-width='1.5' points='";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i]) || (log_y && !(s.y[i] > 0))) continue;
            out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        }
        out << "'/>\n";
        out << "<text x='" << width - right - 8 << "' y='" << legend_y
            << "' text-anchor='end' font-size='12' fill='" << kColors[color % 6] << "'>" << s.label
            << "</text>\n";
        legend_y += 16;
        ++color;
    }
    out << "</svg>\n";
}

}  // namespace hocorr
