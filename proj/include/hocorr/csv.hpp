#pragma once

#include <charconv>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hocorr {

// Shortest decimal representation that round-trips the double exactly.
inline std::string format_double(double value) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path, std::ios::trunc) {
        if (!out_) throw std::runtime_error("cannot open '" + path + "' for writing");
    }

    void header(const std::vector<std::string>& columns) { write_row(columns); }

    void cell(const std::string& value) {
        if (!first_) out_ << ',';
        out_ << value;
        first_ = false;
    }
    void cell(double value) { cell(format_double(value)); }
    void cell(int value) { cell(std::to_string(value)); }
    void cell(long value) { cell(std::to_string(value)); }
    void end_row() {
        out_ << '\n';
        first_ = true;
    }

private:
    void write_row(const std::vector<std::string>& cells) {
        for (const auto& c : cells) cell(c);
        end_row();
    }
    std::ofstream out_;
    bool first_ = true;
};

}  // namespace hocorr
