#include "hocorr/frameset_io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "frame files are little-endian; byte swapping is not implemented");

namespace hocorr {

namespace {

constexpr char kMagic[4] = {'H', 'B', 'T', 'F'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderSize = 64;

std::string format_double(double value) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
    double value = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{}) throw std::runtime_error("metadata: bad number '" + text + "'");
    return value;
}

std::uint64_t parse_u64(const std::string& text) {
    std::uint64_t value = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{}) throw std::runtime_error("metadata: bad integer '" + text + "'");
    return value;
}

}  // namespace

std::string frameset_meta_path(const std::string& path) {
    return path + ".meta";
}

void write_frameset(const std::string& path, const FrameSet& frames) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");

    unsigned char header[kHeaderSize] = {};
    std::memcpy(header, kMagic, 4);
    std::memcpy(header + 4, &kVersion, 4);
    const std::uint64_t n = static_cast<std::uint64_t>(frames.frame_count());
    const std::uint64_t m = static_cast<std::uint64_t>(frames.pixel_count());
    std::memcpy(header + 8, &n, 8);
    std::memcpy(header + 16, &m, 8);
    std::memcpy(header + 24, &frames.seed, 8);
    out.write(reinterpret_cast<const char*>(header), kHeaderSize);

    // column-major storage with one frame per column == frame-major on disk
    out.write(reinterpret_cast<const char*>(frames.intensities.data()),
              static_cast<std::streamsize>(sizeof(double) * n * m));
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
    out.close();

    std::ofstream meta(frameset_meta_path(path), std::ios::trunc);
    if (!meta) throw std::runtime_error("cannot open metadata sidecar for '" + path + "'");
    meta << "format=hbtf\n";
    meta << "version=" << kVersion << "\n";
    meta << "frames=" << n << "\n";
    meta << "pixels=" << m << "\n";
    meta << "seed=" << frames.seed << "\n";
    meta << "noise_seed=" << frames.noise_seed << "\n";
    meta << "noise_applied=" << (frames.noise_applied ? 1 : 0) << "\n";
    meta << "source.kind=" << (frames.source.kind == SourceKind::CircularDisc ? "disc" : "slit")
         << "\n";
    meta << "source.dimension_m=" << format_double(frames.source.dimension) << "\n";
    meta << "source.distance_m=" << format_double(frames.source.distance) << "\n";
    meta << "array.pixel_count=" << frames.array.pixel_count << "\n";
    meta << "array.pixel_pitch_m=" << format_double(frames.array.pixel_pitch) << "\n";
    meta << "array.wavelength_m=" << format_double(frames.array.wavelength) << "\n";
    meta << "noise.nu=" << format_double(frames.noise.nu) << "\n";
    meta << "noise.sigma=" << format_double(frames.noise.sigma) << "\n";
    meta << "mean_intensity=" << format_double(frames.mean_intensity) << "\n";
}

FrameSet read_frameset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    unsigned char header[kHeaderSize];
    in.read(reinterpret_cast<char*>(header), kHeaderSize);
    if (!in || std::memcmp(header, kMagic, 4) != 0)
        throw std::runtime_error("'" + path + "' is not a frame file (bad magic)");
    std::uint32_t version;
    std::memcpy(&version, header + 4, 4);
    if (version != kVersion) throw std::runtime_error("unsupported frame file version");
    std::uint64_t n, m;
    std::memcpy(&n, header + 8, 8);
    std::memcpy(&m, header + 16, 8);

    FrameSet frames;
    std::memcpy(&frames.seed, header + 24, 8);
    frames.intensities.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    in.read(reinterpret_cast<char*>(frames.intensities.data()),
            static_cast<std::streamsize>(sizeof(double) * n * m));
    if (!in) throw std::runtime_error("'" + path + "' truncated");

    std::ifstream meta(frameset_meta_path(path));
    if (meta) {
        std::map<std::string, std::string> kv;
        std::string line;
        while (std::getline(meta, line)) {
            const auto eq = line.find('=');
            if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
        }
        auto get = [&](const std::string& key) -> const std::string& {
            auto it = kv.find(key);
            if (it == kv.end())
                throw std::runtime_error("metadata sidecar missing key '" + key + "'");
            return it->second;
        };
        frames.source.kind = get("source.kind") == "slit" ? SourceKind::Slit
                                                          : SourceKind::CircularDisc;
        frames.source.dimension = parse_double(get("source.dimension_m"));
        frames.source.distance = parse_double(get("source.distance_m"));
        frames.array.pixel_count = static_cast<int>(parse_double(get("array.pixel_count")));
        frames.array.pixel_pitch = parse_double(get("array.pixel_pitch_m"));
        frames.array.wavelength = parse_double(get("array.wavelength_m"));
        frames.noise.nu = parse_double(get("noise.nu"));
        frames.noise.sigma = parse_double(get("noise.sigma"));
        frames.mean_intensity = parse_double(get("mean_intensity"));
        frames.noise_seed = parse_u64(get("noise_seed"));
        frames.noise_applied = get("noise_applied") == "1";
    } else {
        frames.array.pixel_count = static_cast<int>(m);
    }
    return frames;
}

}  // namespace hocorr
