#pragma once

#include <Eigen/Dense>
#include <vector>

namespace hocorr {

// Bessel function of the first kind, order one, accurate to ~1e-15
// relative over the full real line (including near the first two roots).
double bessel_j1(double x);

enum class SourceKind { CircularDisc, Slit };

struct DetectorArray {
    int pixel_count = 201;
    double pixel_pitch = 5.3e-6;  // m
    double wavelength = 633e-9;   // m

    double wavenumber() const;
    void validate() const;
};

// Maps a 1-based pixel index to its physical position (index-1)*pitch.
double physical_position(int index, const DetectorArray& array);

struct SourceGeometry {
    SourceKind kind = SourceKind::CircularDisc;
    double dimension = 100e-6;  // disc radius / slit scale a (m)
    double distance = 0.25;     // source-to-detector distance L (m)

    double angular_diameter() const;           // 2 atan(a/L), diagnostic
    double angular_diameter_paraxial() const;  // 2 a / L, used by coherence
    void validate() const;
};

// Coherence kernel argument u = (1/2) * theta * k * |x1 - x2|.
double coherence_argument(double separation, const SourceGeometry& source,
                          const DetectorArray& array);

// Kernel as a function of u: 2 J1(u)/u for the disc, sin(u)/u for the slit.
double coherence_kernel(SourceKind kind, double u);

// u of the kernel's n-th zero (n = 1, 2) and of the half-power point
// where kernel(u)^2 = 1/2.
double coherence_kernel_zero(SourceKind kind, int which);
double coherence_kernel_half_power(SourceKind kind);

// Far-field complex degree of coherence between two detector positions.
// Real-valued for the supported geometries; 1 at zero separation.
double coherence(double x1, double x2, const SourceGeometry& source,
                 const DetectorArray& array);

// Symmetric unit-diagonal matrix of pairwise coherences.
Eigen::MatrixXd coherence_matrix(const std::vector<double>& positions,
                                 const SourceGeometry& source, const DetectorArray& array);

}  // namespace hocorr
