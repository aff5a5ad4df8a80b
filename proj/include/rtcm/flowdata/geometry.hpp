#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace rtcm::flowdata {

using Vec3 = std::array<double, 3>;

// A circular tube of constant radius around a planar centerline: the z axis
// when curvature is 0, otherwise a circular arc in the x-z plane bending
// toward +x. Lengths are in millimeters.
struct TubeGeometry {
    double radius = 10.0;
    double length = 100.0;
    double curvature = 0.0;  // 1/mm, must satisfy curvature * radius < 1

    void validate() const;
};

// Position relative to the centerline: arc length s, offset a along the
// principal normal (toward the center of curvature) and b along the binormal.
struct TubeLocal {
    double s = 0.0;
    double a = 0.0;
    double b = 0.0;

    double radial() const;
};

struct CenterlineFrame {
    Vec3 origin;
    Vec3 tangent;
    Vec3 normal;
    Vec3 binormal;
};

CenterlineFrame centerline_frame(const TubeGeometry& g, double s);
Vec3 to_global(const TubeGeometry& g, const TubeLocal& local);
TubeLocal to_local(const TubeGeometry& g, const Vec3& p);

// Uniform-in-volume rejection sampling of the lumen. Returned coordinates are
// exactly representable in binary32 and stay strictly inside after rounding. Throws NumericalError
// when fewer than n points are accepted within the attempt budget.
std::vector<Vec3> sample_lumen(const TubeGeometry& g, std::size_t n, std::uint64_t seed,
                               std::size_t max_attempts_per_point = 1000);

}  // namespace rtcm::flowdata
