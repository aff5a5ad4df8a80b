#include "rtcm/flowdata/geometry.hpp"

#include <cmath>
#include <string>

#include "rtcm/errors.hpp"
#include "rtcm/util/random.hpp"

namespace rtcm::flowdata {

void TubeGeometry::validate() const {
    if (!(radius > 0.0) || !(length > 0.0) || !(curvature >= 0.0) || !std::isfinite(radius) ||
        !std::isfinite(length) || !std::isfinite(curvature)) {
        throw ConfigError("tube geometry needs radius > 0, length > 0, curvature >= 0");
    }
    if (curvature * radius >= 1.0) {
        throw ConfigError("tube curvature " + std::to_string(curvature) + " folds a lumen of radius " +
                          std::to_string(radius) + " onto itself (curvature * radius must be < 1)");
    }
}

double TubeLocal::radial() const { return std::sqrt(a * a + b * b); }

CenterlineFrame centerline_frame(const TubeGeometry& g, double s) {
    if (g.curvature == 0.0) {
        return {{0.0, 0.0, s}, {0.0, 0.0, 1.0}, {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}};
    }
    const double rho = 1.0 / g.curvature;
    const double theta = s * g.curvature;
    const double c = std::cos(theta);
    const double sn = std::sin(theta);
    return {{rho * (1.0 - c), 0.0, rho * sn}, {sn, 0.0, c}, {c, 0.0, -sn}, {0.0, 1.0, 0.0}};
}

Vec3 to_global(const TubeGeometry& g, const TubeLocal& local) {
    const auto f = centerline_frame(g, local.s);
    Vec3 p{};
    for (int i = 0; i < 3; ++i) p[i] = f.origin[i] + local.a * f.normal[i] + local.b * f.binormal[i];
    return p;
}

TubeLocal to_local(const TubeGeometry& g, const Vec3& p) {
    if (g.curvature == 0.0) return {p[2], p[0], p[1]};
    const double rho = 1.0 / g.curvature;
    const double dx = rho - p[0];
    const double d = std::hypot(dx, p[2]);
    return {rho * std::atan2(p[2], dx), rho - d, p[1]};
}

std::vector<Vec3> sample_lumen(const TubeGeometry& g, std::size_t n, std::uint64_t seed,
                               std::size_t max_attempts_per_point) {
    g.validate();
    util::Rng rng(seed);
    std::vector<Vec3> points;
    points.reserve(n);
    const double r = g.radius;
    const double max_jacobian = 1.0 + g.curvature * r;
    const std::size_t budget = max_attempts_per_point * std::max<std::size_t>(n, 1);
    std::size_t attempts = 0;
    while (points.size() < n) {
        if (++attempts > budget) {
            throw NumericalError("lumen sampling accepted only " + std::to_string(points.size()) + " of " +
                                 std::to_string(n) + " points; geometry parameters are degenerate");
        }
        const TubeLocal local{rng.uniform(0.0, g.length), rng.uniform(-r, r), rng.uniform(-r, r)};
        const double accept_u = rng.uniform();
        if (local.a * local.a + local.b * local.b >= r * r) continue;
        // Volume element of the bent tube is (1 - curvature * a) ds da db.
        if (accept_u * max_jacobian >= 1.0 - g.curvature * local.a) continue;
        // Points are stored as binary32; keep only those still strictly inside after rounding.
        Vec3 p = to_global(g, local);
        for (double& c : p) c = static_cast<double>(static_cast<float>(c));
        if (to_local(g, p).radial() >= r) continue;
        points.push_back(p);
    }
    return points;
}

}  // namespace rtcm::flowdata
