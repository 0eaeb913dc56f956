#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "tanpano/errors.hpp"

namespace tanpano {

template <class Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

template <class Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

template <class Scalar>
constexpr Scalar pi_v = std::numbers::pi_v<Scalar>;

template <class Scalar>
constexpr Scalar deg_to_rad(Scalar deg) { return deg * pi_v<Scalar> / Scalar(180); }

template <class Scalar>
constexpr Scalar rad_to_deg(Scalar rad) { return rad * Scalar(180) / pi_v<Scalar>; }

/// Wraps an angle into [-pi, pi).
template <class Scalar>
Scalar wrap_lon(Scalar lon)
{
    const Scalar two_pi = 2 * pi_v<Scalar>;
    Scalar r = std::fmod(lon + pi_v<Scalar>, two_pi);
    if (r < 0) r += two_pi;
    if (r >= two_pi) r = 0;
    return r - pi_v<Scalar>;
}

/// A point on the unit sphere. Longitude is wrapped into [-pi, pi) and
/// latitude must lie in [-pi/2, pi/2].
template <class Scalar = double>
class SphericalCoord
{
public:
    SphericalCoord() = default;

    SphericalCoord(Scalar lon, Scalar lat) : lon_(wrap_lon(lon)), lat_(lat)
    {
        if (!(std::abs(lat) <= pi_v<Scalar> / 2)) {
            throw DomainError("latitude " + std::to_string(lat) + " rad outside [-pi/2, pi/2]");
        }
    }

    static SphericalCoord from_degrees(Scalar lon_deg, Scalar lat_deg)
    {
        return {deg_to_rad(lon_deg), deg_to_rad(lat_deg)};
    }

    template <class Derived>
    static SphericalCoord from_unit_vector(const Eigen::MatrixBase<Derived>& v)
    {
        const Scalar lat = std::atan2(v(2), std::hypot(v(0), v(1)));
        const Scalar lon = std::atan2(v(1), v(0));
        return {lon, lat};
    }

    Scalar lon() const noexcept { return lon_; }
    Scalar lat() const noexcept { return lat_; }

    Vec3<Scalar> unit_vector() const
    {
        const Scalar cl = std::cos(lat_);
        return {cl * std::cos(lon_), cl * std::sin(lon_), std::sin(lat_)};
    }

private:
    Scalar lon_ = 0;
    Scalar lat_ = 0;
};

template <class Scalar = double>
struct PlaneCoord
{
    Scalar x = 0;
    Scalar y = 0;
};

/// Square gnomonic view: a center on the sphere, a full field of view per
/// side in degrees, and a pixel resolution per side.
struct TangentPlaneSpec
{
    SphericalCoord<double> center;
    double fov_deg = 80.0;
    int resolution = 192;

    TangentPlaneSpec() = default;

    TangentPlaneSpec(SphericalCoord<double> c, double fov, int res) : center(c), fov_deg(fov), resolution(res)
    {
        if (!(fov > 0.0 && fov < 180.0)) {
            throw DomainError("field of view must lie in (0, 180) degrees, got " + std::to_string(fov));
        }
        if (res < 1) {
            throw DomainError("plane resolution must be >= 1, got " + std::to_string(res));
        }
    }

    /// Half side of the footprint in plane units, tan(fov / 2).
    double half_extent() const { return std::tan(deg_to_rad(fov_deg) / 2); }
};

template <class Scalar = double>
struct DistortionTriple
{
    Scalar length_radial = 1;
    Scalar length_tangential = 1;
    Scalar angular_deg = 0;
    Scalar area = 1;
};

/// Great-circle distance, atan2(|a x b|, a . b). Stable for both tiny and
/// near-antipodal separations.
template <class Scalar>
Scalar angular_distance(const SphericalCoord<Scalar>& a, const SphericalCoord<Scalar>& b)
{
    const Vec3<Scalar> u = a.unit_vector();
    const Vec3<Scalar> v = b.unit_vector();
    return std::atan2(u.cross(v).norm(), u.dot(v));
}

/// Cosine of the angular distance written in longitude/latitude form, the
/// denominator of the gnomonic equations.
template <class Scalar>
Scalar gnomonic_cos_c(const SphericalCoord<Scalar>& center, const SphericalCoord<Scalar>& point)
{
    const Scalar dlon = point.lon() - center.lon();
    return std::sin(center.lat()) * std::sin(point.lat())
        + std::cos(center.lat()) * std::cos(point.lat()) * std::cos(dlon);
}

template <class Scalar>
PlaneCoord<Scalar> gnomonic_forward(const SphericalCoord<Scalar>& center, const SphericalCoord<Scalar>& point)
{
    const Scalar cos_c = gnomonic_cos_c(center, point);
    if (!(cos_c > 0)) {
        throw HemisphereError("point lies on or beyond the horizon of the projection center");
    }
    const Scalar dlon = point.lon() - center.lon();
    const Scalar sp0 = std::sin(center.lat());
    const Scalar cp0 = std::cos(center.lat());
    const Scalar sp = std::sin(point.lat());
    const Scalar cp = std::cos(point.lat());
    return {cp * std::sin(dlon) / cos_c, (cp0 * sp - sp0 * cp * std::cos(dlon)) / cos_c};
}

/// Local tangent frame at a center: east and north unit vectors.
template <class Scalar>
struct TangentFrame
{
    Vec3<Scalar> normal;
    Vec3<Scalar> east;
    Vec3<Scalar> north;

    explicit TangentFrame(const SphericalCoord<Scalar>& c)
    {
        const Scalar sl = std::sin(c.lon()), cl = std::cos(c.lon());
        const Scalar sp = std::sin(c.lat()), cp = std::cos(c.lat());
        normal = {cp * cl, cp * sl, sp};
        east = {-sl, cl, Scalar(0)};
        north = {-sp * cl, -sp * sl, cp};
    }
};

template <class Scalar>
SphericalCoord<Scalar> gnomonic_inverse(const SphericalCoord<Scalar>& center, const PlaneCoord<Scalar>& p)
{
    const TangentFrame<Scalar> f(center);
    const Vec3<Scalar> dir = f.normal + p.x * f.east + p.y * f.north;
    return SphericalCoord<Scalar>::from_unit_vector(dir);
}

/// Tissot scale factors of the gnomonic projection at angular distance theta
/// from the tangency point: radial 1/cos^2, tangential 1/cos, maximum angular
/// deformation 2 asin(tan^2(theta/2)), area 1/cos^3.
template <class Scalar>
DistortionTriple<Scalar> distortion(Scalar theta)
{
    if (!(theta >= 0 && theta < pi_v<Scalar> / 2)) {
        throw DomainError("distortion angle must lie in [0, pi/2), got " + std::to_string(theta));
    }
    const Scalar c = std::cos(theta);
    const Scalar t = std::tan(theta / 2);
    DistortionTriple<Scalar> d;
    d.length_radial = 1 / (c * c);
    d.length_tangential = 1 / c;
    d.angular_deg = rad_to_deg(2 * std::asin(t * t));
    d.area = d.length_radial * d.length_tangential;
    return d;
}

/// Equirectangular raster dimensions; width must be twice the height.
struct ErpDims
{
    int width = 0;
    int height = 0;

    ErpDims() = default;
    ErpDims(int w, int h) : width(w), height(h)
    {
        if (w <= 0 || h <= 0 || w != 2 * h) {
            throw DimensionError("equirectangular raster must be 2:1, got " + std::to_string(w) + "x"
                                 + std::to_string(h));
        }
    }
};

/// Continuous pixel coordinates to sphere. Pixel i has its center at i + 0.5.
template <class Scalar>
SphericalCoord<Scalar> erp_pixel_to_spherical(const Vec2<Scalar>& px, const ErpDims& dims)
{
    const Scalar lon = px.x() / dims.width * 2 * pi_v<Scalar> - pi_v<Scalar>;
    const Scalar lat = pi_v<Scalar> / 2 - px.y() / dims.height * pi_v<Scalar>;
    return {lon, lat};
}

template <class Scalar>
Vec2<Scalar> spherical_to_erp_pixel(const SphericalCoord<Scalar>& s, const ErpDims& dims)
{
    return {(s.lon() + pi_v<Scalar>) / (2 * pi_v<Scalar>) * dims.width,
            (pi_v<Scalar> / 2 - s.lat()) / pi_v<Scalar> * dims.height};
}

/// Row configuration of the four-band tangent layout.
struct LayoutConfig
{
    double polar_lat_deg = 67.5;
    double equatorial_lat_deg = 22.5;
    int polar_count = 3;
    int equatorial_count = 6;
    double fov_deg = 80.0;
    int resolution = 192;
    double polar_phase_deg = 0.0;
    double equatorial_phase_deg = 0.0;
};

/// Planes ordered north polar row, upper equatorial row, lower equatorial
/// row, south polar row; each row in ascending longitude starting at -180
/// degrees plus the row phase.
inline std::vector<TangentPlaneSpec> plane_layout(const LayoutConfig& cfg)
{
    std::vector<TangentPlaneSpec> out;
    auto row = [&](double lat_deg, int count, double phase_deg) {
        for (int k = 0; k < count; ++k) {
            const double lon_deg = -180.0 + phase_deg + 360.0 * k / count;
            out.emplace_back(SphericalCoord<double>::from_degrees(lon_deg, lat_deg), cfg.fov_deg, cfg.resolution);
        }
    };
    row(cfg.polar_lat_deg, cfg.polar_count, cfg.polar_phase_deg);
    row(cfg.equatorial_lat_deg, cfg.equatorial_count, cfg.equatorial_phase_deg);
    row(-cfg.equatorial_lat_deg, cfg.equatorial_count, cfg.equatorial_phase_deg);
    row(-cfg.polar_lat_deg, cfg.polar_count, cfg.polar_phase_deg);
    return out;
}

inline std::vector<TangentPlaneSpec> plane_layout_18(int resolution = 192, double fov_deg = 80.0)
{
    LayoutConfig cfg;
    cfg.resolution = resolution;
    cfg.fov_deg = fov_deg;
    return plane_layout(cfg);
}

/// Plane coordinate of the center of tile pixel (col, row). Rows grow
/// downward, plane y grows upward.
inline PlaneCoord<double> tile_pixel_to_plane(double col, double row, const TangentPlaneSpec& spec)
{
    const double t = spec.half_extent();
    const double r = spec.resolution;
    return {((col + 0.5) / r * 2.0 - 1.0) * t, (1.0 - (row + 0.5) / r * 2.0) * t};
}

/// Inverse of tile_pixel_to_plane, in continuous pixel units where the
/// center of pixel i is i.
inline Vec2<double> plane_to_tile_pixel(const PlaneCoord<double>& p, const TangentPlaneSpec& spec)
{
    const double t = spec.half_extent();
    const double r = spec.resolution;
    return {(p.x / t + 1.0) / 2.0 * r - 0.5, (1.0 - p.y / t) / 2.0 * r - 0.5};
}

} // namespace tanpano
