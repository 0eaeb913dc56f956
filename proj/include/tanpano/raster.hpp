#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "tanpano/errors.hpp"
#include "tanpano/image.hpp"
#include "tanpano/parallel.hpp"
#include "tanpano/sphere.hpp"

namespace tanpano {

namespace detail {

inline int wrap_index(int i, int n) noexcept
{
    const int r = i % n;
    return r < 0 ? r + n : r;
}

/// Bilinear lookup in pixel-center units (center of pixel i sits at i).
/// Columns wrap when `wrap_x`, otherwise clamp; rows always clamp.
template <class Scalar>
void bilinear_into(const Image<Scalar>& img, double fx, double fy, bool wrap_x, Scalar* out)
{
    const double x0f = std::floor(fx);
    const double y0f = std::floor(fy);
    const double wx = fx - x0f;
    const double wy = fy - y0f;
    const int w = img.width();
    const int h = img.height();
    int x0 = static_cast<int>(x0f);
    int x1 = x0 + 1;
    if (wrap_x) {
        x0 = wrap_index(x0, w);
        x1 = wrap_index(x1, w);
    } else {
        x0 = std::clamp(x0, 0, w - 1);
        x1 = std::clamp(x1, 0, w - 1);
    }
    const int y0 = std::clamp(static_cast<int>(y0f), 0, h - 1);
    const int y1 = std::clamp(static_cast<int>(y0f) + 1, 0, h - 1);
    const Scalar* p00 = img.pixel(x0, y0);
    const Scalar* p10 = img.pixel(x1, y0);
    const Scalar* p01 = img.pixel(x0, y1);
    const Scalar* p11 = img.pixel(x1, y1);
    for (int c = 0; c < img.channels(); ++c) {
        const double top = (1.0 - wx) * p00[c] + wx * p10[c];
        const double bottom = (1.0 - wx) * p01[c] + wx * p11[c];
        out[c] = static_cast<Scalar>((1.0 - wy) * top + wy * bottom);
    }
}

template <class Scalar>
void sample_erp_into(const Image<Scalar>& erp, const SphericalCoord<double>& s, Scalar* out)
{
    const Vec2<double> px = spherical_to_erp_pixel(s, ErpDims(erp.width(), erp.height()));
    bilinear_into(erp, px.x() - 0.5, px.y() - 0.5, true, out);
}

} // namespace detail

/// Bilinear sample of an equirectangular image at a sphere point, with
/// circular longitude and clamped latitude.
template <class Scalar>
Eigen::Array<Scalar, Eigen::Dynamic, 1> sample_bilinear(const ErpImage<Scalar>& img, const SphericalCoord<double>& s)
{
    Eigen::Array<Scalar, Eigen::Dynamic, 1> out(img.channels());
    detail::sample_erp_into(img, s, out.data());
    return out;
}

/// Renders the gnomonic view described by `spec` from an equirectangular image.
template <class Scalar>
Image<Scalar> extract_tangent(const ErpImage<Scalar>& erp, const TangentPlaneSpec& spec, int jobs = 1)
{
    Image<Scalar> out(spec.resolution, spec.resolution, erp.channels());
    parallel_for(spec.resolution, jobs, [&](int row) {
        for (int col = 0; col < spec.resolution; ++col) {
            const SphericalCoord<double> s = gnomonic_inverse(spec.center, tile_pixel_to_plane(col, row, spec));
            detail::sample_erp_into(erp, s, out.pixel(col, row));
        }
    });
    return out;
}

/// A collection of tangent views with their plane specs.
template <class Scalar = float>
struct TangentSet
{
    std::vector<TangentPlaneSpec> specs;
    std::vector<Image<Scalar>> images;

    void validate() const
    {
        if (specs.size() != images.size()) {
            throw LayoutError("tangent set has " + std::to_string(specs.size()) + " specs but "
                              + std::to_string(images.size()) + " images");
        }
        for (std::size_t i = 0; i < specs.size(); ++i) {
            const auto& img = images[i];
            if (img.width() != specs[i].resolution || img.height() != specs[i].resolution) {
                throw LayoutError("tile " + std::to_string(i) + " is " + std::to_string(img.width()) + "x"
                                  + std::to_string(img.height()) + ", spec requires "
                                  + std::to_string(specs[i].resolution));
            }
            if (img.channels() != images.front().channels()) {
                throw LayoutError("tile " + std::to_string(i) + " channel count differs from tile 0");
            }
        }
    }
};

template <class Scalar>
TangentSet<Scalar> extract_tangent_set(const ErpImage<Scalar>& erp, const std::vector<TangentPlaneSpec>& specs,
                                       int jobs = 1)
{
    TangentSet<Scalar> ts;
    ts.specs = specs;
    ts.images.resize(specs.size());
    parallel_for(static_cast<int>(specs.size()), jobs,
                 [&](int i) { ts.images[i] = extract_tangent(erp, specs[i]); });
    return ts;
}

enum class Weighting { CenterCosine, InverseAreaDistortion, Uniform };

Weighting parse_weighting(std::string_view name);
std::string_view weighting_name(Weighting w);

namespace detail {

struct PlaneGeometry
{
    TangentFrame<double> frame;
    double half_extent;

    explicit PlaneGeometry(const TangentPlaneSpec& s) : frame(s.center), half_extent(s.half_extent()) {}

    /// Returns false when the direction is outside the hard footprint.
    bool project(const Vec3<double>& v, double& x, double& y, double& cos_c) const
    {
        cos_c = v.dot(frame.normal);
        if (!(cos_c > 0.0)) return false;
        x = v.dot(frame.east) / cos_c;
        y = v.dot(frame.north) / cos_c;
        return std::abs(x) <= half_extent && std::abs(y) <= half_extent;
    }
};

inline double blend_weight(Weighting w, double cos_c)
{
    switch (w) {
        case Weighting::CenterCosine: return cos_c * cos_c;
        case Weighting::InverseAreaDistortion: return cos_c * cos_c * cos_c;
        case Weighting::Uniform: return 1.0;
    }
    return 1.0;
}

inline Vec3<double> erp_pixel_direction(int col, int row, const ErpDims& dims)
{
    return erp_pixel_to_spherical<double>({col + 0.5, row + 0.5}, dims).unit_vector();
}

} // namespace detail

/// Normalized per-plane blend weights at a sphere point (zero outside each
/// footprint). All zeros means the point is uncovered.
std::vector<double> blend_weights(const std::vector<TangentPlaneSpec>& specs, const SphericalCoord<double>& s,
                                  Weighting weighting);

/// Number of planes whose footprint contains each pixel center.
Image<float> coverage_map(const std::vector<TangentPlaneSpec>& specs, const ErpDims& dims);

std::size_t uncovered_pixels(const std::vector<TangentPlaneSpec>& specs, const ErpDims& dims);

/// Stitches tangent views back into an equirectangular image. Each output
/// pixel is the normalized weighted mean of the bilinear samples of every
/// plane whose footprint contains it.
template <class Scalar>
ErpImage<Scalar> reproject_blend(const TangentSet<Scalar>& ts, const ErpDims& dims,
                                 Weighting weighting = Weighting::CenterCosine, int jobs = 1)
{
    ts.validate();
    if (ts.images.empty()) throw EmptyInput("tangent set is empty");
    const int channels = ts.images.front().channels();
    std::vector<detail::PlaneGeometry> planes;
    planes.reserve(ts.specs.size());
    for (const auto& s : ts.specs) planes.emplace_back(s);

    ErpImage<Scalar> out(dims.width, dims.height, channels);
    std::vector<std::size_t> uncovered_per_row(dims.height, 0);
    parallel_for(dims.height, jobs, [&](int row) {
        std::array<double, 4> acc{};
        std::array<Scalar, 4> sample{};
        for (int col = 0; col < dims.width; ++col) {
            const Vec3<double> v = detail::erp_pixel_direction(col, row, dims);
            acc.fill(0.0);
            double wsum = 0.0;
            for (std::size_t k = 0; k < planes.size(); ++k) {
                double x, y, cos_c;
                if (!planes[k].project(v, x, y, cos_c)) continue;
                const double w = detail::blend_weight(weighting, cos_c);
                const Vec2<double> tp = plane_to_tile_pixel({x, y}, ts.specs[k]);
                detail::bilinear_into(ts.images[k], tp.x(), tp.y(), false, sample.data());
                for (int c = 0; c < channels; ++c) acc[c] += w * sample[c];
                wsum += w;
            }
            Scalar* dst = out.pixel(col, row);
            if (wsum > 0.0) {
                for (int c = 0; c < channels; ++c) dst[c] = static_cast<Scalar>(acc[c] / wsum);
            } else {
                ++uncovered_per_row[row];
            }
        }
    });
    std::size_t uncovered = 0;
    for (auto n : uncovered_per_row) uncovered += n;
    if (uncovered > 0) throw CoverageError(uncovered);
    return out;
}

enum class CubeFace { Top = 0, Bottom, Front, Back, Left, Right };

constexpr std::array<std::string_view, 6> cube_face_names{"top", "bottom", "front", "back", "left", "right"};

/// Gnomonic spec of a cube face: 90 degree field of view. Front looks at
/// (lon 0, lat 0), right at lon +90, back at lon 180, left at lon -90.
TangentPlaneSpec cube_face_spec(CubeFace face, int face_px);

template <class Scalar = float>
struct CubemapFaces
{
    std::array<Image<Scalar>, 6> faces;

    Image<Scalar>& operator[](CubeFace f) { return faces[static_cast<int>(f)]; }
    const Image<Scalar>& operator[](CubeFace f) const { return faces[static_cast<int>(f)]; }

    int face_px() const { return faces[0].width(); }

    void validate() const
    {
        for (const auto& f : faces) {
            if (f.width() != f.height() || !f.same_shape(faces[0])) {
                throw DimensionError("cube faces must be square and share dimensions");
            }
        }
    }
};

template <class Scalar>
CubemapFaces<Scalar> erp_to_cubemap(const ErpImage<Scalar>& img, int face_px, int jobs = 1)
{
    if (face_px < 1) throw DimensionError("cube face size must be >= 1");
    CubemapFaces<Scalar> out;
    for (int f = 0; f < 6; ++f) out.faces[f] = extract_tangent(img, cube_face_spec(static_cast<CubeFace>(f), face_px), jobs);
    return out;
}

/// Each output pixel samples the face whose axis is closest to its direction.
template <class Scalar>
ErpImage<Scalar> cubemap_to_erp(const CubemapFaces<Scalar>& faces, const ErpDims& dims, int jobs = 1)
{
    faces.validate();
    const int channels = faces.faces[0].channels();
    std::vector<TangentPlaneSpec> specs;
    std::vector<detail::PlaneGeometry> planes;
    for (int f = 0; f < 6; ++f) {
        specs.push_back(cube_face_spec(static_cast<CubeFace>(f), faces.face_px()));
        planes.emplace_back(specs.back());
    }
    ErpImage<Scalar> out(dims.width, dims.height, channels);
    parallel_for(dims.height, jobs, [&](int row) {
        for (int col = 0; col < dims.width; ++col) {
            const Vec3<double> v = detail::erp_pixel_direction(col, row, dims);
            int best = 0;
            double best_dot = -2.0;
            for (int f = 0; f < 6; ++f) {
                const double d = v.dot(planes[f].frame.normal);
                if (d > best_dot) {
                    best_dot = d;
                    best = f;
                }
            }
            const auto& fr = planes[best].frame;
            const PlaneCoord<double> p{v.dot(fr.east) / best_dot, v.dot(fr.north) / best_dot};
            const Vec2<double> tp = plane_to_tile_pixel(p, specs[best]);
            detail::bilinear_into(faces.faces[best], tp.x(), tp.y(), false, out.pixel(col, row));
        }
    });
    return out;
}

/// Peak signal-to-noise ratio in dB for data in [0, 1]; +infinity when the
/// images are identical.
template <class Scalar>
double psnr(const Image<Scalar>& a, const Image<Scalar>& b)
{
    if (!a.same_shape(b)) throw DimensionError("psnr inputs differ in shape");
    const double mse = (a.data().template cast<double>() - b.data().template cast<double>()).square().mean();
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

/// Bilinear resize with half-pixel centers, clamped edges, no antialiasing.
template <class Scalar>
Image<Scalar> resize_bilinear(const Image<Scalar>& img, int width, int height)
{
    Image<Scalar> out(width, height, img.channels());
    const double sx = static_cast<double>(img.width()) / width;
    const double sy = static_cast<double>(img.height()) / height;
    for (int row = 0; row < height; ++row) {
        for (int col = 0; col < width; ++col) {
            detail::bilinear_into(img, (col + 0.5) * sx - 0.5, (row + 0.5) * sy - 0.5, false, out.pixel(col, row));
        }
    }
    return out;
}

} // namespace tanpano
