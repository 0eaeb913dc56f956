#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tanpano/errors.hpp"

namespace tanpano {

/// Channels x height x width array, row-major within each channel plane.
template <class Scalar = float>
class Tensor3
{
public:
    using Storage = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
    using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using PlaneMap = Eigen::Map<Plane>;
    using ConstPlaneMap = Eigen::Map<const Plane>;

    Tensor3() = default;

    Tensor3(int channels, int height, int width, Scalar fill = Scalar(0))
        : channels_(channels), height_(height), width_(width)
    {
        if (channels < 1 || height < 1 || width < 1) {
            throw DimensionError("tensor dimensions must be positive, got " + shape_string(channels, height, width));
        }
        data_ = Storage::Constant(Eigen::Index(channels) * height * width, fill);
    }

    int channels() const noexcept { return channels_; }
    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }

    Storage& data() noexcept { return data_; }
    const Storage& data() const noexcept { return data_; }

    PlaneMap channel(int c) { return PlaneMap(data_.data() + plane_offset(c), height_, width_); }
    ConstPlaneMap channel(int c) const { return ConstPlaneMap(data_.data() + plane_offset(c), height_, width_); }

    Scalar& operator()(int c, int i, int j) { return data_[plane_offset(c) + Eigen::Index(i) * width_ + j]; }
    Scalar operator()(int c, int i, int j) const { return data_[plane_offset(c) + Eigen::Index(i) * width_ + j]; }

    bool same_shape(const Tensor3& o) const noexcept
    {
        return channels_ == o.channels_ && height_ == o.height_ && width_ == o.width_;
    }

    friend bool operator==(const Tensor3& a, const Tensor3& b)
    {
        return a.same_shape(b) && (a.data_ == b.data_).all();
    }

    static std::string shape_string(int c, int h, int w)
    {
        return std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
    }

private:
    Eigen::Index plane_offset(int c) const noexcept { return Eigen::Index(c) * height_ * width_; }

    int channels_ = 0;
    int height_ = 0;
    int width_ = 0;
    Storage data_;
};

using Tensor3f = Tensor3<float>;

namespace detail {
inline int mod_cols(long long j, int w) noexcept
{
    const long long r = j % w;
    return static_cast<int>(r < 0 ? r + w : r);
}
} // namespace detail

/// Pads `p` columns on each side with wrapped content: output column j holds
/// input column (j - p) mod W.
template <class Scalar>
Tensor3<Scalar> circular_pad(const Tensor3<Scalar>& z, int p)
{
    if (p < 0 || p > z.width()) {
        throw RangeError("padding " + std::to_string(p) + " outside [0, " + std::to_string(z.width()) + "]");
    }
    const int w = z.width();
    Tensor3<Scalar> out(z.channels(), z.height(), w + 2 * p);
    for (int c = 0; c < z.channels(); ++c) {
        auto dst = out.channel(c);
        const auto src = z.channel(c);
        dst.leftCols(p) = src.rightCols(p);
        dst.middleCols(p, w) = src;
        dst.rightCols(p) = src.leftCols(p);
    }
    return out;
}

/// Drops `p` columns from each side.
template <class Scalar>
Tensor3<Scalar> crop_pad(const Tensor3<Scalar>& z, int p)
{
    if (p < 0 || z.width() - 2 * p < 1) {
        throw RangeError("cannot crop " + std::to_string(p) + " columns per side from width "
                         + std::to_string(z.width()));
    }
    Tensor3<Scalar> out(z.channels(), z.height(), z.width() - 2 * p);
    for (int c = 0; c < z.channels(); ++c) out.channel(c) = z.channel(c).middleCols(p, out.width());
    return out;
}

/// Cyclic horizontal shift: output column j holds input column (j - k) mod W.
template <class Scalar>
Tensor3<Scalar> rotate_lon(const Tensor3<Scalar>& z, long long k)
{
    const int w = z.width();
    const int s = detail::mod_cols(k, w);
    Tensor3<Scalar> out(z.channels(), z.height(), w);
    for (int c = 0; c < z.channels(); ++c) {
        auto dst = out.channel(c);
        const auto src = z.channel(c);
        dst.rightCols(w - s) = src.leftCols(w - s);
        dst.leftCols(s) = src.rightCols(s);
    }
    return out;
}

struct PatchPosition
{
    int row = 0;
    int col = 0;

    friend bool operator==(const PatchPosition&, const PatchPosition&) = default;
};

/// Square core patches with optional halos. Horizontal halos wrap around
/// the global left/right edge; vertical halos (off by default) replicate the
/// nearest row.
template <class Scalar = float>
struct PatchGrid
{
    std::vector<Tensor3<Scalar>> patches;
    std::vector<PatchPosition> positions;
    int patch_px = 0;
    int halo = 0;
    bool vertical_halo = false;

    int vertical_margin() const { return vertical_halo ? halo : 0; }
};

template <class Scalar>
PatchGrid<Scalar> tile_patches(const Tensor3<Scalar>& z, int patch_px, int halo = 0, bool vertical_halo = false)
{
    if (patch_px < 1 || z.height() % patch_px != 0 || z.width() % patch_px != 0) {
        throw DimensionError("tensor " + Tensor3<Scalar>::shape_string(z.channels(), z.height(), z.width())
                             + " is not divisible into " + std::to_string(patch_px) + " px patches");
    }
    if (halo < 0) throw RangeError("halo must be non-negative");
    PatchGrid<Scalar> pg;
    pg.patch_px = patch_px;
    pg.halo = halo;
    pg.vertical_halo = vertical_halo;
    const int vm = pg.vertical_margin();
    const int h = z.height();
    const int w = z.width();
    for (int r0 = 0; r0 < h; r0 += patch_px) {
        for (int c0 = 0; c0 < w; c0 += patch_px) {
            Tensor3<Scalar> p(z.channels(), patch_px + 2 * vm, patch_px + 2 * halo);
            for (int c = 0; c < z.channels(); ++c) {
                for (int i = 0; i < p.height(); ++i) {
                    const int src_row = std::clamp(r0 - vm + i, 0, h - 1);
                    for (int j = 0; j < p.width(); ++j) {
                        p(c, i, j) = z(c, src_row, detail::mod_cols(static_cast<long long>(c0) - halo + j, w));
                    }
                }
            }
            pg.patches.push_back(std::move(p));
            pg.positions.push_back({r0, c0});
        }
    }
    return pg;
}

/// Reassembles patch cores; halos are discarded.
template <class Scalar>
Tensor3<Scalar> untile(const PatchGrid<Scalar>& pg, int channels, int height, int width)
{
    if (pg.patches.size() != pg.positions.size() || pg.patch_px < 1) {
        throw DimensionError("patch grid is inconsistent");
    }
    Tensor3<Scalar> out(channels, height, width);
    std::vector<int> hits(std::size_t(height) * width, 0);
    const int n = pg.patch_px;
    const int vm = pg.vertical_margin();
    for (std::size_t k = 0; k < pg.patches.size(); ++k) {
        const auto& p = pg.patches[k];
        const auto pos = pg.positions[k];
        if (p.channels() != channels || p.height() != n + 2 * vm || p.width() != n + 2 * pg.halo
            || pos.row < 0 || pos.col < 0 || pos.row + n > height || pos.col + n > width) {
            throw DimensionError("patch " + std::to_string(k) + " does not fit the output tensor");
        }
        for (int c = 0; c < channels; ++c) {
            out.channel(c).block(pos.row, pos.col, n, n) = p.channel(c).block(vm, pg.halo, n, n);
        }
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) ++hits[std::size_t(pos.row + i) * width + pos.col + j];
    }
    for (int v : hits) {
        if (v != 1) throw DimensionError("patch positions do not tile the output exactly");
    }
    return out;
}

/// (1 - t) x0 + t eps.
template <class Scalar>
Tensor3<Scalar> flow_interpolate(const Tensor3<Scalar>& x0, const Tensor3<Scalar>& eps, Scalar t)
{
    if (!x0.same_shape(eps)) throw DimensionError("flow_interpolate operands differ in shape");
    if (!(t >= 0 && t <= 1)) throw RangeError("interpolation time must lie in [0, 1]");
    Tensor3<Scalar> out = x0;
    out.data() = (Scalar(1) - t) * x0.data() + t * eps.data();
    return out;
}

/// Standard normal stream: std::mt19937_64 (its output sequence is fixed by
/// the C++ standard) feeding the Box-Muller transform. Each pair of engine
/// draws u1, u2 is mapped to 53-bit uniforms in (0, 1] and [0, 1) and yields
/// sqrt(-2 ln u1) cos(2 pi u2), then sqrt(-2 ln u1) sin(2 pi u2).
class NormalStream
{
public:
    explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

    double next()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        constexpr double scale = 1.0 / 9007199254740992.0; // 2^-53
        const double u1 = ((engine_() >> 11) + 1) * scale;
        const double u2 = (engine_() >> 11) * scale;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// z + sigma * g with g drawn element-by-element in storage order.
template <class Scalar>
Tensor3<Scalar> perturb(const Tensor3<Scalar>& z, Scalar sigma, std::uint64_t seed)
{
    if (!(sigma >= 0)) throw RangeError("noise scale must be non-negative");
    Tensor3<Scalar> out = z;
    if (sigma == 0) return out;
    NormalStream g(seed);
    for (Eigen::Index i = 0; i < out.data().size(); ++i) {
        out.data()[i] = static_cast<Scalar>(out.data()[i] + sigma * g.next());
    }
    return out;
}

} // namespace tanpano
