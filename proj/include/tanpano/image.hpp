#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <string>

#include "tanpano/errors.hpp"
#include "tanpano/sphere.hpp"

namespace tanpano {

/// Interleaved (row, column, channel) raster with 1 to 4 channels.
template <class Scalar = float>
class Image
{
public:
    using Storage = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

    Image() = default;

    Image(int width, int height, int channels, Scalar fill = Scalar(0))
        : width_(width), height_(height), channels_(channels)
    {
        if (width < 1 || height < 1) {
            throw DimensionError("image dimensions must be positive, got " + std::to_string(width) + "x"
                                 + std::to_string(height));
        }
        if (channels < 1 || channels > 4) {
            throw DimensionError("channel count must be 1..4, got " + std::to_string(channels));
        }
        data_ = Storage::Constant(Eigen::Index(width) * height * channels, fill);
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(data_.size()); }

    Storage& data() noexcept { return data_; }
    const Storage& data() const noexcept { return data_; }

    Scalar* pixel(int x, int y) noexcept { return data_.data() + index(x, y); }
    const Scalar* pixel(int x, int y) const noexcept { return data_.data() + index(x, y); }

    Scalar& operator()(int x, int y, int c) noexcept { return data_[index(x, y) + c]; }
    Scalar operator()(int x, int y, int c) const noexcept { return data_[index(x, y) + c]; }

    bool same_shape(const Image& o) const noexcept
    {
        return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
    }

    bool all_finite() const { return data_.isFinite().all(); }

    friend bool operator==(const Image& a, const Image& b)
    {
        return a.same_shape(b) && (a.data_ == b.data_).all();
    }

private:
    Eigen::Index index(int x, int y) const noexcept
    {
        return (Eigen::Index(y) * width_ + x) * channels_;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    Storage data_;
};

/// Equirectangular panorama; width is always twice the height.
template <class Scalar = float>
class ErpImage : public Image<Scalar>
{
public:
    ErpImage() = default;

    ErpImage(int width, int height, int channels, Scalar fill = Scalar(0))
        : Image<Scalar>((ErpDims(width, height), width), height, channels, fill)
    {}

    explicit ErpImage(Image<Scalar> img) : Image<Scalar>(std::move(img))
    {
        ErpDims(this->width(), this->height());
    }

    ErpDims dims() const { return {this->width(), this->height()}; }
};

using Imagef = Image<float>;
using ErpImagef = ErpImage<float>;

} // namespace tanpano
