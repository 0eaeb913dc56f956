#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "tanpano/image.hpp"
#include "tanpano/sphere.hpp"

namespace tanpano::testing {

/// Sum of a few low-frequency plane waves over the sphere direction, so the
/// image is continuous across the seam and at the poles.
struct SmoothField
{
    struct Wave
    {
        Vec3<double> axis;
        double freq;
        double phase;
        double amp;
    };
    std::vector<std::vector<Wave>> per_channel;

    static SmoothField random(int channels, int waves, double max_freq, std::uint64_t seed, double total_amp = 0.4)
    {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> n01;
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        SmoothField f;
        f.per_channel.resize(channels);
        for (auto& ch : f.per_channel) {
            for (int k = 0; k < waves; ++k) {
                Vec3<double> a(n01(rng), n01(rng), n01(rng));
                a.normalize();
                ch.push_back({a, 1.0 + (max_freq - 1.0) * u01(rng), 2.0 * pi_v<double> * u01(rng),
                              total_amp / waves});
            }
        }
        return f;
    }

    double value(int c, const Vec3<double>& dir) const
    {
        double v = 0.5;
        for (const auto& w : per_channel[c]) v += w.amp * std::sin(w.freq * w.axis.dot(dir) + w.phase);
        return v;
    }

    ErpImage<float> render(int width, int height) const
    {
        const int channels = static_cast<int>(per_channel.size());
        ErpImage<float> img(width, height, channels);
        const ErpDims dims(width, height);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const Vec3<double> d = erp_pixel_to_spherical<double>({x + 0.5, y + 0.5}, dims).unit_vector();
                for (int c = 0; c < channels; ++c) img(x, y, c) = static_cast<float>(value(c, d));
            }
        }
        return img;
    }
};

inline ErpImage<float> smooth_erp(int width, int height, int channels = 3, std::uint64_t seed = 7)
{
    return SmoothField::random(channels, 4, 3.0, seed).render(width, height);
}

/// Uniform random point at angular distance below `max_c` from `center`.
inline SphericalCoord<double> random_point_near(const SphericalCoord<double>& center, double max_c, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double cos_max = std::cos(max_c);
    const double cos_c = 1.0 - u(rng) * (1.0 - cos_max);
    const double sin_c = std::sqrt(std::max(0.0, 1.0 - cos_c * cos_c));
    const double az = 2.0 * pi_v<double> * u(rng);
    const TangentFrame<double> f(center);
    const Vec3<double> d = cos_c * f.normal + sin_c * (std::cos(az) * f.east + std::sin(az) * f.north);
    return SphericalCoord<double>::from_unit_vector(d);
}

inline SphericalCoord<double> random_sphere_point(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> a(-pi_v<double>, pi_v<double>);
    return {a(rng), std::asin(u(rng))};
}

} // namespace tanpano::testing
