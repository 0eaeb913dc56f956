#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "tanpano/raster.hpp"

using namespace tanpano;
using tanpano::testing::smooth_erp;
using tanpano::testing::SmoothField;

namespace {

constexpr double kPi = pi_v<double>;
using S = SphericalCoord<double>;

// Straightforward bilinear lookup written from the pixel-center convention:
// pixel (i, j) is centered at longitude -pi + (i + 0.5) * 2pi/W.
double reference_sample(const Image<float>& img, const S& s, int c)
{
    const int w = img.width(), h = img.height();
    const double fx = (s.lon() + kPi) / (2 * kPi) * w - 0.5;
    const double fy = (kPi / 2 - s.lat()) / kPi * h - 0.5;
    const int x0 = static_cast<int>(std::floor(fx));
    const int y0 = static_cast<int>(std::floor(fy));
    const double ax = fx - x0, ay = fy - y0;
    auto at = [&](int x, int y) {
        x = ((x % w) + w) % w;
        y = std::min(std::max(y, 0), h - 1);
        return static_cast<double>(img(x, y, c));
    };
    return (1 - ay) * ((1 - ax) * at(x0, y0) + ax * at(x0 + 1, y0))
           + ay * ((1 - ax) * at(x0, y0 + 1) + ax * at(x0 + 1, y0 + 1));
}

ErpImage<float> roll_columns(const ErpImage<float>& img, int k)
{
    ErpImage<float> out(img.width(), img.height(), img.channels());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < img.channels(); ++c) out((x + k) % img.width(), y, c) = img(x, y, c);
    return out;
}

} // namespace

TEST_SUITE_BEGIN("raster");

TEST_CASE("sampling a constant image returns the constant")
{
    ErpImage<float> img(64, 32, 3, 0.25f);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 500; ++i) {
        const auto v = sample_bilinear(img, tanpano::testing::random_sphere_point(rng));
        for (int c = 0; c < 3; ++c) CHECK(v[c] == 0.25f);
    }
}

TEST_CASE("bilinear sampling at pixel centers and midpoints")
{
    ErpImage<float> img(8, 4, 1);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 8; ++x) img(x, y, 0) = static_cast<float>(10 * y + x);
    const ErpDims dims(8, 4);
    // exact at centers
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 8; ++x) {
            const auto v = sample_bilinear(img, erp_pixel_to_spherical<double>({x + 0.5, y + 0.5}, dims));
            CHECK(v[0] == doctest::Approx(10 * y + x));
        }
    }
    // midpoint between columns 2 and 3 on row 1
    CHECK(sample_bilinear(img, erp_pixel_to_spherical<double>({3.0, 1.5}, dims))[0] == doctest::Approx(12.5));
    // the seam mixes the last and first columns
    CHECK(sample_bilinear(img, erp_pixel_to_spherical<double>({8.0 - 1e-12, 1.5}, dims))[0]
          == doctest::Approx(0.5 * (17 + 10)));
    // latitude clamps at the poles
    CHECK(sample_bilinear(img, S(erp_pixel_to_spherical<double>({2.5, 0.5}, dims).lon(), kPi / 2))[0]
          == doctest::Approx(2.0));
}

TEST_CASE("extract_tangent agrees with an independent sampler")
{
    const auto erp = smooth_erp(128, 64, 2, 3);
    for (const auto& spec : {TangentPlaneSpec(S::from_degrees(35, 20), 80.0, 31),
                             TangentPlaneSpec(S::from_degrees(-170, -67.5), 80.0, 17),
                             TangentPlaneSpec(S::from_degrees(0, 90), 90.0, 9)}) {
        const auto tile = extract_tangent(erp, spec);
        REQUIRE(tile.width() == spec.resolution);
        const double t = std::tan(deg_to_rad(spec.fov_deg / 2));
        double worst = 0.0;
        for (int row = 0; row < spec.resolution; ++row) {
            for (int col = 0; col < spec.resolution; ++col) {
                const double x = (2.0 * (col + 0.5) / spec.resolution - 1.0) * t;
                const double y = (1.0 - 2.0 * (row + 0.5) / spec.resolution) * t;
                const S s = gnomonic_inverse(spec.center, PlaneCoord<double>{x, y});
                for (int c = 0; c < 2; ++c)
                    worst = std::max(worst, std::abs(reference_sample(erp, s, c) - tile(col, row, c)));
            }
        }
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("odd tile resolution has its central pixel at the plane center")
{
    ErpImage<float> erp(256, 128, 1);
    const ErpDims dims(256, 128);
    for (int y = 0; y < 128; ++y)
        for (int x = 0; x < 256; ++x) {
            const S s = erp_pixel_to_spherical<double>({x + 0.5, y + 0.5}, dims);
            erp(x, y, 0) = static_cast<float>(0.5 + 0.4 * s.unit_vector().x());
        }
    const TangentPlaneSpec spec(S(0, 0), 80.0, 33);
    const auto tile = extract_tangent(erp, spec);
    // brightest toward the plane center (x axis), symmetric left-right
    CHECK(tile(16, 16, 0) == doctest::Approx(0.9).epsilon(1e-3));
    for (int k = 1; k < 16; ++k) {
        CHECK(tile(16 - k, 16, 0) == doctest::Approx(tile(16 + k, 16, 0)).epsilon(1e-4));
        CHECK(tile(16 - k, 16, 0) < tile(16 - k + 1, 16, 0));
    }
}

TEST_CASE("default layout extracts 18 tiles of 192 px")
{
    const auto erp = smooth_erp(2048, 1024, 3, 5);
    const auto ts = extract_tangent_set(erp, plane_layout_18(), 4);
    REQUIRE(ts.images.size() == 18);
    for (const auto& img : ts.images) {
        CHECK(img.width() == 192);
        CHECK(img.height() == 192);
        CHECK(img.channels() == 3);
        CHECK(img.all_finite());
    }
}

TEST_CASE("extraction is equivariant to longitude shifts")
{
    const auto erp = smooth_erp(256, 128, 1, 9);
    const int k = 32; // 45 degrees
    const auto rolled = roll_columns(erp, k);
    for (const auto& base : plane_layout_18(48)) {
        const TangentPlaneSpec shifted(S(base.center.lon() + deg_to_rad(45.0), base.center.lat()), base.fov_deg,
                                       base.resolution);
        const auto a = extract_tangent(erp, base);
        const auto b = extract_tangent(rolled, shifted);
        CHECK((a.data() - b.data()).abs().maxCoeff() < 1e-6f);
    }
}

TEST_CASE("reprojecting a constant image gives the constant")
{
    const ErpImage<float> erp(256, 128, 2, 0.625f);
    const auto ts = extract_tangent_set(erp, plane_layout_18(64));
    for (auto w : {Weighting::CenterCosine, Weighting::InverseAreaDistortion, Weighting::Uniform}) {
        const auto back = reproject_blend(ts, ErpDims(256, 128), w);
        CHECK((back.data() - 0.625f).abs().maxCoeff() < 1e-6f);
    }
}

TEST_CASE("tangent round trip keeps PSNR above 40 dB")
{
    const auto erp = smooth_erp(1024, 512, 3, 21);
    const auto ts = extract_tangent_set(erp, plane_layout_18(384), 4);
    const auto back = reproject_blend(ts, ErpDims(1024, 512), Weighting::CenterCosine, 4);
    const double db = psnr<float>(erp, back);
    MESSAGE("round trip PSNR " << db << " dB");
    CHECK(db >= 40.0);
}

TEST_CASE("blend weights are normalized")
{
    const auto specs = plane_layout_18();
    std::mt19937_64 rng(4);
    for (auto w : {Weighting::CenterCosine, Weighting::InverseAreaDistortion, Weighting::Uniform}) {
        for (int i = 0; i < 300; ++i) {
            const auto ws = blend_weights(specs, tanpano::testing::random_sphere_point(rng), w);
            double sum = 0.0;
            for (double x : ws) {
                CHECK(x >= 0.0);
                sum += x;
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    CHECK(parse_weighting("uniform") == Weighting::Uniform);
    CHECK(weighting_name(Weighting::InverseAreaDistortion) == "inverse_area_distortion");
    CHECK_THROWS_AS(parse_weighting("nearest"), DomainError);
}

TEST_CASE("missing footprints raise CoverageError")
{
    const ErpImage<float> erp(128, 64, 1, 0.5f);
    auto specs = plane_layout_18(32);
    specs.erase(specs.begin(), specs.begin() + 3); // drop the north row
    const auto ts = extract_tangent_set(erp, specs);
    try {
        reproject_blend(ts, ErpDims(128, 64));
        FAIL("expected CoverageError");
    } catch (const CoverageError& e) {
        CHECK(e.uncovered() > 0);
        CHECK(e.uncovered() == uncovered_pixels(specs, ErpDims(128, 64)));
    }
    // narrow planes leave gaps too
    const auto narrow = extract_tangent_set(erp, plane_layout_18(32, 40.0));
    CHECK_THROWS_AS(reproject_blend(narrow, ErpDims(128, 64)), CoverageError);
}

TEST_CASE("tangent sets are validated before stitching")
{
    const ErpImage<float> erp(128, 64, 1, 0.5f);
    auto ts = extract_tangent_set(erp, plane_layout_18(32));
    ts.images.pop_back();
    CHECK_THROWS_AS(reproject_blend(ts, ErpDims(128, 64)), LayoutError);
    auto ts2 = extract_tangent_set(erp, plane_layout_18(32));
    ts2.images[3] = Image<float>(31, 32, 1);
    CHECK_THROWS_AS(reproject_blend(ts2, ErpDims(128, 64)), LayoutError);
}

TEST_CASE("reprojection is deterministic across job counts")
{
    const auto erp = smooth_erp(256, 128, 3, 8);
    const auto ts1 = extract_tangent_set(erp, plane_layout_18(64), 1);
    const auto ts4 = extract_tangent_set(erp, plane_layout_18(64), 4);
    for (std::size_t i = 0; i < ts1.images.size(); ++i) CHECK(ts1.images[i] == ts4.images[i]);
    CHECK(reproject_blend(ts1, ErpDims(256, 128), Weighting::CenterCosine, 1)
          == reproject_blend(ts1, ErpDims(256, 128), Weighting::CenterCosine, 3));
}

TEST_CASE("cubemap of a constant image")
{
    const ErpImage<float> erp(128, 64, 3, 0.3f);
    const auto faces = erp_to_cubemap(erp, 16);
    for (const auto& f : faces.faces) CHECK((f.data() - 0.3f).abs().maxCoeff() < 1e-6f);
    const auto back = cubemap_to_erp(faces, ErpDims(128, 64));
    CHECK((back.data() - 0.3f).abs().maxCoeff() < 1e-6f);
}

TEST_CASE("cube faces look where their names say")
{
    ErpImage<float> erp(256, 128, 3);
    const ErpDims dims(256, 128);
    for (int y = 0; y < 128; ++y)
        for (int x = 0; x < 256; ++x) {
            const Vec3<double> d = erp_pixel_to_spherical<double>({x + 0.5, y + 0.5}, dims).unit_vector();
            for (int c = 0; c < 3; ++c) erp(x, y, c) = static_cast<float>(0.5 + 0.5 * d[c]);
        }
    const auto faces = erp_to_cubemap(erp, 32);
    auto center = [&](CubeFace f, int c) {
        const auto& img = faces[f];
        return 0.25 * (img(15, 15, c) + img(16, 15, c) + img(15, 16, c) + img(16, 16, c));
    };
    CHECK(center(CubeFace::Front, 0) == doctest::Approx(1.0).epsilon(0.01));
    CHECK(center(CubeFace::Back, 0) == doctest::Approx(0.0).epsilon(0.01));
    CHECK(center(CubeFace::Right, 1) == doctest::Approx(1.0).epsilon(0.01));
    CHECK(center(CubeFace::Left, 1) == doctest::Approx(0.0).epsilon(0.01));
    CHECK(center(CubeFace::Top, 2) == doctest::Approx(1.0).epsilon(0.01));
    CHECK(center(CubeFace::Bottom, 2) == doctest::Approx(0.0).epsilon(0.01));
    CHECK(cube_face_names[static_cast<int>(CubeFace::Back)] == "back");
}

TEST_CASE("cubemap round trip quality")
{
    const auto erp = smooth_erp(512, 256, 3, 33);
    const auto once = cubemap_to_erp(erp_to_cubemap(erp, 128), ErpDims(512, 256));
    const double db1 = psnr<float>(erp, once);
    MESSAGE("cubemap round trip PSNR " << db1 << " dB");
    CHECK(db1 >= 32.0);
    const auto twice = cubemap_to_erp(erp_to_cubemap(once, 128), ErpDims(512, 256));
    CHECK(psnr<float>(erp, twice) <= db1);
}

TEST_CASE("psnr")
{
    Image<float> a(16, 8, 1, 0.5f);
    Image<float> b = a;
    CHECK(std::isinf(psnr(a, b)));
    b.data() += 0.1f;
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-5));
    CHECK(psnr(a, b) == psnr(b, a));
    CHECK_THROWS_AS(psnr(a, Image<float>(8, 8, 1)), DimensionError);
}

TEST_CASE("resize_bilinear")
{
    Image<float> a(4, 2, 1);
    for (int x = 0; x < 4; ++x) a(x, 0, 0) = a(x, 1, 0) = static_cast<float>(x);
    const auto up = resize_bilinear(a, 8, 4);
    CHECK(up.width() == 8);
    CHECK(up(0, 0, 0) == doctest::Approx(0.0));  // clamped edge
    CHECK(up(1, 0, 0) == doctest::Approx(0.25)); // center 1.5/2 - 0.5 = 0.25
    CHECK(up(7, 3, 0) == doctest::Approx(3.0));
    const Image<float> c(10, 10, 2, 0.7f);
    CHECK((resize_bilinear(c, 3, 5).data() - 0.7f).abs().maxCoeff() < 1e-6f);
}

TEST_SUITE_END();
