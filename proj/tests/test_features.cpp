#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "tanpano/features.hpp"
#include "tanpano/io.hpp"
#include "temp_dir.hpp"

using namespace tanpano;
namespace fs = std::filesystem;

namespace {

FeatureMatrix random_matrix(int n, int d, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> g;
    FeatureMatrix m(n, d);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    return m;
}

std::vector<std::uint8_t> file_bytes(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_SUITE_BEGIN("features");

TEST_CASE("feature files round trip bit-exactly")
{
    tanpano::testing::TempDir dir;
    const FeatureMatrix m = random_matrix(100, 64, 1);
    save_features(FeatureSet(m), dir / "f.tpaf");
    const auto back = load_features(dir / "f.tpaf");
    CHECK(back.matrix == m);
    CHECK_THROWS_AS(save_features(FeatureSet(FeatureMatrix(0, 4)), dir / "e.tpaf"), EmptyInput);
}

TEST_CASE("tensor file layout")
{
    tanpano::testing::TempDir dir;
    FeatureMatrix m(10, 5);
    for (int i = 0; i < 50; ++i) m.data()[i] = static_cast<float>(i) * 0.5f;
    save_features(FeatureSet(m), dir / "f.tpaf");
    const auto bytes = file_bytes(dir / "f.tpaf");
    REQUIRE(bytes.size() == 24 + 200 + 4);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "TPAF");
    auto u32 = [&](std::size_t o) {
        return std::uint32_t(bytes[o]) | std::uint32_t(bytes[o + 1]) << 8 | std::uint32_t(bytes[o + 2]) << 16
               | std::uint32_t(bytes[o + 3]) << 24;
    };
    CHECK(u32(4) == 1);  // version
    CHECK(u32(8) == 1);  // f32
    CHECK(u32(12) == 2); // rank
    CHECK(u32(16) == 10);
    CHECK(u32(20) == 5);
    float second;
    std::memcpy(&second, bytes.data() + 28, 4);
    CHECK(second == 0.5f);
}

TEST_CASE("corrupted tensor files are rejected")
{
    TensorData t;
    t.dims = {10, 5};
    t.values.resize(50);
    for (int i = 0; i < 50; ++i) t.values[i] = std::sin(0.1f * i);
    const auto good = encode_tensor(t);
    CHECK(decode_tensor(good).values == t.values);

    std::mt19937_64 rng(2);
    for (std::size_t pos = 0; pos < good.size(); ++pos) {
        for (int rep = 0; rep < 3; ++rep) {
            auto bad = good;
            bad[pos] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
            try {
                decode_tensor(bad);
                FAIL("corruption at byte " << pos << " went unnoticed");
            } catch (const Error& e) {
                const bool ok = e.code() == ErrorCode::Format || e.code() == ErrorCode::Checksum;
                CHECK(ok);
                if (pos >= 24 && pos < 224) CHECK(e.code() == ErrorCode::Checksum);
            }
        }
    }
    try {
        auto bad = good;
        bad[0] = 'X';
        decode_tensor(bad);
    } catch (const FormatError& e) {
        CHECK(e.offset() == 0);
    }
    CHECK_THROWS_AS(decode_tensor(std::span(good).first(30)), FormatError);
    CHECK_THROWS_AS(decode_tensor(std::span(good).first(10)), FormatError);
}

TEST_CASE("logit files are renormalized within tolerance")
{
    tanpano::testing::TempDir dir;
    TensorData t;
    t.dims = {2, 3};
    t.values = {0.2f, 0.3f, 0.50004f, 0.1f, 0.1f, 0.8f};
    save_tensor(t, dir / "p.tpaf");
    const auto l = load_logits(dir / "p.tpaf");
    CHECK(l.rows.row(0).sum() == doctest::Approx(1.0).epsilon(1e-6));
    t.values[2] = 0.6f;
    save_tensor(t, dir / "q.tpaf");
    CHECK_THROWS_AS(load_logits(dir / "q.tpaf"), DomainError);
}

TEST_CASE("matrix conversion accepts vectors and matrices")
{
    TensorData v;
    v.dims = {4};
    v.values = {1, 2, 3, 4};
    const auto m = to_matrix(v);
    CHECK(m.rows() == 1);
    CHECK(m.cols() == 4);
    v.dims = {1, 2, 2};
    CHECK_THROWS_AS(to_matrix(v), FormatError);
}

TEST_CASE("manifest parsing")
{
    tanpano::testing::TempDir dir;
    {
        std::ofstream out(dir / "m.jsonl");
        out << R"({"id": "a", "image": "a.png", "caption_dense": "a room"})" << '\n'
            << '\n'
            << R"({"id": "b", "image": "imgs/b.png"})" << '\n';
    }
    const auto entries = read_manifest(dir / "m.jsonl");
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].id == "a");
    CHECK(entries[0].caption_dense == "a room");
    CHECK(!entries[0].caption_summary);
    CHECK(entries[1].image == "imgs/b.png");

    write_manifest(entries, dir / "copy.jsonl");
    const auto again = read_manifest(dir / "copy.jsonl");
    CHECK(again.size() == 2);
    CHECK(again[1].id == "b");

    {
        std::ofstream out(dir / "bad.jsonl");
        out << R"({"id": "a", "image": "a.png"})" << '\n' << R"({"id": 3})" << '\n';
    }
    try {
        read_manifest(dir / "bad.jsonl");
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(e.offset() == 30);
    }
    CHECK_THROWS_AS(read_manifest(dir / "missing.jsonl"), IoError);
}

TEST_CASE("precomputed backend")
{
    tanpano::testing::TempDir dir;
    const FeatureMatrix tangent = random_matrix(18, 8, 3);
    save_features(FeatureSet(tangent), PrecomputedBackend::sidecar_path(dir, "img1", "tangent", OutputKind::Features));
    CHECK(PrecomputedBackend::sidecar_path(dir, "img1", "tangent", OutputKind::Features)
          == dir / "img1.tangent.feat.tpaf");
    CHECK(PrecomputedBackend::sidecar_path(dir, "x", "cube", OutputKind::Probabilities) == dir / "x.cube.prob.tpaf");

    const PrecomputedBackend backend(dir.path());
    const ManifestEntry e{"img1", "img1.png", std::nullopt, std::nullopt};
    CHECK(backend.vectors(e, "tangent", OutputKind::Features) == tangent);

    const ManifestEntry missing{"nope", "nope.png", std::nullopt, std::nullopt};
    try {
        backend.vectors(missing, "tangent", OutputKind::Features);
        FAIL("expected KeyError");
    } catch (const KeyError& err) {
        CHECK(std::string(err.what()).find("nope") != std::string::npos);
    }

    std::vector<ManifestEntry> entries;
    std::vector<FeatureMatrix> expected;
    for (int i = 0; i < 5; ++i) {
        const std::string id = "im" + std::to_string(i);
        expected.push_back(random_matrix(18, 8, 10 + i));
        save_features(FeatureSet(expected.back()),
                      PrecomputedBackend::sidecar_path(dir, id, "tangent", OutputKind::Features));
        entries.push_back({id, id + ".png", std::nullopt, std::nullopt});
    }
    const auto got = extract_features(entries, backend, "tangent", OutputKind::Features, 3);
    REQUIRE(got.size() == 5);
    for (int i = 0; i < 5; ++i) CHECK(got[i] == expected[i]);

    const auto grouped = group_by_view(got);
    REQUIRE(grouped.size() == 18);
    CHECK(grouped[4].rows() == 5);
    for (int i = 0; i < 5; ++i) CHECK(grouped[7].row(i) == expected[i].row(7));
}

TEST_CASE("onnx backend reports unavailability")
{
    CHECK(!OnnxBackend::available());
    CHECK_THROWS_AS(OnnxBackend("model.onnx", ModelInputConfig{}), BackendUnavailable);
}

TEST_CASE("model input preparation")
{
    Image<float> img(8, 4, 3);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 8; ++x) {
            img(x, y, 0) = 1.0f;
            img(x, y, 1) = 0.5f;
            img(x, y, 2) = static_cast<float>(x) / 7.0f;
        }
    ModelInputConfig cfg;
    cfg.width = 4;
    cfg.height = 2;
    const auto buf = prepare_model_input(img, cfg);
    REQUIRE(buf.size() == 3 * 2 * 4);
    CHECK(buf[0] == doctest::Approx(1.0));  // (1 - 0.5) / 0.5
    CHECK(buf[8] == doctest::Approx(0.0));  // channel 1 plane
    // channel 2, column 0: source x = 0.5 -> value 0.5 / 7
    CHECK(buf[16] == doctest::Approx((0.5 / 7.0 - 0.5) / 0.5));
    cfg.mean = {0.5f};
    CHECK_THROWS_AS(prepare_model_input(img, cfg), DimensionError);
}

TEST_CASE("images round trip through PNG and tensor files")
{
    tanpano::testing::TempDir dir;
    Image<float> img(6, 3, 3);
    for (Eigen::Index i = 0; i < img.data().size(); ++i) img.data()[i] = static_cast<float>(i % 256) / 255.0f;
    write_image(img, dir / "a.png", 8);
    const auto back8 = read_image(dir / "a.png");
    CHECK(back8.same_shape(img));
    CHECK((back8.data() - img.data()).abs().maxCoeff() < 1e-6f);

    write_image(img, dir / "b.png", 16);
    CHECK((read_image(dir / "b.png").data() - img.data()).abs().maxCoeff() < 1e-4f);

    write_image(img, dir / "c.tpaf");
    CHECK(read_image(dir / "c.tpaf") == img);

    CHECK_THROWS_AS(read_image(dir / "none.png"), IoError);
    {
        std::ofstream out(dir / "junk.png");
        out << "not a png";
    }
    CHECK_THROWS_AS(read_image(dir / "junk.png"), IoError);
}

TEST_CASE("layout documents round trip")
{
    tanpano::testing::TempDir dir;
    const auto doc = default_layout_document(64);
    save_layout(doc, dir / "layout.json");
    const auto back = load_layout(dir / "layout.json");
    REQUIRE(back.planes.size() == 18);
    for (std::size_t i = 0; i < 18; ++i) {
        CHECK(back.planes[i].center.lon() == doctest::Approx(doc.planes[i].center.lon()).epsilon(1e-12));
        CHECK(back.planes[i].center.lat() == doctest::Approx(doc.planes[i].center.lat()).epsilon(1e-12));
        CHECK(back.planes[i].resolution == 64);
    }
    REQUIRE(back.grid);
    CHECK(back.grid->cell_of_plane == doc.grid->cell_of_plane);
    {
        std::ofstream out(dir / "bad.json");
        out << R"({"planes": [{"lon_deg": 0}]})";
    }
    CHECK_THROWS_AS(load_layout(dir / "bad.json"), LayoutError);
}

TEST_SUITE_END();
