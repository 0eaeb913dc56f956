#include "tanpano/features.hpp"

#include <zlib.h>

#include <bit>
#include <fstream>
#include <iterator>
#include <json.hpp>

#include "tanpano/parallel.hpp"
#include "tanpano/raster.hpp"

namespace tanpano {

namespace fs = std::filesystem;

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset)
{
    if (offset + 4 > bytes.size()) throw FormatError("truncated tensor file", offset);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes[offset + i]) << (8 * i);
    return v;
}

std::uint32_t crc_of(std::span<const std::uint8_t> bytes)
{
    uLong crc = crc32(0L, Z_NULL, 0);
    return static_cast<std::uint32_t>(crc32(crc, bytes.data(), static_cast<uInt>(bytes.size())));
}

TensorData matrix_to_tensor(const FeatureMatrix& m)
{
    if (m.rows() == 0 || m.cols() == 0) throw EmptyInput("refusing to save an empty set");
    TensorData t;
    t.dims = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
    t.values.assign(m.data(), m.data() + m.size());
    return t;
}

std::vector<std::uint8_t> read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to '" + path.string() + "'");
}

} // namespace

std::size_t TensorData::element_count() const
{
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

std::vector<std::uint8_t> encode_tensor(const TensorData& t)
{
    if (t.values.size() != t.element_count()) throw DimensionError("tensor values do not match its dims");
    std::vector<std::uint8_t> out{'T', 'P', 'A', 'F'};
    out.reserve(16 + 4 * t.dims.size() + 4 * t.values.size() + 4);
    put_u32(out, kTensorFileVersion);
    put_u32(out, kDtypeF32);
    put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) put_u32(out, d);
    const std::size_t payload_begin = out.size();
    for (float v : t.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
    put_u32(out, crc_of(std::span(out).subspan(payload_begin)));
    return out;
}

TensorData decode_tensor(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 4 || !std::equal(bytes.begin(), bytes.begin() + 4, "TPAF")) {
        throw FormatError("bad magic, expected TPAF", 0);
    }
    if (const auto version = get_u32(bytes, 4); version != kTensorFileVersion) {
        throw FormatError("unsupported version " + std::to_string(version), 4);
    }
    if (const auto dtype = get_u32(bytes, 8); dtype != kDtypeF32) {
        throw FormatError("unsupported dtype tag " + std::to_string(dtype), 8);
    }
    const std::uint32_t rank = get_u32(bytes, 12);
    if (rank == 0 || rank > 8) throw FormatError("invalid rank " + std::to_string(rank), 12);
    TensorData t;
    std::size_t offset = 16;
    std::uint64_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i, offset += 4) {
        const std::uint32_t d = get_u32(bytes, offset);
        if (d == 0) throw FormatError("zero-length dimension", offset);
        t.dims.push_back(d);
        count *= d;
        if (count > (std::uint64_t(1) << 34)) throw FormatError("tensor too large", offset);
    }
    const std::size_t payload_begin = offset;
    const std::uint64_t expected = payload_begin + count * 4 + 4;
    if (bytes.size() != expected) {
        throw FormatError("file is " + std::to_string(bytes.size()) + " bytes, header implies "
                              + std::to_string(expected),
                          std::min<std::size_t>(bytes.size(), expected));
    }
    const std::size_t crc_offset = payload_begin + count * 4;
    const std::uint32_t stored = get_u32(bytes, crc_offset);
    if (stored != crc_of(bytes.subspan(payload_begin, count * 4))) {
        throw ChecksumError("payload CRC32 mismatch");
    }
    t.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const float v = std::bit_cast<float>(get_u32(bytes, payload_begin + 4 * i));
        if (!std::isfinite(v)) throw FormatError("non-finite value", payload_begin + 4 * i);
        t.values[i] = v;
    }
    return t;
}

void save_tensor(const TensorData& t, const fs::path& path)
{
    write_file(path, encode_tensor(t));
}

TensorData load_tensor(const fs::path& path)
{
    const auto bytes = read_file(path);
    return decode_tensor(bytes);
}

FeatureMatrix to_matrix(const TensorData& t)
{
    Eigen::Index rows = 1, cols = 0;
    if (t.dims.size() == 1) {
        cols = t.dims[0];
    } else if (t.dims.size() == 2) {
        rows = t.dims[0];
        cols = t.dims[1];
    } else {
        throw FormatError("expected a rank-1 or rank-2 tensor, got rank " + std::to_string(t.dims.size()), 12);
    }
    return Eigen::Map<const FeatureMatrix>(t.values.data(), rows, cols);
}

void save_features(const FeatureSet& f, const fs::path& path)
{
    save_tensor(matrix_to_tensor(f.matrix), path);
}

void save_logits(const LogitSet& l, const fs::path& path)
{
    save_tensor(matrix_to_tensor(l.rows), path);
}

FeatureSet load_features(const fs::path& path)
{
    return FeatureSet(to_matrix(load_tensor(path)));
}

LogitSet load_logits(const fs::path& path)
{
    return LogitSet::renormalized(to_matrix(load_tensor(path)), 1e-4);
}

std::vector<ManifestEntry> read_manifest(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
    std::vector<ManifestEntry> out;
    std::string line;
    std::size_t offset = 0;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t line_offset = offset;
        offset += line.size() + 1;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError("manifest line " + std::to_string(line_no) + ": " + e.what(), line_offset);
        }
        if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("image")
            || !j["image"].is_string()) {
            throw FormatError("manifest line " + std::to_string(line_no) + " needs string fields id and image",
                              line_offset);
        }
        ManifestEntry e;
        e.id = j["id"].get<std::string>();
        e.image = j["image"].get<std::string>();
        for (auto [key, field] : {std::pair{"caption_dense", &e.caption_dense},
                                  std::pair{"caption_summary", &e.caption_summary}}) {
            if (j.contains(key) && !j[key].is_null()) {
                if (!j[key].is_string()) {
                    throw FormatError(std::string("manifest field ") + key + " must be a string", line_offset);
                }
                *field = j[key].get<std::string>();
            }
        }
        out.push_back(std::move(e));
    }
    return out;
}

void write_manifest(const std::vector<ManifestEntry>& entries, const fs::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
    for (const auto& e : entries) {
        nlohmann::ordered_json j;
        j["id"] = e.id;
        j["image"] = e.image;
        if (e.caption_dense) j["caption_dense"] = *e.caption_dense;
        if (e.caption_summary) j["caption_summary"] = *e.caption_summary;
        out << j.dump() << '\n';
    }
}

fs::path PrecomputedBackend::sidecar_path(const fs::path& dir, const std::string& id, const std::string& view,
                                          OutputKind kind)
{
    return dir / (id + "." + view + (kind == OutputKind::Features ? ".feat" : ".prob") + ".tpaf");
}

FeatureMatrix PrecomputedBackend::vectors(const ManifestEntry& entry, const std::string& view, OutputKind kind) const
{
    const fs::path p = sidecar_path(dir_, entry.id, view, kind);
    if (!fs::exists(p)) throw KeyError("no precomputed " + view + " vectors for id '" + entry.id + "'");
    return to_matrix(load_tensor(p));
}

std::vector<float> prepare_model_input(const Image<float>& img, const ModelInputConfig& cfg)
{
    if (static_cast<int>(cfg.mean.size()) < img.channels() || static_cast<int>(cfg.std.size()) < img.channels()) {
        throw DimensionError("normalization config has fewer entries than image channels");
    }
    const Image<float> r = resize_bilinear(img, cfg.width, cfg.height);
    std::vector<float> out(std::size_t(r.channels()) * r.width() * r.height());
    std::size_t k = 0;
    for (int c = 0; c < r.channels(); ++c)
        for (int y = 0; y < r.height(); ++y)
            for (int x = 0; x < r.width(); ++x) out[k++] = (r(x, y, c) - cfg.mean[c]) / cfg.std[c];
    return out;
}

OnnxBackend::OnnxBackend(fs::path model, ModelInputConfig cfg) : model_(std::move(model)), cfg_(std::move(cfg))
{
    if (!available()) throw BackendUnavailable("this build has no ONNX Runtime support");
}

bool OnnxBackend::available()
{
    return false;
}

FeatureMatrix OnnxBackend::vectors(const ManifestEntry&, const std::string&, OutputKind) const
{
    throw BackendUnavailable("this build has no ONNX Runtime support");
}

std::vector<FeatureMatrix> extract_features(const std::vector<ManifestEntry>& entries, const FeatureBackend& backend,
                                            const std::string& view, OutputKind kind, int jobs)
{
    std::vector<FeatureMatrix> out(entries.size());
    const int n = static_cast<int>(entries.size());
    parallel_for(n, backend.thread_safe() ? jobs : 1,
                 [&](int i) { out[i] = backend.vectors(entries[i], view, kind); });
    return out;
}

std::vector<FeatureMatrix> group_by_view(const std::vector<FeatureMatrix>& per_image)
{
    if (per_image.empty()) throw EmptyInput("no images to group");
    const Eigen::Index views = per_image.front().rows();
    const Eigen::Index d = per_image.front().cols();
    for (std::size_t i = 0; i < per_image.size(); ++i) {
        if (per_image[i].rows() != views || per_image[i].cols() != d) {
            throw DimensionError("image " + std::to_string(i) + " has " + std::to_string(per_image[i].rows()) + "x"
                                 + std::to_string(per_image[i].cols()) + " vectors, expected "
                                 + std::to_string(views) + "x" + std::to_string(d));
        }
    }
    std::vector<FeatureMatrix> out(views, FeatureMatrix(per_image.size(), d));
    for (std::size_t i = 0; i < per_image.size(); ++i)
        for (Eigen::Index v = 0; v < views; ++v) out[v].row(i) = per_image[i].row(v);
    return out;
}

} // namespace tanpano
