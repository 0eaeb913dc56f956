#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tanpano/image.hpp"
#include "tanpano/metrics.hpp"

namespace tanpano {

// TensorFile layout, all integers little-endian u32:
//   "TPAF" | version | dtype | rank | dims[rank] | payload (f32 LE) | crc32(payload)
inline constexpr std::uint32_t kTensorFileVersion = 1;
inline constexpr std::uint32_t kDtypeF32 = 1;

struct TensorData
{
    std::vector<std::uint32_t> dims;
    std::vector<float> values;

    std::size_t element_count() const;
};

std::vector<std::uint8_t> encode_tensor(const TensorData& t);
TensorData decode_tensor(std::span<const std::uint8_t> bytes);

void save_tensor(const TensorData& t, const std::filesystem::path& path);
TensorData load_tensor(const std::filesystem::path& path);

void save_features(const FeatureSet& f, const std::filesystem::path& path);
void save_logits(const LogitSet& l, const std::filesystem::path& path);
FeatureSet load_features(const std::filesystem::path& path);
/// Rows within 1e-4 of summing to 1 are renormalized; others are rejected.
LogitSet load_logits(const std::filesystem::path& path);

FeatureMatrix to_matrix(const TensorData& t);

/// One line of a JSON-lines image manifest.
struct ManifestEntry
{
    std::string id;
    std::string image;
    std::optional<std::string> caption_dense;
    std::optional<std::string> caption_summary;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path);

enum class OutputKind { Features, Probabilities };

/// Source of per-image vectors. A view names which representation the rows
/// describe: "erp" (1 row), "tangent" (one row per plane) or "cube" (six rows,
/// top bottom front back left right).
class FeatureBackend
{
public:
    virtual ~FeatureBackend() = default;
    virtual std::string name() const = 0;
    virtual FeatureMatrix vectors(const ManifestEntry& entry, const std::string& view, OutputKind kind) const = 0;
    virtual bool thread_safe() const { return false; }
};

/// Reads sidecar TensorFiles `<dir>/<id>.<view>.<feat|prob>.tpaf`.
class PrecomputedBackend : public FeatureBackend
{
public:
    explicit PrecomputedBackend(std::filesystem::path dir) : dir_(std::move(dir)) {}

    std::string name() const override { return "precomputed"; }
    FeatureMatrix vectors(const ManifestEntry& entry, const std::string& view, OutputKind kind) const override;
    bool thread_safe() const override { return true; }

    static std::filesystem::path sidecar_path(const std::filesystem::path& dir, const std::string& id,
                                              const std::string& view, OutputKind kind);

private:
    std::filesystem::path dir_;
};

/// Input convention for classifier backends: bilinear resize to the model's
/// input size (half-pixel centers, no antialiasing) followed by per-channel
/// (x - mean) / std.
struct ModelInputConfig
{
    int width = 299;
    int height = 299;
    std::vector<float> mean{0.5f, 0.5f, 0.5f};
    std::vector<float> std{0.5f, 0.5f, 0.5f};
    std::string output_name = "pool3";
};

/// CHW float buffer fed to a model under ModelInputConfig.
std::vector<float> prepare_model_input(const Image<float>& img, const ModelInputConfig& cfg);

/// ONNX classifier bridge. Available only when built against ONNX Runtime;
/// otherwise every call raises BackendUnavailable.
class OnnxBackend : public FeatureBackend
{
public:
    OnnxBackend(std::filesystem::path model, ModelInputConfig cfg);

    static bool available();

    std::string name() const override { return "onnx"; }
    FeatureMatrix vectors(const ManifestEntry& entry, const std::string& view, OutputKind kind) const override;

private:
    std::filesystem::path model_;
    ModelInputConfig cfg_;
};

/// Collects one matrix per manifest entry from the backend, in manifest
/// order. Backends that are not thread-safe run serially regardless of jobs.
std::vector<FeatureMatrix> extract_features(const std::vector<ManifestEntry>& entries, const FeatureBackend& backend,
                                            const std::string& view, OutputKind kind, int jobs = 1);

/// Regroups per-image matrices (rows = views) into one matrix per view row.
std::vector<FeatureMatrix> group_by_view(const std::vector<FeatureMatrix>& per_image);

} // namespace tanpano
