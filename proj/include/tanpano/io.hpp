#pragma once

#include <filesystem>
#include <json.hpp>
#include <optional>
#include <vector>

#include "tanpano/grid.hpp"
#include "tanpano/image.hpp"
#include "tanpano/sphere.hpp"

namespace tanpano {

/// Reads 8- or 16-bit PNG (gray, gray+alpha, RGB, RGBA) into [0, 1] floats.
Image<float> read_png(const std::filesystem::path& path);

/// Writes with rounding to the nearest code value; values are clamped to [0, 1].
void write_png(const Image<float>& img, const std::filesystem::path& path, int bit_depth = 8);

/// Reads a PNG or a rank-3 (height, width, channels) TensorFile.
Image<float> read_image(const std::filesystem::path& path);
void write_image(const Image<float>& img, const std::filesystem::path& path, int bit_depth = 8);

struct LayoutDocument
{
    std::vector<TangentPlaneSpec> planes;
    std::optional<GridLayout> grid;
};

nlohmann::ordered_json layout_to_json(const LayoutDocument& doc);
LayoutDocument layout_from_json(const nlohmann::json& j);

void save_layout(const LayoutDocument& doc, const std::filesystem::path& path);
LayoutDocument load_layout(const std::filesystem::path& path);

/// Default 18-plane layout with the custom_polar_first grid.
LayoutDocument default_layout_document(int resolution = 192);

} // namespace tanpano
