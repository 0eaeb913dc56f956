#include "tanpano/io.hpp"

#include <png.h>

#include <cmath>
#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include "tanpano/features.hpp"

namespace tanpano {

namespace fs = std::filesystem;

namespace {

struct FileCloser
{
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp, png_const_charp msg)
{
    throw IoError(std::string("libpng: ") + msg);
}

void png_warning_fn(png_structp, png_const_charp) {}

} // namespace

Image<float> read_png(const fs::path& path)
{
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open '" + path.string() + "'");
    png_byte sig[8];
    if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
        throw IoError("'" + path.string() + "' is not a PNG file");
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
    png_infop info = png_create_info_struct(png);
    struct Guard
    {
        png_structp* png;
        png_infop* info;
        ~Guard() { png_destroy_read_struct(png, info, nullptr); }
    } guard{&png, &info};

    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const int color = png_get_color_type(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (png_get_bit_depth(png, info) == 16) png_set_swap(png); // little-endian host samples
    png_read_update_info(png, info);

    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    const int ch = png_get_channels(png, info);
    const int depth = png_get_bit_depth(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    std::vector<png_byte> buf(rowbytes * h);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) rows[y] = buf.data() + rowbytes * y;
    png_read_image(png, rows.data());

    Image<float> img(w, h, ch);
    const double scale = depth == 16 ? 65535.0 : 255.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w * ch; ++x) {
            double v;
            if (depth == 16) {
                std::uint16_t s;
                std::memcpy(&s, rows[y] + 2 * x, 2);
                v = s;
            } else {
                v = rows[y][x];
            }
            img.pixel(0, y)[x] = static_cast<float>(v / scale);
        }
    }
    return img;
}

void write_png(const Image<float>& img, const fs::path& path, int bit_depth)
{
    if (bit_depth != 8 && bit_depth != 16) throw DomainError("PNG bit depth must be 8 or 16");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot write '" + path.string() + "'");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
    png_infop info = png_create_info_struct(png);
    struct Guard
    {
        png_structp* png;
        png_infop* info;
        ~Guard() { png_destroy_write_struct(png, info); }
    } guard{&png, &info};

    static constexpr int color_types[4] = {PNG_COLOR_TYPE_GRAY, PNG_COLOR_TYPE_GRAY_ALPHA, PNG_COLOR_TYPE_RGB,
                                           PNG_COLOR_TYPE_RGBA};
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width(), img.height(), bit_depth, color_types[img.channels() - 1],
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16) png_set_swap(png);

    const int bytes = bit_depth / 8;
    const double maxv = bit_depth == 16 ? 65535.0 : 255.0;
    const int n = img.width() * img.channels();
    std::vector<png_byte> row(std::size_t(n) * bytes);
    for (int y = 0; y < img.height(); ++y) {
        const float* src = img.pixel(0, y);
        for (int i = 0; i < n; ++i) {
            const double v = std::clamp(static_cast<double>(src[i]), 0.0, 1.0);
            const auto q = static_cast<std::uint16_t>(std::lround(v * maxv));
            if (bit_depth == 16) {
                std::memcpy(row.data() + 2 * i, &q, 2);
            } else {
                row[i] = static_cast<png_byte>(q);
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
}

Image<float> read_image(const fs::path& path)
{
    if (path.extension() == ".tpaf") {
        const TensorData t = load_tensor(path);
        if (t.dims.size() != 3) throw FormatError("image tensors must be rank 3 (height, width, channels)", 12);
        Image<float> img(static_cast<int>(t.dims[1]), static_cast<int>(t.dims[0]), static_cast<int>(t.dims[2]));
        std::copy(t.values.begin(), t.values.end(), img.data().data());
        return img;
    }
    return read_png(path);
}

void write_image(const Image<float>& img, const fs::path& path, int bit_depth)
{
    if (path.extension() == ".tpaf") {
        TensorData t;
        t.dims = {static_cast<std::uint32_t>(img.height()), static_cast<std::uint32_t>(img.width()),
                  static_cast<std::uint32_t>(img.channels())};
        t.values.assign(img.data().data(), img.data().data() + img.size());
        save_tensor(t, path);
        return;
    }
    write_png(img, path, bit_depth);
}

nlohmann::ordered_json layout_to_json(const LayoutDocument& doc)
{
    nlohmann::ordered_json j;
    j["planes"] = nlohmann::ordered_json::array();
    for (const auto& p : doc.planes) {
        nlohmann::ordered_json e;
        e["lon_deg"] = rad_to_deg(p.center.lon());
        e["lat_deg"] = rad_to_deg(p.center.lat());
        e["fov_deg"] = p.fov_deg;
        e["resolution"] = p.resolution;
        j["planes"].push_back(e);
    }
    if (doc.grid) {
        const auto& g = *doc.grid;
        nlohmann::ordered_json e;
        e["rows"] = g.rows;
        e["cols"] = g.cols;
        e["tile_px"] = g.tile_px;
        e["ordering"] = std::string(ordering_name(g.ordering));
        e["mapping"] = g.cell_of_plane;
        j["grid"] = e;
    }
    return j;
}

LayoutDocument layout_from_json(const nlohmann::json& j)
{
    LayoutDocument doc;
    try {
        for (const auto& e : j.at("planes")) {
            doc.planes.emplace_back(SphericalCoord<double>::from_degrees(e.at("lon_deg").get<double>(),
                                                                         e.at("lat_deg").get<double>()),
                                    e.at("fov_deg").get<double>(), e.at("resolution").get<int>());
        }
        if (j.contains("grid")) {
            const auto& e = j.at("grid");
            GridLayout g;
            g.rows = e.at("rows").get<int>();
            g.cols = e.at("cols").get<int>();
            g.tile_px = e.at("tile_px").get<int>();
            g.ordering = parse_ordering(e.at("ordering").get<std::string>());
            g.cell_of_plane = e.at("mapping").get<std::vector<int>>();
            g.validate();
            doc.grid = g;
        }
    } catch (const nlohmann::json::exception& e) {
        throw LayoutError(std::string("malformed layout document: ") + e.what());
    }
    return doc;
}

void save_layout(const LayoutDocument& doc, const fs::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write layout '" + path.string() + "'");
    out << layout_to_json(doc).dump(2) << '\n';
}

LayoutDocument load_layout(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open layout '" + path.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw LayoutError(std::string("layout is not valid JSON: ") + e.what());
    }
    return layout_from_json(j);
}

LayoutDocument default_layout_document(int resolution)
{
    LayoutDocument doc;
    doc.planes = plane_layout_18(resolution);
    doc.grid = GridLayout::make(GridOrdering::CustomPolarFirst, 3, 6, resolution);
    return doc;
}

} // namespace tanpano
