#include "commands.hpp"

#include <zlib.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "tanpano/features.hpp"
#include "tanpano/grid.hpp"
#include "tanpano/io.hpp"
#include "tanpano/raster.hpp"

namespace tanpano::cli {

namespace fs = std::filesystem;

namespace {

std::string tile_name(std::size_t i)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "plane_%02zu.png", i);
    return buf;
}

class ContentHash
{
public:
    void add(const void* data, std::size_t n)
    {
        crc_ = crc32(crc_, static_cast<const Bytef*>(data), static_cast<uInt>(n));
    }

    void add_file(const fs::path& p)
    {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw IoError("cannot open '" + p.string() + "'");
        const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
        add(bytes.data(), bytes.size());
    }

    void add_matrix(const FeatureMatrix& m) { add(m.data(), sizeof(float) * static_cast<std::size_t>(m.size())); }

    std::string hex() const
    {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc_));
        return std::string("crc32:") + buf;
    }

private:
    uLong crc_ = crc32(0L, Z_NULL, 0);
};

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
}

nlohmann::ordered_json finite_or_inf(double v)
{
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

Image<float> read_checked(const fs::path& path, int width, int height)
{
    Image<float> img = read_image(path);
    if (img.width() != width || img.height() != height) {
        throw DimensionError("'" + path.string() + "' is " + std::to_string(img.width()) + "x"
                             + std::to_string(img.height()) + ", flags say " + std::to_string(width) + "x"
                             + std::to_string(height));
    }
    return img;
}

std::vector<TangentPlaneSpec> resolve_planes(const std::string& layout_path, int resolution)
{
    if (!layout_path.empty()) return load_layout(layout_path).planes;
    return plane_layout_18(resolution);
}

std::string normalize_metric(std::string m)
{
    if (m == "tangentfid") return "tangent_fid";
    if (m == "tangentis") return "tangent_is";
    return m;
}

std::unique_ptr<FeatureBackend> make_backend(const MetricsConfig& cfg, const std::string& dir)
{
    if (cfg.backend == "precomputed") return std::make_unique<PrecomputedBackend>(dir);
    if (cfg.backend == "onnx") return std::make_unique<OnnxBackend>(cfg.onnx_model, ModelInputConfig{});
    throw DomainError("unknown feature backend '" + cfg.backend + "'");
}

std::string features_dir(const std::string& explicit_dir, const std::string& manifest)
{
    if (!explicit_dir.empty()) return explicit_dir;
    return fs::path(manifest).parent_path().string();
}

struct Side
{
    std::vector<ManifestEntry> entries;
    std::unique_ptr<FeatureBackend> backend;
};

Side open_side(const MetricsConfig& cfg, const std::string& manifest, const std::string& dir, ContentHash& hash)
{
    if (manifest.empty()) throw IoError("metric '" + cfg.metric + "' needs a manifest for each side it reads");
    hash.add_file(manifest);
    Side s;
    s.entries = read_manifest(manifest);
    if (s.entries.empty()) throw EmptyInput("manifest '" + manifest + "' lists no images");
    s.backend = make_backend(cfg, features_dir(dir, manifest));
    return s;
}

std::vector<FeatureMatrix> load_views(const Side& s, const std::string& view, OutputKind kind, int jobs,
                                      ContentHash& hash)
{
    const auto per_image = extract_features(s.entries, *s.backend, view, kind, jobs);
    for (const auto& m : per_image) hash.add_matrix(m);
    return group_by_view(per_image);
}

} // namespace

int exit_code_for(const Error& e)
{
    switch (e.code()) {
        case ErrorCode::Coverage:
        case ErrorCode::Hemisphere:
        case ErrorCode::InsufficientSamples: return kComputeError;
        default: return kInputError;
    }
}

std::vector<DistortionRow> cmd_distortion(const std::vector<double>& theta_deg, const std::string& representation,
                                          double fov_deg)
{
    double default_theta = 0.0;
    if (representation == "tangent") {
        default_theta = fov_deg / 2.0;
    } else if (representation == "cubemap") {
        default_theta = rad_to_deg(std::atan(std::sqrt(2.0)));
    } else {
        throw DomainError("representation must be 'tangent' or 'cubemap', got '" + representation + "'");
    }
    std::vector<double> thetas = theta_deg;
    if (thetas.empty()) thetas.push_back(default_theta);
    std::vector<DistortionRow> rows;
    for (double t : thetas) rows.push_back({representation, t, distortion(deg_to_rad(t))});
    return rows;
}

std::string format_distortion_text(const std::vector<DistortionRow>& rows)
{
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-14s %10s %10s %10s %10s %10s\n", "representation", "theta_deg", "D_L_rad",
                  "D_L_tan", "D_w_deg", "D_A");
    os << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-14s %10.4f %10.4f %10.4f %10.4f %10.4f\n", r.representation.c_str(),
                      r.theta_deg, r.values.length_radial, r.values.length_tangential, r.values.angular_deg,
                      r.values.area);
        os << buf;
    }
    return os.str();
}

nlohmann::ordered_json format_distortion_json(const std::vector<DistortionRow>& rows)
{
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json e;
        e["representation"] = r.representation;
        e["theta_deg"] = r.theta_deg;
        e["length_radial"] = r.values.length_radial;
        e["length_tangential"] = r.values.length_tangential;
        e["angular_deg"] = r.values.angular_deg;
        e["area"] = r.values.area;
        j.push_back(e);
    }
    return j;
}

MetricReport cmd_metrics(const MetricsConfig& cfg_in)
{
    MetricsConfig cfg = cfg_in;
    cfg.metric = normalize_metric(cfg.metric);
    ContentHash hash;
    MetricReport report;
    TangentMetricOptions opt;
    opt.plane_count = cfg.plane_count;
    opt.splits = cfg.splits;
    opt.shrinkage = cfg.shrinkage;

    if (cfg.metric == "tangent_fid" || cfg.metric == "fid" || cfg.metric == "omnifid") {
        const Side real = open_side(cfg, cfg.real_manifest, cfg.real_features, hash);
        const Side gen = open_side(cfg, cfg.gen_manifest, cfg.gen_features, hash);
        const std::string view = cfg.metric == "tangent_fid" ? "tangent" : cfg.metric == "fid" ? "erp" : "cube";
        auto real_views = load_views(real, view, OutputKind::Features, cfg.jobs, hash);
        auto gen_views = load_views(gen, view, OutputKind::Features, cfg.jobs, hash);
        std::vector<FeatureSet> rs, gs;
        for (auto& m : real_views) rs.emplace_back(std::move(m));
        for (auto& m : gen_views) gs.emplace_back(std::move(m));
        if (cfg.metric == "tangent_fid") {
            report = tangent_fid(rs, gs, opt);
        } else if (cfg.metric == "fid") {
            if (rs.size() != 1 || gs.size() != 1) throw CountError("erp view must hold exactly one vector per image");
            report.metric = "fid";
            report.aggregate = fid(rs[0], gs[0], cfg.shrinkage);
        } else {
            if (rs.size() != 6 || gs.size() != 6) throw CountError("cube view must hold six vectors per image");
            CubeFeatureSets rc, gc;
            std::move(rs.begin(), rs.end(), rc.begin());
            std::move(gs.begin(), gs.end(), gc.begin());
            const OmniFidResult o = omnifid(rc, gc, cfg.shrinkage);
            report.metric = "omnifid";
            report.aggregate = o.value;
            report.config["fid_top"] = o.top;
            report.config["fid_bottom"] = o.bottom;
            report.config["fid_middle"] = o.middle;
        }
        report.n_real = static_cast<long long>(real.entries.size());
        report.n_gen = static_cast<long long>(gen.entries.size());
    } else if (cfg.metric == "tangent_is" || cfg.metric == "is") {
        const Side gen = open_side(cfg, cfg.gen_manifest, cfg.gen_features, hash);
        const std::string view = cfg.metric == "tangent_is" ? "tangent" : "erp";
        std::vector<LogitSet> sets;
        for (auto& m : load_views(gen, view, OutputKind::Probabilities, cfg.jobs, hash)) {
            sets.push_back(LogitSet::renormalized(std::move(m)));
        }
        if (cfg.metric == "tangent_is") {
            report = tangent_is(sets, opt);
        } else {
            if (sets.size() != 1) throw CountError("erp view must hold exactly one vector per image");
            const InceptionScore is = inception_score(sets[0], cfg.splits);
            report.metric = "is";
            report.aggregate = is.mean;
            report.config["is_std"] = is.std;
        }
        report.n_gen = static_cast<long long>(gen.entries.size());
    } else if (cfg.metric == "ds") {
        if (cfg.gen_manifest.empty()) throw IoError("metric 'ds' needs --gen");
        hash.add_file(cfg.gen_manifest);
        const auto entries = read_manifest(cfg.gen_manifest);
        if (entries.empty()) throw EmptyInput("manifest lists no images");
        const fs::path base = fs::path(cfg.gen_manifest).parent_path();
        std::vector<double> scores(entries.size());
        parallel_for(static_cast<int>(entries.size()), cfg.jobs, [&](int i) {
            const fs::path p = fs::path(entries[i].image).is_absolute() ? fs::path(entries[i].image)
                                                                        : base / entries[i].image;
            const ErpImage<float> img(read_image(p));
            scores[i] = discontinuity_score(img);
        });
        for (const auto& e : entries) {
            const fs::path p = fs::path(e.image).is_absolute() ? fs::path(e.image) : base / e.image;
            hash.add_file(p);
        }
        report.metric = "ds";
        report.aggregate = sample_mean(scores);
        report.breakdown = scores;
        report.n_gen = static_cast<long long>(entries.size());
    } else {
        throw DomainError("unknown metric '" + cfg.metric
                          + "' (expected tangent_fid, tangent_is, fid, is, omnifid or ds)");
    }

    nlohmann::ordered_json c;
    c["command"] = "metrics";
    c["metric"] = cfg.metric;
    c["real"] = cfg.real_manifest;
    c["gen"] = cfg.gen_manifest;
    c["backend"] = cfg.backend;
    c["splits"] = cfg.splits;
    c["shrinkage"] = cfg.shrinkage;
    c["plane_count"] = cfg.plane_count;
    c["seed"] = cfg.seed;
    c["input_hash"] = hash.hex();
    for (auto& [k, v] : report.config.items()) {
        if (!c.contains(k)) c[k] = v;
    }
    report.config = std::move(c);
    return report;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Tangent-plane panorama geometry and evaluation toolkit", "tanpano"};
    app.require_subcommand(1);

    int jobs = 1;
    unsigned long long seed = 0;
    app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "Seed for every random draw");

    // extract
    auto* extract = app.add_subcommand("extract", "Render tangent views from an equirectangular image");
    std::string ex_input, ex_layout, ex_out;
    int ex_width = 0, ex_height = 0, ex_res = 192, ex_depth = 8;
    extract->add_option("--input", ex_input)->required();
    extract->add_option("--width", ex_width)->required();
    extract->add_option("--height", ex_height)->required();
    extract->add_option("--layout", ex_layout, "Layout JSON (default: 18-plane layout)");
    extract->add_option("--resolution", ex_res, "Tile size when no layout is given");
    extract->add_option("--out", ex_out)->required();
    extract->add_option("--bit-depth", ex_depth)->check(CLI::IsMember({8, 16}));

    // stitch
    auto* stitch = app.add_subcommand("stitch", "Blend tangent views back into an equirectangular image");
    std::string st_tiles, st_layout, st_out, st_weighting = "center_cosine";
    int st_width = 0, st_depth = 8;
    stitch->add_option("--tiles", st_tiles)->required();
    stitch->add_option("--layout", st_layout, "Layout JSON (default: <tiles>/layout.json)");
    stitch->add_option("--out", st_out)->required();
    stitch->add_option("--width", st_width)->required();
    stitch->add_option("--weighting", st_weighting)
        ->check(CLI::IsMember({"center_cosine", "inverse_area_distortion", "uniform"}));
    stitch->add_option("--bit-depth", st_depth)->check(CLI::IsMember({8, 16}));

    // grid
    auto* grid = app.add_subcommand("grid", "Assemble or split the tile mosaic");
    grid->require_subcommand(1);
    auto* assemble_cmd = grid->add_subcommand("assemble", "Tiles to mosaic");
    auto* split_cmd = grid->add_subcommand("split", "Mosaic to tiles");
    std::string gr_tiles, gr_layout, gr_out, gr_input, gr_ordering;
    assemble_cmd->add_option("--tiles", gr_tiles)->required();
    assemble_cmd->add_option("--layout", gr_layout);
    assemble_cmd->add_option("--ordering", gr_ordering)
        ->check(CLI::IsMember({"custom_polar_first", "row_wise", "column_wise"}));
    assemble_cmd->add_option("--out", gr_out)->required();
    split_cmd->add_option("--input", gr_input)->required();
    split_cmd->add_option("--layout", gr_layout);
    split_cmd->add_option("--ordering", gr_ordering)
        ->check(CLI::IsMember({"custom_polar_first", "row_wise", "column_wise"}));
    split_cmd->add_option("--out", gr_out)->required();

    // metrics
    auto* metrics = app.add_subcommand("metrics", "Compute an evaluation metric report");
    MetricsConfig mc;
    std::string mt_format = "json", mt_out;
    metrics->add_option("--metric", mc.metric)
        ->required()
        ->check(CLI::IsMember({"tangent_fid", "tangentfid", "tangent_is", "tangentis", "fid", "is", "omnifid", "ds"}));
    metrics->add_option("--real", mc.real_manifest, "Real-image manifest (JSON lines)");
    metrics->add_option("--gen", mc.gen_manifest, "Generated-image manifest (JSON lines)");
    metrics->add_option("--backend", mc.backend)->check(CLI::IsMember({"precomputed", "onnx"}));
    metrics->add_option("--real-features", mc.real_features, "Sidecar directory for real images");
    metrics->add_option("--gen-features", mc.gen_features, "Sidecar directory for generated images");
    metrics->add_option("--onnx-model", mc.onnx_model);
    metrics->add_option("--splits", mc.splits)->check(CLI::PositiveNumber);
    metrics->add_option("--shrinkage", mc.shrinkage)->check(CLI::NonNegativeNumber);
    metrics->add_option("--planes", mc.plane_count)->check(CLI::PositiveNumber);
    metrics->add_option("--format", mt_format)->check(CLI::IsMember({"json", "csv"}));
    metrics->add_option("--out", mt_out, "Report path (default: stdout)");

    // distortion
    auto* dist = app.add_subcommand("distortion", "Gnomonic distortion at given angles from the plane center");
    std::vector<double> ds_theta;
    std::string ds_rep = "tangent", ds_format = "text";
    double ds_fov = 80.0;
    dist->add_option("--theta", ds_theta, "Angle(s) in degrees");
    dist->add_option("--representation", ds_rep)->check(CLI::IsMember({"tangent", "cubemap"}));
    dist->add_option("--fov", ds_fov, "Plane field of view for the default tangent angle");
    dist->add_option("--format", ds_format)->check(CLI::IsMember({"text", "json"}));

    // roundtrip
    auto* rt = app.add_subcommand("roundtrip", "Extract, stitch and score against the input");
    std::string rt_input, rt_layout, rt_report, rt_weighting = "center_cosine";
    int rt_width = 0, rt_height = 0, rt_res = 192;
    rt->add_option("--input", rt_input)->required();
    rt->add_option("--width", rt_width)->required();
    rt->add_option("--height", rt_height)->required();
    rt->add_option("--layout", rt_layout);
    rt->add_option("--resolution", rt_res);
    rt->add_option("--weighting", rt_weighting)
        ->check(CLI::IsMember({"center_cosine", "inverse_area_distortion", "uniform"}));
    rt->add_option("--report", rt_report, "Report path (default: stdout)");

    // layout
    auto* lay = app.add_subcommand("layout", "Write the default layout document");
    std::string ly_out, ly_ordering = "custom_polar_first";
    LayoutConfig ly_cfg;
    lay->add_option("--out", ly_out)->required();
    lay->add_option("--resolution", ly_cfg.resolution);
    lay->add_option("--fov", ly_cfg.fov_deg);
    lay->add_option("--polar-lat", ly_cfg.polar_lat_deg);
    lay->add_option("--equatorial-lat", ly_cfg.equatorial_lat_deg);
    lay->add_option("--ordering", ly_ordering)->check(CLI::IsMember({"custom_polar_first", "row_wise", "column_wise"}));

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }

    try {
        if (extract->parsed()) {
            const ErpImage<float> erp(read_checked(ex_input, ex_width, ex_height));
            LayoutDocument doc = ex_layout.empty() ? default_layout_document(ex_res) : load_layout(ex_layout);
            fs::create_directories(ex_out);
            const auto ts = extract_tangent_set(erp, doc.planes, jobs);
            for (std::size_t i = 0; i < ts.images.size(); ++i) {
                write_png(ts.images[i], fs::path(ex_out) / tile_name(i), ex_depth);
            }
            save_layout(doc, fs::path(ex_out) / "layout.json");
            out << "wrote " << ts.images.size() << " tiles to " << ex_out << '\n';
        } else if (stitch->parsed()) {
            const fs::path layout_path = st_layout.empty() ? fs::path(st_tiles) / "layout.json" : fs::path(st_layout);
            const LayoutDocument doc = load_layout(layout_path);
            TangentSet<float> ts;
            ts.specs = doc.planes;
            std::vector<std::size_t> missing;
            for (std::size_t i = 0; i < doc.planes.size(); ++i) {
                if (!fs::exists(fs::path(st_tiles) / tile_name(i))) missing.push_back(i);
            }
            if (!missing.empty()) {
                std::string list;
                for (auto i : missing) list += (list.empty() ? "" : ", ") + std::to_string(i);
                throw IoError("missing tile file(s) for plane index " + list);
            }
            for (std::size_t i = 0; i < doc.planes.size(); ++i) {
                ts.images.push_back(read_png(fs::path(st_tiles) / tile_name(i)));
            }
            if (st_width % 2 != 0) throw DimensionError("--width must be even for a 2:1 output");
            const auto erp = reproject_blend(ts, ErpDims(st_width, st_width / 2), parse_weighting(st_weighting), jobs);
            write_image(erp, st_out, st_depth);
            out << "wrote " << st_out << '\n';
        } else if (grid->parsed()) {
            const bool assembling = assemble_cmd->parsed();
            const fs::path layout_path = !gr_layout.empty() ? fs::path(gr_layout)
                : assembling                                 ? fs::path(gr_tiles) / "layout.json"
                                                             : fs::path();
            LayoutDocument doc = layout_path.empty() ? default_layout_document() : load_layout(layout_path);
            if (doc.planes.empty()) throw LayoutError("layout lists no planes");
            const int tile_px = doc.planes.front().resolution;
            if (!gr_ordering.empty() || !doc.grid) {
                const GridOrdering o = gr_ordering.empty() ? GridOrdering::CustomPolarFirst : parse_ordering(gr_ordering);
                const int rows = doc.grid ? doc.grid->rows : 3;
                const int cols = doc.grid ? doc.grid->cols : 6;
                doc.grid = GridLayout::make(o, rows, cols, tile_px);
            }
            if (assembling) {
                std::vector<Image<float>> tiles;
                for (int i = 0; i < doc.grid->plane_count(); ++i) {
                    const fs::path p = fs::path(gr_tiles) / tile_name(i);
                    if (!fs::exists(p)) throw IoError("missing tile file for plane index " + std::to_string(i));
                    tiles.push_back(read_png(p));
                }
                write_png(assemble(tiles, *doc.grid), gr_out);
                out << "wrote " << gr_out << '\n';
            } else {
                const auto tiles = split(read_image(gr_input), *doc.grid);
                fs::create_directories(gr_out);
                for (std::size_t i = 0; i < tiles.size(); ++i) write_png(tiles[i], fs::path(gr_out) / tile_name(i));
                save_layout(doc, fs::path(gr_out) / "layout.json");
                out << "wrote " << tiles.size() << " tiles to " << gr_out << '\n';
            }
        } else if (metrics->parsed()) {
            mc.jobs = jobs;
            mc.seed = seed;
            MetricReport r = cmd_metrics(mc);
            r.config["format"] = mt_format;
            const std::string text = mt_format == "csv" ? r.to_csv() : r.to_json().dump(2) + "\n";
            if (mt_out.empty()) {
                out << text;
            } else {
                write_text(mt_out, text);
            }
        } else if (dist->parsed()) {
            const auto rows = cmd_distortion(ds_theta, ds_rep, ds_fov);
            if (ds_format == "json") {
                out << format_distortion_json(rows).dump(2) << '\n';
            } else {
                out << format_distortion_text(rows);
            }
        } else if (rt->parsed()) {
            ContentHash hash;
            hash.add_file(rt_input);
            const ErpImage<float> erp(read_checked(rt_input, rt_width, rt_height));
            const auto specs = resolve_planes(rt_layout, rt_res);
            const ErpDims dims = erp.dims();
            const std::size_t uncovered = uncovered_pixels(specs, dims);
            nlohmann::ordered_json rep;
            rep["command"] = "roundtrip";
            rep["input"] = rt_input;
            rep["input_hash"] = hash.hex();
            rep["width"] = dims.width;
            rep["height"] = dims.height;
            rep["planes"] = specs.size();
            rep["weighting"] = rt_weighting;
            rep["uncovered_pixels"] = uncovered;
            rep["coverage"] = 1.0 - static_cast<double>(uncovered) / (double(dims.width) * dims.height);
            int code = kOk;
            if (uncovered == 0) {
                const auto ts = extract_tangent_set(erp, specs, jobs);
                const auto back = reproject_blend(ts, dims, parse_weighting(rt_weighting), jobs);
                rep["psnr_db"] = finite_or_inf(psnr<float>(erp, back));
            } else {
                rep["psnr_db"] = nullptr;
                code = kComputeError;
                err << "error: " << CoverageError(uncovered).what() << '\n';
            }
            const std::string text = rep.dump(2) + "\n";
            if (rt_report.empty()) {
                out << text;
            } else {
                write_text(rt_report, text);
            }
            return code;
        } else if (lay->parsed()) {
            LayoutDocument doc;
            doc.planes = plane_layout(ly_cfg);
            doc.grid = GridLayout::make(parse_ordering(ly_ordering), 3, 6, ly_cfg.resolution);
            save_layout(doc, ly_out);
            out << "wrote " << ly_out << '\n';
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kComputeError;
    }
    return kOk;
}

} // namespace tanpano::cli
