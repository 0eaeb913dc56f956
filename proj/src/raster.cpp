#include "tanpano/raster.hpp"

namespace tanpano {

Weighting parse_weighting(std::string_view name)
{
    if (name == "center_cosine") return Weighting::CenterCosine;
    if (name == "inverse_area_distortion") return Weighting::InverseAreaDistortion;
    if (name == "uniform") return Weighting::Uniform;
    throw DomainError("unknown weighting scheme '" + std::string(name) + "'");
}

std::string_view weighting_name(Weighting w)
{
    switch (w) {
        case Weighting::CenterCosine: return "center_cosine";
        case Weighting::InverseAreaDistortion: return "inverse_area_distortion";
        case Weighting::Uniform: return "uniform";
    }
    return "center_cosine";
}

std::vector<double> blend_weights(const std::vector<TangentPlaneSpec>& specs, const SphericalCoord<double>& s,
                                  Weighting weighting)
{
    const Vec3<double> v = s.unit_vector();
    std::vector<double> w(specs.size(), 0.0);
    double sum = 0.0;
    for (std::size_t k = 0; k < specs.size(); ++k) {
        const detail::PlaneGeometry g(specs[k]);
        double x, y, cos_c;
        if (g.project(v, x, y, cos_c)) {
            w[k] = detail::blend_weight(weighting, cos_c);
            sum += w[k];
        }
    }
    if (sum > 0.0) {
        for (auto& x : w) x /= sum;
    }
    return w;
}

Image<float> coverage_map(const std::vector<TangentPlaneSpec>& specs, const ErpDims& dims)
{
    std::vector<detail::PlaneGeometry> planes;
    for (const auto& s : specs) planes.emplace_back(s);
    Image<float> out(dims.width, dims.height, 1);
    for (int row = 0; row < dims.height; ++row) {
        for (int col = 0; col < dims.width; ++col) {
            const Vec3<double> v = detail::erp_pixel_direction(col, row, dims);
            int n = 0;
            for (const auto& g : planes) {
                double x, y, cos_c;
                if (g.project(v, x, y, cos_c)) ++n;
            }
            out(col, row, 0) = static_cast<float>(n);
        }
    }
    return out;
}

std::size_t uncovered_pixels(const std::vector<TangentPlaneSpec>& specs, const ErpDims& dims)
{
    const Image<float> cov = coverage_map(specs, dims);
    return static_cast<std::size_t>((cov.data() == 0.0f).count());
}

TangentPlaneSpec cube_face_spec(CubeFace face, int face_px)
{
    double lon = 0.0, lat = 0.0;
    switch (face) {
        case CubeFace::Top: lat = 90.0; break;
        case CubeFace::Bottom: lat = -90.0; break;
        case CubeFace::Front: break;
        case CubeFace::Back: lon = 180.0; break;
        case CubeFace::Left: lon = -90.0; break;
        case CubeFace::Right: lon = 90.0; break;
    }
    return {SphericalCoord<double>::from_degrees(lon, lat), 90.0, face_px};
}

} // namespace tanpano
