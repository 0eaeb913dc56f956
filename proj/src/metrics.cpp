#include "tanpano/metrics.hpp"

#include <algorithm>
#include <cstdio>

namespace tanpano {

namespace {

constexpr double kZ95 = 1.96;

void require_finite(const FeatureMatrix& m, const char* what)
{
    if (!m.allFinite()) throw DomainError(std::string(what) + " contain non-finite values");
}

std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

FeatureSet::FeatureSet(FeatureMatrix m) : matrix(std::move(m))
{
    require_finite(matrix, "features");
}

LogitSet::LogitSet(FeatureMatrix probs) : rows(std::move(probs))
{
    require_finite(rows, "probabilities");
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        if ((rows.row(i).array() < 0.0f).any()) {
            throw DomainError("probability row " + std::to_string(i) + " has negative entries");
        }
        const double s = rows.row(i).cast<double>().sum();
        if (std::abs(s - 1.0) > 1e-6) {
            throw DomainError("probability row " + std::to_string(i) + " sums to " + format_double(s));
        }
    }
}

LogitSet LogitSet::renormalized(FeatureMatrix probs, double tolerance)
{
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        const double s = probs.row(i).cast<double>().sum();
        if (std::abs(s - 1.0) > tolerance) {
            throw DomainError("probability row " + std::to_string(i) + " sums to " + format_double(s)
                              + ", too far from 1 to renormalize");
        }
        probs.row(i) = (probs.row(i).cast<double>() / s).cast<float>();
    }
    return LogitSet(std::move(probs));
}

InceptionScore inception_score(const LogitSet& l, int splits)
{
    const Eigen::Index n = l.n();
    if (n == 0 || l.k() == 0) throw EmptyInput("inception score needs at least one sample");
    if (splits < 1 || splits > n) {
        throw RangeError("split count " + std::to_string(splits) + " invalid for " + std::to_string(n) + " samples");
    }
    const Eigen::MatrixXd p = l.rows.cast<double>();
    const Eigen::Index base = n / splits;
    std::vector<double> scores;
    for (int s = 0; s < splits; ++s) {
        const Eigen::Index begin = s * base;
        const Eigen::Index end = (s == splits - 1) ? n : begin + base;
        const auto part = p.middleRows(begin, end - begin);
        const Eigen::RowVectorXd marginal = part.colwise().mean();
        double kl_sum = 0.0;
        for (Eigen::Index i = 0; i < part.rows(); ++i) {
            double kl = 0.0;
            for (Eigen::Index j = 0; j < part.cols(); ++j) {
                const double pij = part(i, j);
                if (pij > 0.0) kl += pij * (std::log(pij) - std::log(marginal(j)));
            }
            kl_sum += kl;
        }
        scores.push_back(std::exp(kl_sum / static_cast<double>(part.rows())));
    }
    InceptionScore out;
    out.mean = sample_mean(scores);
    double var = 0.0;
    for (double v : scores) var += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(var / static_cast<double>(scores.size()));
    return out;
}

// Shifted by the first value so identical inputs give an exact mean and a
// zero deviation.
double sample_mean(std::span<const double> values)
{
    if (values.empty()) throw EmptyInput("mean of an empty list");
    const double ref = values.front();
    double acc = 0.0;
    for (double v : values) acc += v - ref;
    return ref + acc / static_cast<double>(values.size());
}

double sample_std(std::span<const double> values)
{
    if (values.size() < 2) return 0.0;
    const double mu = sample_mean(values);
    double acc = 0.0;
    for (double v : values) acc += (v - mu) * (v - mu);
    return std::sqrt(acc / static_cast<double>(values.size() - 1));
}

double lower_confidence_bound(std::span<const double> values)
{
    return sample_mean(values) - kZ95 * sample_std(values) / std::sqrt(static_cast<double>(values.size()));
}

double upper_confidence_bound(std::span<const double> values)
{
    return sample_mean(values) + kZ95 * sample_std(values) / std::sqrt(static_cast<double>(values.size()));
}

nlohmann::ordered_json MetricReport::to_json() const
{
    nlohmann::ordered_json j;
    j["metric"] = metric;
    j["aggregate"] = aggregate;
    if (breakdown) j["breakdown"] = *breakdown;
    j["config"] = config;
    j["n_real"] = n_real;
    j["n_gen"] = n_gen;
    return j;
}

std::string MetricReport::to_csv() const
{
    std::string out = "metric,index,value\n";
    if (breakdown) {
        for (std::size_t i = 0; i < breakdown->size(); ++i) {
            out += metric + "," + std::to_string(i) + "," + format_double((*breakdown)[i]) + "\n";
        }
    }
    out += metric + ",aggregate," + format_double(aggregate) + "\n";
    return out;
}

MetricReport tangent_is(std::span<const LogitSet> per_tangent, const TangentMetricOptions& opt)
{
    if (static_cast<int>(per_tangent.size()) != opt.plane_count) {
        throw CountError("expected " + std::to_string(opt.plane_count) + " tangent logit sets, got "
                         + std::to_string(per_tangent.size()));
    }
    std::vector<double> values;
    values.reserve(per_tangent.size());
    for (const auto& l : per_tangent) values.push_back(inception_score(l, opt.splits).mean);
    MetricReport r;
    r.metric = "tangent_is";
    r.aggregate = lower_confidence_bound(values);
    r.breakdown = std::move(values);
    r.config["plane_count"] = opt.plane_count;
    r.config["splits"] = opt.splits;
    r.n_gen = per_tangent.empty() ? 0 : per_tangent.front().n();
    return r;
}

double fid(const FeatureSet& real, const FeatureSet& gen, double shrinkage)
{
    if (real.d() != gen.d()) {
        throw DimensionError("feature dimensions differ (" + std::to_string(real.d()) + " vs "
                             + std::to_string(gen.d()) + ")");
    }
    return frechet_distance(gaussian_stats<double>(real, shrinkage), gaussian_stats<double>(gen, shrinkage));
}

MetricReport tangent_fid(std::span<const FeatureSet> real, std::span<const FeatureSet> gen,
                         const TangentMetricOptions& opt)
{
    if (static_cast<int>(real.size()) != opt.plane_count || static_cast<int>(gen.size()) != opt.plane_count) {
        throw CountError("expected " + std::to_string(opt.plane_count) + " tangent feature sets per side, got "
                         + std::to_string(real.size()) + " real and " + std::to_string(gen.size()) + " generated");
    }
    std::vector<double> values;
    values.reserve(real.size());
    for (std::size_t i = 0; i < real.size(); ++i) values.push_back(fid(real[i], gen[i], opt.shrinkage));
    MetricReport r;
    r.metric = "tangent_fid";
    r.aggregate = upper_confidence_bound(values);
    r.breakdown = std::move(values);
    r.config["plane_count"] = opt.plane_count;
    r.config["shrinkage"] = opt.shrinkage;
    r.n_real = real.front().n();
    r.n_gen = gen.front().n();
    return r;
}

namespace {

FeatureSet side_mean(const CubeFeatureSets& faces)
{
    FeatureMatrix m = faces[2].matrix;
    for (int f = 2; f < 6; ++f) {
        if (faces[f].n() != faces[2].n() || faces[f].d() != faces[2].d()) {
            throw DimensionError("side face feature sets differ in shape");
        }
    }
    const Eigen::MatrixXd sum = faces[2].matrix.cast<double>() + faces[3].matrix.cast<double>()
        + faces[4].matrix.cast<double>() + faces[5].matrix.cast<double>();
    m = (sum / 4.0).cast<float>();
    return FeatureSet(std::move(m));
}

} // namespace

OmniFidResult omnifid(const CubeFeatureSets& real, const CubeFeatureSets& gen, double shrinkage)
{
    OmniFidResult r;
    r.top = fid(real[0], gen[0], shrinkage);
    r.bottom = fid(real[1], gen[1], shrinkage);
    r.middle = fid(side_mean(real), side_mean(gen), shrinkage);
    r.value = (r.top + r.bottom + r.middle) / 3.0;
    return r;
}

double discontinuity_score(const Image<float>& img, const DiscontinuityOptions& opt)
{
    const int w = img.width();
    const int h = img.height();
    if (w < 4) throw DimensionError("discontinuity score needs at least 4 columns");
    const int band = opt.band > 0 ? opt.band : std::max(1, w / 64);
    if (2 * band + 2 > w) throw DimensionError("reference band too wide for image width");

    Eigen::ArrayXXd lum(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int c = 0; c < img.channels(); ++c) s += img(x, y, c);
            lum(y, x) = s / img.channels();
        }
    }
    // |Gx| of the 3x3 Scharr kernel [-3 0 3; -10 0 10; -3 0 3], rows clamped.
    auto grad = [&](int x, int y) {
        const int xl = (x + w - 1) % w;
        const int xr = (x + 1) % w;
        double g = 0.0;
        constexpr int weights[3] = {3, 10, 3};
        for (int k = -1; k <= 1; ++k) {
            const int yy = std::clamp(y + k, 0, h - 1);
            g += weights[k + 1] * (lum(yy, xr) - lum(yy, xl));
        }
        return std::abs(g);
    };
    double seam = 0.0;
    double ref = 0.0;
    for (int y = 0; y < h; ++y) {
        seam += grad(0, y) + grad(w - 1, y);
        for (int b = 1; b <= band; ++b) ref += grad(b, y) + grad(w - 1 - b, y);
    }
    seam /= 2.0 * h;
    ref /= 2.0 * h * band;
    return seam / (ref + opt.floor);
}

} // namespace tanpano
