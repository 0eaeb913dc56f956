#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <json.hpp>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tanpano/errors.hpp"
#include "tanpano/image.hpp"

namespace tanpano {

using FeatureMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// n samples x d features as produced by an external extractor.
struct FeatureSet
{
    FeatureMatrix matrix;

    FeatureSet() = default;
    explicit FeatureSet(FeatureMatrix m);

    Eigen::Index n() const { return matrix.rows(); }
    Eigen::Index d() const { return matrix.cols(); }
};

/// n samples x k class probabilities. Rows are nonnegative and sum to 1.
struct LogitSet
{
    FeatureMatrix rows;

    LogitSet() = default;
    explicit LogitSet(FeatureMatrix probs);

    /// Rescales rows whose sum is within `tolerance` of 1 before validating.
    static LogitSet renormalized(FeatureMatrix probs, double tolerance = 1e-4);

    Eigen::Index n() const { return rows.rows(); }
    Eigen::Index k() const { return rows.cols(); }
};

template <class Scalar = double>
struct GaussianStats
{
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> cov;
    /// Set when n <= d, where the covariance is rank deficient.
    bool singular_warning = false;
};

/// Sample mean and unbiased covariance. `shrinkage` adds lambda * I.
template <class Scalar = double>
GaussianStats<Scalar> gaussian_stats(const FeatureSet& f, Scalar shrinkage = 0)
{
    if (f.n() < 2) throw InsufficientSamples("need at least 2 samples, got " + std::to_string(f.n()));
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Mat x = f.matrix.template cast<Scalar>();
    GaussianStats<Scalar> s;
    s.mean = x.colwise().mean().transpose();
    const Mat centered = x.rowwise() - s.mean.transpose();
    s.cov = (centered.transpose() * centered) / Scalar(f.n() - 1);
    s.cov = (s.cov + s.cov.transpose()) / Scalar(2);
    if (shrinkage > 0) s.cov.diagonal().array() += shrinkage;
    s.singular_warning = f.n() <= f.d();
    return s;
}

/// Square root of a symmetric PSD matrix via eigendecomposition, clamping
/// negative eigenvalues to zero.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> sqrtm_psd(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& m)
{
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> es(m);
    const auto root = es.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

/// ||mu1 - mu2||^2 + Tr(S1 + S2 - 2 (S1 S2)^{1/2}), with the trace of the
/// root taken from the eigenvalues of S1^{1/2} S2 S1^{1/2}. Never negative.
template <class Scalar>
Scalar frechet_distance(const GaussianStats<Scalar>& a, const GaussianStats<Scalar>& b)
{
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (a.mean.size() != b.mean.size() || a.cov.rows() != a.mean.size() || b.cov.rows() != b.mean.size()) {
        throw DimensionError("Gaussian statistics differ in dimension (" + std::to_string(a.mean.size()) + " vs "
                             + std::to_string(b.mean.size()) + ")");
    }
    if (a.mean == b.mean && a.cov == b.cov) return Scalar(0);
    const Mat root_a = sqrtm_psd<Scalar>(a.cov);
    Mat inner = root_a * b.cov * root_a;
    inner = (inner + inner.transpose()) / Scalar(2);
    Eigen::SelfAdjointEigenSolver<Mat> es(inner, Eigen::EigenvaluesOnly);
    const Scalar tr_root = es.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt().sum();
    const Scalar d = (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() - 2 * tr_root;
    return d > 0 ? d : Scalar(0);
}

struct InceptionScore
{
    double mean = 0.0;
    double std = 0.0;
};

/// exp(E_x KL(p(y|x) || p(y))) per split; the last split absorbs the
/// remainder. std is the population deviation across splits.
InceptionScore inception_score(const LogitSet& l, int splits = 1);

/// mu - 1.96 sigma / sqrt(N) with sigma the sample standard deviation.
double lower_confidence_bound(std::span<const double> values);
/// mu + 1.96 sigma / sqrt(N).
double upper_confidence_bound(std::span<const double> values);

double sample_mean(std::span<const double> values);
double sample_std(std::span<const double> values);

struct MetricReport
{
    std::string metric;
    double aggregate = 0.0;
    std::optional<std::vector<double>> breakdown;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    long long n_real = 0;
    long long n_gen = 0;

    nlohmann::ordered_json to_json() const;
    std::string to_csv() const;
};

struct TangentMetricOptions
{
    int plane_count = 18;
    int splits = 1;
    double shrinkage = 0.0;
};

MetricReport tangent_is(std::span<const LogitSet> per_tangent, const TangentMetricOptions& opt = {});
MetricReport tangent_fid(std::span<const FeatureSet> real, std::span<const FeatureSet> gen,
                         const TangentMetricOptions& opt = {});

/// Plain FID between two feature sets.
double fid(const FeatureSet& real, const FeatureSet& gen, double shrinkage = 0.0);

/// Per-face feature sets of a cubemap collection, aligned by image index, in
/// the order top, bottom, front, back, left, right.
using CubeFeatureSets = std::array<FeatureSet, 6>;

struct OmniFidResult
{
    double top = 0.0;
    double bottom = 0.0;
    double middle = 0.0;
    double value = 0.0;
};

/// Mean of FID over top faces, bottom faces, and the per-image mean of the
/// four side-face features.
OmniFidResult omnifid(const CubeFeatureSets& real, const CubeFeatureSets& gen, double shrinkage = 0.0);

struct DiscontinuityOptions
{
    /// Columns on each side of the seam used as the local reference; 0 picks
    /// max(1, W / 64).
    int band = 0;
    double floor = 1e-8;
};

/// Seam severity at the left/right wrap. A horizontal Scharr kernel with
/// circular horizontal boundary is applied to the channel-mean luminance;
/// the mean |Gx| over the two seam columns is divided by the mean |Gx| over
/// the adjacent reference band (plus `floor`).
double discontinuity_score(const Image<float>& img, const DiscontinuityOptions& opt = {});

} // namespace tanpano
