#pragma once

#include <iosfwd>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "tanpano/metrics.hpp"
#include "tanpano/sphere.hpp"

namespace tanpano::cli {

enum ExitCode { kOk = 0, kInputError = 2, kComputeError = 3 };

/// Maps an error to the CLI exit code: 3 for failures of the computation
/// itself, 2 for everything caused by the inputs.
int exit_code_for(const Error& e);

struct DistortionRow
{
    std::string representation;
    double theta_deg = 0.0;
    DistortionTriple<double> values;
};

/// Distortion rows for each angle; with no angles the representation's
/// maximum is used (half the field of view for tangent planes, the cube
/// corner angle atan(sqrt 2) for cubemaps).
std::vector<DistortionRow> cmd_distortion(const std::vector<double>& theta_deg, const std::string& representation,
                                          double fov_deg = 80.0);

std::string format_distortion_text(const std::vector<DistortionRow>& rows);
nlohmann::ordered_json format_distortion_json(const std::vector<DistortionRow>& rows);

struct MetricsConfig
{
    std::string metric;
    std::string real_manifest;
    std::string gen_manifest;
    std::string backend = "precomputed";
    std::string real_features;
    std::string gen_features;
    std::string onnx_model;
    int splits = 1;
    double shrinkage = 0.0;
    int plane_count = 18;
    int jobs = 1;
    unsigned long long seed = 0;
};

MetricReport cmd_metrics(const MetricsConfig& cfg);

/// Entry point shared by the executable and the tests. Writes human output
/// to `out` and `error:` lines to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace tanpano::cli
