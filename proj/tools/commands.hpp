#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tepinn::cli {

/// Bad flag combination detected after parsing; maps to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SimulateOptions {
    std::string profile;
    std::vector<double> params;
    double duration = 60.0;
    double rate = 100.0;
    std::optional<std::string> noise_preset;
    std::optional<double> gyro_std, accel_std;
    std::optional<std::vector<double>> gyro_bias, accel_bias;
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> noise_seed;
    std::string out;
};

struct TrainOptions {
    std::vector<std::string> data;
    std::optional<std::string> config;
    std::string out;
    std::optional<std::string> resume;
    std::optional<std::string> metrics;
    std::optional<std::string> step_log;
    /// Epochs to run in this invocation; the checkpoint allows resuming later.
    std::optional<std::size_t> stop_after;
    bool wall_time = false;
    bool quiet = false;
};

struct EvalOptions {
    std::vector<std::string> data;
    std::vector<std::string> estimators{"tepinn"};
    std::optional<std::string> checkpoint;
    std::optional<std::string> checkpoint_nophys;
    std::string report;
    std::optional<std::string> plots;
    std::string error_mode = "tilt";
};

struct SweepOptions {
    std::string axis;
    std::vector<double> levels;
    std::vector<std::string> estimators{"ekf"};
    std::vector<std::uint64_t> seeds{0};
    std::string out;
    std::optional<std::string> checkpoint;
    std::optional<std::string> checkpoint_nophys;
    double duration = 30.0;
    double rate = 100.0;
    std::string error_mode = "tilt";
};

struct AblateOptions {
    std::vector<std::string> data;
    std::optional<std::string> config;
    std::vector<std::string> eval_data;
    std::vector<std::uint64_t> seeds;
    std::string out = ".";
    std::string error_mode = "tilt";
    bool quiet = false;
};

int run_simulate(const SimulateOptions& o);
int run_train(const TrainOptions& o);
int run_eval(const EvalOptions& o);
int run_sweep(const SweepOptions& o);
int run_ablate(const AblateOptions& o);

/// Sorted, de-duplicated paths matching POSIX glob patterns. Throws Io when a
/// pattern matches nothing.
std::vector<std::string> expand_globs(const std::vector<std::string>& patterns);

}  // namespace tepinn::cli
