#ifndef PERFKIT_CLI_HPP
#define PERFKIT_CLI_HPP

#include "perfkit/preprocess.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace perfkit::cli {

namespace fs = std::filesystem;

// Process exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitValidation = 2;

struct MapsOptions {
    fs::path dce;
    std::optional<fs::path> timing;
    std::optional<fs::path> mask;
    fs::path out_dir;
    unsigned jobs = 0; // 0 = hardware concurrency
    bool tmax_in_time = false;
};

struct PreprocessOptions {
    std::vector<fs::path> inputs;
    PreprocessConfig config;
    fs::path out_dir;
    bool stack = false;
};

struct EvalOptions {
    std::vector<fs::path> predictions;
    std::vector<fs::path> ground_truth;
    std::optional<fs::path> annotations;
    fs::path out_dir;
    double theta = 0.5;
    double hit_ratio = 0.1;
    bool cs_only = false;
    unsigned jobs = 0;
};

struct PhantomOptions {
    std::optional<fs::path> spec;
    fs::path out_dir;
    std::optional<std::uint64_t> seed;
    bool perfect_prediction = false;
};

// Each command throws ValidationError / IoError; run() maps them to exit codes.
void cmd_maps(const MapsOptions& options);
void cmd_preprocess(const PreprocessOptions& options);
void cmd_eval(const EvalOptions& options);
void cmd_phantom(const PhantomOptions& options);

/// Patient id of a per-patient file: stem minus a trailing _prob/_pred/_labels/_label/_gt/_seg.
std::string patient_id_from_path(const fs::path& path);

/// Parses argv (argv[0] = program name), runs the subcommand and returns the exit code.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

} // namespace perfkit::cli

#endif // PERFKIT_CLI_HPP
