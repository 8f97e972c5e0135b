#pragma once

// Subcommands behind the dpdopt executable. Each returns the process exit
// code: 0 success, 1 configuration or validation error, 2 divergence.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dpdopt/analysis.hpp"
#include "dpdopt/optimizer.hpp"
#include "dpdopt/privacy.hpp"

namespace dpdopt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitDivergence = 2;

// Name of the environment variable that overrides the output directory.
inline constexpr const char* kOutDirEnv = "DPDOPT_OUT_DIR";

struct Options {
  std::string config_path;
  std::optional<std::string> out_dir;  // beats the environment variable
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::optional<std::size_t> record_every;
};

int cmd_run(const Options& opts, std::ostream& out, std::ostream& err);
int cmd_table1(const Options& opts, std::ostream& out, std::ostream& err);
int cmd_coupling(const Options& opts, std::ostream& out, std::ostream& err);
int cmd_privacy_report(const Options& opts, std::ostream& out, std::ostream& err);
int cmd_verify(std::ostream& out, std::ostream& err);

// Runs body and maps exceptions to exit codes, printing them to err.
int guarded(const std::function<int()>& body, std::ostream& err);

// Relative paths land in --out, then $DPDOPT_OUT_DIR, then the working
// directory. Parent directories are created.
std::filesystem::path resolve_output(const std::string& path, const Options& opts);

// Writes through a temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::string format_number(double v);

// Header k,lambda,consensus_error,opt_error_mean,opt_error_max,noise_norm.
std::string trace_csv(const RunTrace& trace);

struct SweepCell {
  double variance = 0.0;
  double mean_final_error = 0.0;
  double std_final_error = 0.0;  // sample standard deviation; 0 for one run
  std::size_t runs = 0;
};

SweepCell summarize_cell(double variance, const std::vector<double>& final_errors);
std::string sweep_csv(const std::vector<SweepCell>& cells);
std::string privacy_csv(const std::vector<PrivacyRow>& rows, double delta, double variance);

struct VerifyCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Fast built-in property suite.
std::vector<VerifyCheck> run_verify_suite();

}  // namespace dpdopt::cli
