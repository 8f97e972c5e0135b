#include "dpdopt/commands.hpp"

#include <fmt/format.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>

#include "dpdopt/config.hpp"
#include "dpdopt/error.hpp"
#include "dpdopt/parallel.hpp"
#include "json.hpp"

namespace dpdopt::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json metrics_json(const TraceRow& row) {
  return {{"k", row.k},
          {"consensus_error", row.consensus_error},
          {"opt_error_mean", row.opt_error_mean},
          {"opt_error_max", row.opt_error_max},
          {"grad_norm_mean", row.grad_norm_mean}};
}

json state_json(const AgentState& s) {
  json rows = json::array();
  for (std::size_t i = 0; i < s.agents; ++i) {
    const auto r = s.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return rows;
}

void apply_overrides(config::RunConfig& c, const Options& opts) {
  if (opts.seed) c.seed = *opts.seed;
  if (opts.record_every) {
    if (*opts.record_every < 1)
      throw Error(ErrorCode::kInvalidConfig, "--record-every must be >= 1");
    c.record_every = *opts.record_every;
  }
}

}  // namespace

std::string format_number(double v) { return fmt::format("{:.17g}", v); }

int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::kNonFiniteState ? kExitDivergence : kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

fs::path resolve_output(const std::string& path, const Options& opts) {
  fs::path p(path);
  if (p.is_relative()) {
    fs::path base = ".";
    if (opts.out_dir) {
      base = *opts.out_dir;
    } else if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') {
      base = env;
    }
    p = base / p;
  }
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kInvalidConfig, fmt::format("cannot write '{}'", tmp.string()));
    out << contents;
    if (!out) throw Error(ErrorCode::kInvalidConfig, fmt::format("write failed for '{}'", tmp.string()));
  }
  fs::rename(tmp, path);
}

std::string trace_csv(const RunTrace& trace) {
  std::string out = "k,lambda,consensus_error,opt_error_mean,opt_error_max,noise_norm\n";
  for (const auto& r : trace.rows)
    out += fmt::format("{},{},{},{},{},{}\n", r.k, format_number(r.lambda),
                       format_number(r.consensus_error), format_number(r.opt_error_mean),
                       format_number(r.opt_error_max), format_number(r.noise_norm));
  return out;
}

SweepCell summarize_cell(double variance, const std::vector<double>& final_errors) {
  SweepCell cell;
  cell.variance = variance;
  cell.runs = final_errors.size();
  if (final_errors.empty()) return cell;
  double sum = 0.0;
  for (double e : final_errors) sum += e;
  cell.mean_final_error = sum / static_cast<double>(cell.runs);
  if (cell.runs > 1) {
    double sq = 0.0;
    for (double e : final_errors) sq += (e - cell.mean_final_error) * (e - cell.mean_final_error);
    cell.std_final_error = std::sqrt(sq / static_cast<double>(cell.runs - 1));
  }
  return cell;
}

std::string sweep_csv(const std::vector<SweepCell>& cells) {
  std::string out = "sigma,mean_final_error,std_final_error,runs\n";
  for (const auto& c : cells)
    out += fmt::format("{},{},{},{}\n", format_number(c.variance),
                       format_number(c.mean_final_error), format_number(c.std_final_error),
                       c.runs);
  return out;
}

std::string privacy_csv(const std::vector<PrivacyRow>& rows, double delta, double variance) {
  std::string out = "k,lambda,eps_sample,eps_gradient,eps_variable,delta,variance\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{},{},{}\n", r.k, format_number(r.lambda),
                       format_number(r.sample.epsilon), format_number(r.gradient.epsilon),
                       format_number(r.variable.epsilon), format_number(delta),
                       format_number(variance));
  return out;
}

int cmd_run(const Options& opts, std::ostream& out, std::ostream&) {
  auto c = config::parse_run_config(config::read_file(opts.config_path), opts.config_path);
  apply_overrides(c, opts);
  const std::string canonical = config::serialize(c);
  const RunSpec spec = config::build_run_spec(c);
  RunTrace trace = run(spec);
  trace.fingerprint = config::fingerprint(canonical);

  const fs::path trace_path = resolve_output(c.output.trace, opts);
  const fs::path summary_path = resolve_output(c.output.summary, opts);
  write_file_atomic(trace_path, trace_csv(trace));
  json summary;
  summary["config_fingerprint"] = trace.fingerprint;
  summary["seed"] = trace.seed;
  summary["iterations"] = c.iterations;
  summary["algorithm"] = std::string(algorithm_name(c.algorithm));
  summary["final_state"] = state_json(trace.final_state);
  summary["final_metrics"] = metrics_json(trace.rows.back());
  write_file_atomic(summary_path, summary.dump(2) + "\n");
  out << fmt::format("{} rows -> {}\nsummary -> {}\n", trace.rows.size(), trace_path.string(),
                     summary_path.string());
  return kExitOk;
}

int cmd_table1(const Options& opts, std::ostream& out, std::ostream&) {
  auto c = config::parse_sweep_config(config::read_file(opts.config_path), opts.config_path);
  apply_overrides(c.base, opts);
  RunSpec spec = config::build_run_spec(c.base);
  spec.record_every = spec.iterations;

  const std::size_t cells = c.variances.size();
  const std::size_t runs = c.runs_per_cell;
  std::vector<double> finals(cells * runs);
  // Run r of every cell shares stream r, so cells differ only in variance.
  parallel_for(cells * runs, opts.jobs, [&](std::size_t job) {
    RunSpec local = spec;
    local.noise.variance = c.variances[job / runs];
    local.stream = job % runs;
    finals[job] = run(local).rows.back().opt_error_mean;
  });

  std::vector<SweepCell> rows;
  for (std::size_t cell = 0; cell < cells; ++cell)
    rows.push_back(summarize_cell(
        c.variances[cell], std::vector<double>(finals.begin() + static_cast<std::ptrdiff_t>(cell * runs),
                                               finals.begin() + static_cast<std::ptrdiff_t>((cell + 1) * runs))));
  const fs::path path = resolve_output(c.output, opts);
  write_file_atomic(path, sweep_csv(rows));
  for (const auto& r : rows)
    out << fmt::format("variance {:<6} mean {:.6f} std {:.6f} runs {}\n", r.variance,
                       r.mean_final_error, r.std_final_error, r.runs);
  out << "sweep -> " << path.string() << "\n";
  return kExitOk;
}

int cmd_coupling(const Options& opts, std::ostream& out, std::ostream&) {
  auto c = config::parse_coupling_config(config::read_file(opts.config_path), opts.config_path);
  apply_overrides(c.base, opts);
  const std::string canonical = config::serialize(c);
  const RunSpec spec = config::build_run_spec(c.base);
  const Problem& p = *spec.problem;

  Eigen::VectorXd saddle;
  if (c.saddle) {
    if (c.saddle->size() != p.dim())
      throw Error(ErrorCode::kDimensionMismatch,
                  fmt::format("saddle has {} coordinates, problem dimension is {}",
                              c.saddle->size(), p.dim()));
    saddle = Eigen::Map<const Eigen::VectorXd>(c.saddle->data(),
                                               static_cast<Eigen::Index>(c.saddle->size()));
  } else if (auto known = p.reference_saddle()) {
    saddle = *known;
  } else {
    throw Error(ErrorCode::kInvalidConfig,
                fmt::format("problem '{}' has no known saddle; set \"saddle\"", p.name()));
  }

  CouplingOptions options;
  options.schedule = spec.schedule;
  options.variance = spec.noise.variance;
  options.runs = c.runs;
  options.horizon = spec.iterations;
  options.escape_radius = c.escape_radius;
  options.seed = spec.noise.seed;
  options.jobs = opts.jobs;
  const CouplingResult result = run_coupling_experiment(p, *spec.weights, saddle, options);

  json runs = json::array();
  for (const auto& r : result.runs) {
    json item;
    item["escape_iteration"] = r.escape_iteration ? json(*r.escape_iteration) : json(nullptr);
    item["final_distance_primary"] = r.final_distance_primary;
    item["final_distance_mirrored"] = r.final_distance_mirrored;
    runs.push_back(item);
  }
  json summary;
  summary["config_fingerprint"] = config::fingerprint(canonical);
  summary["seed"] = spec.noise.seed;
  summary["escape_count"] = result.escape_count;
  summary["total_runs"] = result.total_runs;
  summary["escape_radius"] = result.escape_radius;
  summary["horizon"] = options.horizon;
  summary["variance"] = options.variance;
  summary["saddle"] = std::vector<double>(result.saddle.data(),
                                          result.saddle.data() + result.saddle.size());
  summary["e1"] = std::vector<double>(result.e1.data(), result.e1.data() + result.e1.size());
  summary["min_eigenvalue"] = result.min_eigenvalue;
  summary["runs"] = runs;

  const fs::path path = resolve_output(c.output, opts);
  write_file_atomic(path, summary.dump(2) + "\n");
  out << fmt::format("escaped {}/{} (radius {}) -> {}\n", result.escape_count, result.total_runs,
                     result.escape_radius, path.string());
  return kExitOk;
}

int cmd_privacy_report(const Options& opts, std::ostream& out, std::ostream& err) {
  const auto c =
      config::parse_privacy_config(config::read_file(opts.config_path), opts.config_path);
  const auto rows = per_iteration_report(c.schedule, c.variance, c.nu, c.n_i, c.delta, c.horizon);
  std::size_t flagged = 0;
  for (const auto& r : rows)
    if (r.sample.out_of_range || r.gradient.out_of_range || r.variable.out_of_range) ++flagged;
  if (flagged > 0)
    err << fmt::format(
        "warning: {} of {} rows have epsilon >= 1, outside the range of the Gaussian-mechanism "
        "bound\n",
        flagged, rows.size());
  const fs::path path = resolve_output(c.output, opts);
  write_file_atomic(path, privacy_csv(rows, c.delta, c.variance));
  out << fmt::format("{} rows -> {} (per-iteration budgets; no composition)\n", rows.size(),
                     path.string());
  return kExitOk;
}

int cmd_verify(std::ostream& out, std::ostream& err) {
  const auto checks = run_verify_suite();
  std::size_t width = 0;
  for (const auto& c : checks) width = std::max(width, c.name.size());
  const VerifyCheck* first_failure = nullptr;
  for (const auto& c : checks) {
    out << fmt::format("{:<{}}  {}  {}\n", c.name, width, c.passed ? "PASS" : "FAIL", c.detail);
    if (!c.passed && first_failure == nullptr) first_failure = &c;
  }
  if (first_failure != nullptr) {
    err << "verify failed: " << first_failure->name << "\n";
    return kExitConfig;
  }
  return kExitOk;
}

}  // namespace dpdopt::cli
