#include "dpdopt/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>

#include "dpdopt/error.hpp"
#include "json.hpp"

namespace dpdopt::config {

using nlohmann::json;

namespace {

[[noreturn]] void fail(std::string_view source, const std::string& path, const std::string& what) {
  throw Error(ErrorCode::kInvalidConfig,
              fmt::format("{}: {}: {}", source, path.empty() ? "/" : path, what));
}

std::string type_of(const json& j) { return j.type_name(); }

// Object reader that records consumed keys and rejects the rest.
class Reader {
 public:
  Reader(const json& j, std::string path, std::string_view source)
      : j_(j), path_(std::move(path)), source_(source) {
    if (!j_.is_object()) fail(source_, path_, "expected an object, found " + type_of(j_));
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  std::string child(const std::string& key) const { return path_ + "/" + key; }
  std::string_view source() const { return source_; }

  const json& at(const std::string& key) {
    if (!j_.contains(key)) fail(source_, child(key), "missing required key");
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number()) fail(source_, child(key), "expected a number, found " + type_of(v));
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  std::uint64_t unsigned_int(const std::string& key) {
    const json& v = at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
      return static_cast<std::uint64_t>(v.get<std::int64_t>());
    fail(source_, child(key), "expected a non-negative integer, found " + v.dump());
  }
  std::uint64_t unsigned_int(const std::string& key, std::uint64_t fallback) {
    return has(key) ? unsigned_int(key) : fallback;
  }

  std::string string(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) fail(source_, child(key), "expected a string, found " + type_of(v));
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : fallback;
  }

  std::vector<double> vector(const std::string& key) { return as_vector(at(key), child(key)); }

  std::vector<std::vector<double>> matrix(const std::string& key) {
    const json& v = at(key);
    if (!v.is_array()) fail(source_, child(key), "expected an array of arrays");
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < v.size(); ++i)
      rows.push_back(as_vector(v[i], fmt::format("{}/{}", child(key), i)));
    return rows;
  }

  std::vector<double> as_vector(const json& v, const std::string& path) const {
    if (!v.is_array()) fail(source_, path, "expected an array of numbers, found " + type_of(v));
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number())
        fail(source_, fmt::format("{}/{}", path, i), "expected a number, found " + type_of(v[i]));
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) fail(source_, child(item.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::string_view source_;
  std::set<std::string> seen_;
};

json parse_text(std::string_view text, std::string_view source) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // Convert the byte offset into line:column.
    const std::size_t byte = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < byte; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    const std::size_t start = text.rfind('\n', byte == 0 ? 0 : byte - 1);
    const std::size_t from = start == std::string_view::npos ? 0 : start + 1;
    const std::size_t end = text.find('\n', from);
    const std::string context(text.substr(from, end == std::string_view::npos ? text.npos : end - from));
    throw Error(ErrorCode::kInvalidConfig,
                fmt::format("{}:{}:{}: JSON syntax error\n  {}\n  {}^", source, line, col, context,
                            std::string(col > 0 ? col - 1 : 0, ' ')));
  }
}

// --- schedule --------------------------------------------------------------

StepsizeSchedule read_schedule(Reader r) {
  const std::string kind = r.string("kind");
  StepsizeSchedule s;
  if (kind == "constant") {
    s = StepsizeSchedule::constant(r.number("lambda0"));
  } else if (kind == "harmonic") {
    s = StepsizeSchedule::harmonic(r.number("scale"));
  } else if (kind == "piecewise_paper") {
    s = StepsizeSchedule::piecewise(r.number("lambda0"), r.unsigned_int("switch_k"),
                                    r.number("scale"));
  } else {
    fail(r.source(), r.child("kind"),
         fmt::format("unknown schedule '{}' (constant | harmonic | piecewise_paper)", kind));
  }
  r.finish();
  return s;
}

json write_schedule(const StepsizeSchedule& s) {
  json j;
  j["kind"] = std::string(schedule_kind_name(s.kind));
  switch (s.kind) {
    case ScheduleKind::kConstant: j["lambda0"] = s.lambda0; break;
    case ScheduleKind::kHarmonic: j["scale"] = s.scale; break;
    case ScheduleKind::kPiecewisePaper:
      j["lambda0"] = s.lambda0;
      j["switch_k"] = s.switch_k;
      j["scale"] = s.scale;
      break;
  }
  return j;
}

// --- problem / topology ----------------------------------------------------

ProblemConfig read_problem(Reader r) {
  ProblemConfig c;
  c.name = r.string("name");
  if (c.name == "ica") {
    c.d = r.unsigned_int("d", c.d);
    c.agents = r.unsigned_int("agents", c.agents);
    c.samples_per_agent = r.unsigned_int("samples_per_agent", c.samples_per_agent);
    c.data_seed = r.unsigned_int("seed", c.data_seed);
  } else if (c.name == "custom_quadratic") {
    c.diagonal = r.vector("diagonal");
    c.centers = r.matrix("centers");
  } else if (c.name != "estimation_paper") {
    fail(r.source(), r.child("name"),
         fmt::format("unknown problem '{}' (estimation_paper | ica | custom_quadratic)", c.name));
  }
  r.finish();
  return c;
}

json write_problem(const ProblemConfig& c) {
  json j;
  j["name"] = c.name;
  if (c.name == "ica") {
    j["d"] = c.d;
    j["agents"] = c.agents;
    j["samples_per_agent"] = c.samples_per_agent;
    j["seed"] = c.data_seed;
  } else if (c.name == "custom_quadratic") {
    j["diagonal"] = c.diagonal;
    j["centers"] = c.centers;
  }
  return j;
}

TopologyConfig read_topology(Reader r) {
  TopologyConfig c;
  const int forms = r.has("builtin") + r.has("edges") + r.has("matrix");
  if (forms != 1)
    fail(r.source(), r.child(""), "exactly one of builtin, edges, matrix is required");
  if (r.has("builtin")) {
    c.kind = "builtin";
    c.builtin = r.string("builtin");
  } else if (r.has("edges")) {
    c.kind = "edges";
    c.builtin.clear();
    const json& e = r.at("edges");
    if (!e.is_array()) fail(r.source(), r.child("edges"), "expected an array of [i, j] pairs");
    for (std::size_t k = 0; k < e.size(); ++k) {
      const std::string path = fmt::format("{}/{}", r.child("edges"), k);
      if (!e[k].is_array() || e[k].size() != 2 || !e[k][0].is_number_unsigned() ||
          !e[k][1].is_number_unsigned())
        fail(r.source(), path, "expected a pair of non-negative integers");
      c.edges.emplace_back(e[k][0].get<std::size_t>(), e[k][1].get<std::size_t>());
    }
  } else {
    c.kind = "matrix";
    c.builtin.clear();
    c.matrix = r.matrix("matrix");
  }
  r.finish();
  return c;
}

json write_topology(const TopologyConfig& c) {
  json j;
  if (c.kind == "builtin") {
    j["builtin"] = c.builtin;
  } else if (c.kind == "edges") {
    j["edges"] = json::array();
    for (auto [a, b] : c.edges) j["edges"].push_back({a, b});
  } else {
    j["matrix"] = c.matrix;
  }
  return j;
}

// --- run -------------------------------------------------------------------

RunConfig read_run(Reader r) {
  RunConfig c;
  // Absent sections keep the RunConfig defaults.
  if (r.has("problem"))
    c.problem = read_problem(Reader(r.at("problem"), r.child("problem"), r.source()));
  if (r.has("topology"))
    c.topology = read_topology(Reader(r.at("topology"), r.child("topology"), r.source()));
  if (r.has("schedule"))
    c.schedule = read_schedule(Reader(r.at("schedule"), r.child("schedule"), r.source()));
  if (r.has("noise")) {
    Reader noise(r.at("noise"), r.child("noise"), r.source());
    c.variance = noise.number("variance");
    if (!(c.variance >= 0.0)) fail(r.source(), noise.child("variance"), "must be >= 0");
    noise.finish();
  }
  c.iterations = r.unsigned_int("iterations", c.iterations);
  if (c.iterations < 1) fail(r.source(), r.child("iterations"), "must be >= 1");
  if (r.has("init")) {
    Reader init(r.at("init"), r.child("init"), r.source());
    const std::string mode = init.string("mode");
    if (mode == "random_box") {
      c.init = InitKind::kRandomBox;
    } else if (mode == "at_saddle") {
      c.init = InitKind::kAtSaddle;
    } else if (mode == "explicit") {
      c.init = InitKind::kExplicit;
      c.init_points = init.matrix("points");
      if (c.init_points.empty()) fail(r.source(), init.child("points"), "needs at least one point");
    } else {
      fail(r.source(), init.child("mode"),
           fmt::format("unknown init mode '{}' (random_box | explicit | at_saddle)", mode));
    }
    init.finish();
  }
  c.seed = r.unsigned_int("seed", c.seed);
  c.record_every = r.unsigned_int("record_every", 1);
  if (c.record_every < 1) fail(r.source(), r.child("record_every"), "must be >= 1");
  const std::string algorithm = r.string("algorithm", "private");
  if (algorithm == "private") {
    c.algorithm = Algorithm::kPrivate;
  } else if (algorithm == "conventional_dgd") {
    c.algorithm = Algorithm::kConventional;
  } else {
    fail(r.source(), r.child("algorithm"),
         fmt::format("unknown algorithm '{}' (private | conventional_dgd)", algorithm));
  }
  if (r.has("output")) {
    Reader out(r.at("output"), r.child("output"), r.source());
    c.output.trace = out.string("trace", c.output.trace);
    c.output.summary = out.string("summary", c.output.summary);
    out.finish();
  }
  r.finish();
  return c;
}

json write_run(const RunConfig& c) {
  json j;
  j["problem"] = write_problem(c.problem);
  j["topology"] = write_topology(c.topology);
  j["schedule"] = write_schedule(c.schedule);
  j["noise"] = {{"variance", c.variance}};
  j["iterations"] = c.iterations;
  json init;
  init["mode"] = std::string(init_kind_name(c.init));
  if (c.init == InitKind::kExplicit) init["points"] = c.init_points;
  j["init"] = init;
  j["seed"] = c.seed;
  j["record_every"] = c.record_every;
  j["algorithm"] = std::string(algorithm_name(c.algorithm));
  j["output"] = {{"trace", c.output.trace}, {"summary", c.output.summary}};
  return j;
}

}  // namespace

RunConfig parse_run_config(std::string_view text, std::string_view source) {
  const json j = parse_text(text, source);
  return read_run(Reader(j, "", source));
}

SweepConfig parse_sweep_config(std::string_view text, std::string_view source) {
  const json j = parse_text(text, source);
  Reader r(j, "", source);
  SweepConfig c;
  if (r.has("base")) c.base = read_run(Reader(r.at("base"), "/base", source));
  if (r.has("variances")) {
    c.variances = r.vector("variances");
    if (c.variances.empty()) fail(source, "/variances", "needs at least one value");
    for (double v : c.variances)
      if (!(v >= 0.0)) fail(source, "/variances", "values must be >= 0");
  }
  c.runs_per_cell = r.unsigned_int("runs_per_cell", c.runs_per_cell);
  if (c.runs_per_cell < 1) fail(source, "/runs_per_cell", "must be >= 1");
  c.output = r.string("output", c.output);
  r.finish();
  return c;
}

CouplingConfig parse_coupling_config(std::string_view text, std::string_view source) {
  const json j = parse_text(text, source);
  Reader r(j, "", source);
  CouplingConfig c;
  if (r.has("base")) c.base = read_run(Reader(r.at("base"), "/base", source));
  c.runs = r.unsigned_int("runs", c.runs);
  if (c.runs < 1) fail(source, "/runs", "must be >= 1");
  c.escape_radius = r.number("escape_radius", c.escape_radius);
  if (!(c.escape_radius > 0.0)) fail(source, "/escape_radius", "must be > 0");
  if (r.has("saddle")) c.saddle = r.vector("saddle");
  c.output = r.string("output", c.output);
  r.finish();
  return c;
}

PrivacyConfig parse_privacy_config(std::string_view text, std::string_view source) {
  const json j = parse_text(text, source);
  Reader r(j, "", source);
  PrivacyConfig c;
  if (r.has("schedule")) c.schedule = read_schedule(Reader(r.at("schedule"), "/schedule", source));
  if (r.has("noise")) {
    Reader noise(r.at("noise"), "/noise", source);
    c.variance = noise.number("variance");
    if (!(c.variance > 0.0)) fail(source, "/noise/variance", "must be > 0");
    noise.finish();
  }
  c.delta = r.number("delta", c.delta);
  if (!(c.delta > 0.0 && c.delta < 1.0)) fail(source, "/delta", "must lie in (0, 1)");
  c.nu = r.number("nu", c.nu);
  if (!(c.nu > 0.0)) fail(source, "/nu", "must be > 0");
  c.n_i = r.number("n_i", c.n_i);
  if (!(c.n_i > 0.0)) fail(source, "/n_i", "must be > 0");
  c.horizon = r.unsigned_int("horizon", c.horizon);
  if (c.horizon < 1) fail(source, "/horizon", "must be >= 1");
  c.output = r.string("output", c.output);
  r.finish();
  return c;
}

std::string serialize(const RunConfig& c) { return write_run(c).dump(2) + "\n"; }

std::string serialize(const SweepConfig& c) {
  json j;
  j["base"] = write_run(c.base);
  j["variances"] = c.variances;
  j["runs_per_cell"] = c.runs_per_cell;
  j["output"] = c.output;
  return j.dump(2) + "\n";
}

std::string serialize(const CouplingConfig& c) {
  json j;
  j["base"] = write_run(c.base);
  j["runs"] = c.runs;
  j["escape_radius"] = c.escape_radius;
  if (c.saddle) j["saddle"] = *c.saddle;
  j["output"] = c.output;
  return j.dump(2) + "\n";
}

std::string serialize(const PrivacyConfig& c) {
  json j;
  j["schedule"] = write_schedule(c.schedule);
  j["noise"] = {{"variance", c.variance}};
  j["delta"] = c.delta;
  j["nu"] = c.nu;
  j["n_i"] = c.n_i;
  j["horizon"] = c.horizon;
  j["output"] = c.output;
  return j.dump(2) + "\n";
}

std::string fingerprint(std::string_view canonical) {
  return fmt::format("{:016x}", std::hash<std::string_view>{}(canonical));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kInvalidConfig, fmt::format("cannot open '{}'", path));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::shared_ptr<const Problem> build_problem(const ProblemConfig& c) {
  if (c.name == "estimation_paper") return make_paper_estimation_problem();
  if (c.name == "ica") return make_ica_problem(c.d, c.agents, c.samples_per_agent, c.data_seed);
  if (c.name == "custom_quadratic") {
    Eigen::VectorXd diag =
        Eigen::Map<const Eigen::VectorXd>(c.diagonal.data(), static_cast<Eigen::Index>(c.diagonal.size()));
    std::vector<Eigen::VectorXd> centers;
    for (const auto& row : c.centers)
      centers.push_back(
          Eigen::Map<const Eigen::VectorXd>(row.data(), static_cast<Eigen::Index>(row.size())));
    return std::make_shared<const QuadraticProblem>(std::move(diag), std::move(centers));
  }
  throw Error(ErrorCode::kInvalidConfig, fmt::format("unknown problem '{}'", c.name));
}

std::shared_ptr<const WeightMatrix> build_weights(const TopologyConfig& c, std::size_t agents) {
  if (c.kind == "builtin")
    return std::make_shared<const WeightMatrix>(
        build_metropolis_weights(builtin_topology(c.builtin, agents)));
  if (c.kind == "edges")
    return std::make_shared<const WeightMatrix>(build_metropolis_weights(Graph(agents, c.edges)));
  return std::make_shared<const WeightMatrix>(validate_weight_matrix(c.matrix));
}

RunSpec build_run_spec(const RunConfig& c, std::uint64_t stream) {
  RunSpec spec;
  spec.problem = build_problem(c.problem);
  spec.weights = build_weights(c.topology, spec.problem->agents());
  spec.schedule = c.schedule;
  spec.noise = NoiseSpec{c.variance, c.seed};
  spec.iterations = c.iterations;
  spec.init = InitSpec{c.init, c.init_points};
  spec.record_every = c.record_every;
  spec.algorithm = c.algorithm;
  spec.stream = stream;
  return spec;
}

}  // namespace dpdopt::config
