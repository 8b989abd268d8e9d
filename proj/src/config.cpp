#include "msopt/config.hpp"

#include "msopt/io.hpp"
#include "msopt/numerics.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace msopt {
namespace {

const std::vector<std::string> kAll{"generate-data", "train-score", "optimize", "validate", "sample"};

KeySpec spec(std::string section, std::string key, ValueType type, std::string def, std::string help,
             std::vector<std::string> commands, std::vector<std::string> required_for = {},
             std::vector<std::string> choices = {}) {
  return KeySpec{std::move(section), std::move(key), type,          std::move(def), std::move(help),
                 std::move(commands), std::move(choices), std::move(required_for)};
}

std::vector<KeySpec> build_schema() {
  using V = ValueType;
  const std::vector<std::string> G{"generate-data"}, T{"train-score"}, O{"optimize"}, Va{"validate"}, S{"sample"};
  auto cat = [](std::initializer_list<std::vector<std::string>> parts) {
    std::vector<std::string> out;
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
  };
  return {
      spec("experiment", "kind", V::choice, "", "experiment kind; defaults to the subcommand and must match it", kAll,
           {}, kAll),
      spec("experiment", "seed", V::integer, "0", "64-bit seed feeding every named random stream", kAll),
      spec("experiment", "name", V::text, "experiment", "label echoed into artifacts", kAll),

      spec("oracle", "kind", V::choice, "", "score oracle", cat({O, Va}), cat({O, Va}),
           {"empirical", "quadrature", "exact", "mlp"}),
      spec("oracle", "sigma", V::real, "0.05", "noise level of the oracle", O),
      spec("oracle", "nodes", V::integer, "4096", "quadrature nodes on the circle (>= 64)", cat({O, Va})),
      spec("oracle", "dataset", V::path, "",
           "dataset: a CSV with one point per row or a trajectory dataset directory", cat({T, O, S}), T),
      spec("oracle", "samples", V::integer, "4000",
           "uniform manifold samples forming the empirical dataset when no dataset is given", cat({O, Va})),
      spec("oracle", "network", V::path, "", "trained network file", cat({O, S}), S),
      spec("oracle", "hidden", V::integer_list, "128,128,128", "hidden layer widths", T),
      spec("oracle", "epochs", V::integer, "1000", "training epochs of ceil(N / batch) steps", T),
      spec("oracle", "batch", V::integer, "256", "minibatch size", T),
      spec("oracle", "t_max", V::real, "3", "largest diffusion time T", cat({T, S})),
      spec("oracle", "t_min", V::real, "0.0001", "early-stopping time epsilon", cat({T, S})),
      spec("oracle", "lr_hi", V::real, "0.001", "initial learning rate of the cosine schedule", T),
      spec("oracle", "lr_lo", V::real, "5e-05", "final learning rate of the cosine schedule", T),

      spec("manifold", "kind", V::choice, "", "manifold or dynamical system", cat({G, O, Va}), cat({G, O, Va}),
           {"circle", "sphere", "orthogonal", "unicycle", "double_pendulum"}),
      spec("manifold", "radius", V::real, "1", "circle/sphere radius", cat({G, O, Va})),
      spec("manifold", "dim", V::integer, "3", "sphere ambient dimension", cat({G, O, Va})),
      spec("manifold", "n", V::integer, "5", "matrix size of O(n)", cat({G, O, Va})),
      spec("manifold", "horizon", V::integer, "20", "trajectory horizon N_h", cat({G, O})),
      spec("manifold", "dt", V::real, "0", "discretization step; 0 selects the system default", cat({G, O})),
      spec("manifold", "normalize", V::boolean, "true", "standardize trajectory coordinates", cat({T, O, S})),

      spec("objective", "kind", V::choice, "", "objective function", O, O, {"brockett", "tracking", "linear", "zero"}),
      spec("objective", "coefficients", V::real_list, "", "linear objective coefficients (default e_1)", O),
      spec("objective", "reference", V::choice, "circle_arc", "tracking reference shape", O, {},
           {"sinusoid", "circle_arc", "figure_eight"}),
      spec("objective", "reference_file", V::path, "", "tracking reference CSV, overrides the shape", O),

      spec("algorithm", "kind", V::choice, "", "optimize: drgd, dlf, landing, rgd; validate: rate_sweep, landing_check",
           cat({O, Va}), cat({O, Va}), {"drgd", "dlf", "landing", "rgd", "rate_sweep", "landing_check"}),
      spec("algorithm", "gamma", V::real, "0.001", "step size", O),
      spec("algorithm", "eta", V::real, "3000", "landing gain", cat({O, Va})),
      spec("algorithm", "t_step", V::real, "0.0001", "Euler step of the landing flow", cat({O, Va})),
      spec("algorithm", "max_steps", V::integer, "1000", "iteration budget", O),
      spec("algorithm", "stop_grad_tol", V::real, "1e-08", "early-stop tolerance", O),
      spec("algorithm", "start", V::choice, "dataset_argmin", "start point", O, {}, {"dataset_argmin", "random"}),
      spec("algorithm", "count", V::integer, "2000", "dataset size (generate-data) or sample count (sample)",
           cat({G, S})),
      spec("algorithm", "steps", V::integer, "1000", "reverse-SDE steps", S),
      spec("algorithm", "offsets", V::real_list, "0.3", "normal offsets of rate-sweep test points", Va),
      spec("algorithm", "sigmas", V::real_list, "0.2,0.1,0.05,0.025,0.0125", "decreasing noise grid", Va),
      spec("algorithm", "points", V::integer, "100", "rate-sweep test points", Va),
      spec("algorithm", "t_end", V::real, "3", "landing-check horizon", Va),
      spec("algorithm", "start_distance", V::real, "0.3", "landing-check start distance", Va),
      spec("algorithm", "slope_min", V::real, "0.7", "--assert: lower slope bound", Va),
      spec("algorithm", "slope_max", V::real, "1.4", "--assert: upper slope bound", Va),
      spec("algorithm", "landing_tol", V::real, "0.05", "--assert: landing relative deviation", Va),
      spec("algorithm", "assert_max_feasibility", V::real, "inf", "--assert: final feasibility bound", O),
      spec("algorithm", "assert_min_gap_closed", V::real, "-inf",
           "--assert: fraction of the gap to the known optimum to close", O),
      spec("algorithm", "assert_max_objective_ratio", V::real, "inf",
           "--assert: final (back-tested) objective over the dataset best", O),
      spec("algorithm", "assert_max_gap_ratio", V::real, "inf", "--assert: back-test gap over |y*|", O),
      spec("algorithm", "assert_radius", V::real, "0.15", "--assert: distance to a data point", S),
      spec("algorithm", "assert_fraction", V::real, "0.9",
           "--assert: fraction of samples within assert_radius", S),

      spec("output", "dir", V::path, "out", "artifact directory", kAll),
  };
}

const KeySpec* find_spec(const std::string& section, const std::string& key) {
  for (const KeySpec& s : config_schema())
    if (s.section == section && s.key == key) return &s;
  return nullptr;
}

bool accepts(const KeySpec& s, const std::string& command) {
  return std::find(s.commands.begin(), s.commands.end(), command) != s.commands.end();
}

bool contains(const std::vector<std::string>& v, const std::string& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

std::string type_name(ValueType t) {
  switch (t) {
    case ValueType::integer: return "integer";
    case ValueType::real: return "real";
    case ValueType::text: return "text";
    case ValueType::choice: return "choice";
    case ValueType::real_list: return "real list";
    case ValueType::integer_list: return "integer list";
    case ValueType::path: return "path";
    case ValueType::boolean: return "boolean";
  }
  return "?";
}

std::int64_t parse_integer(const std::string& s) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw InvalidArgument("not an integer: '" + s + "'");
  return v;
}

// Canonical text of a raw value; throws std::exception with a short reason.
std::string canonical(const KeySpec& spec, const std::string& raw) {
  const std::string v = trim(raw);
  switch (spec.type) {
    case ValueType::integer:
      return std::to_string(parse_integer(v));
    case ValueType::real:
      return format_double(parse_double(v));
    case ValueType::text:
    case ValueType::path:
      return v;
    case ValueType::choice:
      if (v.empty()) return v;
      if (!contains(spec.choices, v)) {
        std::string opts;
        for (const auto& c : spec.choices) opts += (opts.empty() ? "" : ", ") + c;
        throw InvalidArgument("'" + v + "' is not one of " + opts);
      }
      return v;
    case ValueType::real_list:
    case ValueType::integer_list: {
      if (v.empty()) return v;
      std::string out;
      for (const auto& part : split(v, ',')) {
        const std::string item = trim(part);
        const std::string c = spec.type == ValueType::real_list ? format_double(parse_double(item))
                                                                 : std::to_string(parse_integer(item));
        out += (out.empty() ? "" : ",") + c;
      }
      return out;
    }
    case ValueType::boolean:
      if (v == "true" || v == "1" || v == "yes") return "true";
      if (v == "false" || v == "0" || v == "no") return "false";
      throw InvalidArgument("not a boolean: '" + v + "'");
  }
  return v;
}

}  // namespace

const std::vector<std::string>& subcommands() { return kAll; }

const std::vector<KeySpec>& config_schema() {
  static const std::vector<KeySpec> schema = build_schema();
  return schema;
}

std::string schema_help(const std::string& command) {
  std::ostringstream os;
  os << "config keys for '" << command << "':\n";
  std::string section;
  for (const KeySpec& s : config_schema()) {
    if (!accepts(s, command)) continue;
    if (s.section != section) {
      section = s.section;
      os << "  [" << section << "]\n";
    }
    os << "    " << s.key << " (" << type_name(s.type);
    if (!s.choices.empty()) {
      os << ":";
      for (const auto& c : s.choices) os << ' ' << c;
    }
    os << ")";
    if (contains(s.required_for, command)) {
      os << " required";
    } else if (!s.default_value.empty()) {
      os << " default " << s.default_value;
    }
    os << "  " << s.help << '\n';
  }
  return os.str();
}

bool ExperimentConfig::has(const std::string& q) const {
  const auto it = values_.find(q);
  return it != values_.end() && !it->second.empty();
}

std::string ExperimentConfig::text(const std::string& q) const {
  const auto it = values_.find(q);
  if (it == values_.end()) throw ConfigError("config key '" + q + "' is not accepted by " + command_);
  return it->second;
}

double ExperimentConfig::real(const std::string& q) const { return parse_double(text(q)); }

std::int64_t ExperimentConfig::integer(const std::string& q) const { return parse_integer(text(q)); }

std::size_t ExperimentConfig::count(const std::string& q) const {
  const std::int64_t v = integer(q);
  if (v < 0) throw ConfigError("config key '" + q + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

bool ExperimentConfig::boolean(const std::string& q) const { return text(q) == "true"; }

std::vector<double> ExperimentConfig::real_list(const std::string& q) const {
  std::vector<double> out;
  const std::string t = text(q);
  if (t.empty()) return out;
  for (const auto& p : split(t, ',')) out.push_back(parse_double(p));
  return out;
}

std::vector<std::size_t> ExperimentConfig::count_list(const std::string& q) const {
  std::vector<std::size_t> out;
  const std::string t = text(q);
  if (t.empty()) return out;
  for (const auto& p : split(t, ',')) {
    const std::int64_t v = parse_integer(trim(p));
    if (v <= 0) throw ConfigError("config key '" + q + "' needs positive entries");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

void ExperimentConfig::set(const std::string& q, const std::string& raw) {
  const auto dot = q.find('.');
  const KeySpec* s = dot == std::string::npos ? nullptr : find_spec(q.substr(0, dot), q.substr(dot + 1));
  if (!s || !accepts(*s, command_)) throw ConfigError("config key '" + q + "' is not accepted by " + command_);
  try {
    values_[q] = canonical(*s, raw);
  } catch (const std::exception& e) {
    throw ConfigError("bad value for '" + q + "': " + e.what());
  }
}

std::string ExperimentConfig::echo() const {
  std::ostringstream os;
  std::string section;
  for (const KeySpec& s : config_schema()) {
    const auto it = values_.find(s.qualified());
    if (it == values_.end()) continue;
    if (s.section != section) {
      if (!section.empty()) os << '\n';
      section = s.section;
      os << '[' << section << "]\n";
    }
    os << s.key << " = " << it->second << '\n';
  }
  return os.str();
}

ExperimentConfig parse_config(const std::string& text, const std::string& command, const std::string& origin) {
  if (!contains(kAll, command)) throw ConfigError("unknown subcommand '" + command + "'");
  ExperimentConfig cfg;
  cfg.command_ = command;
  std::map<std::string, std::size_t> seen;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) { throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + msg); };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') fail("malformed section header '" + body + "'");
      section = trim(body.substr(1, body.size() - 2));
      static const std::vector<std::string> sections{"experiment", "oracle", "manifold",
                                                     "objective",  "algorithm", "output"};
      if (!contains(sections, section)) fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) fail("expected key = value, got '" + body + "'");
    const std::string key = trim(body.substr(0, eq));
    if (section.empty()) fail("key '" + key + "' appears before any [section]");
    const KeySpec* s = find_spec(section, key);
    if (!s) fail("unknown key '" + key + "' in [" + section + "]");
    if (!accepts(*s, command)) fail("key '" + s->qualified() + "' is not accepted by " + command);
    const auto [it, inserted] = seen.emplace(s->qualified(), line_no);
    if (!inserted) {
      fail("duplicate key '" + s->qualified() + "' (first defined on line " + std::to_string(it->second) +
           ", again on line " + std::to_string(line_no) + ")");
    }
    try {
      cfg.values_[s->qualified()] = canonical(*s, body.substr(eq + 1));
    } catch (const std::exception& e) {
      fail("bad value for '" + s->qualified() + "': " + e.what());
    }
  }

  std::vector<std::string> missing;
  for (const KeySpec& s : config_schema()) {
    if (!accepts(s, command)) continue;
    auto& value = cfg.values_[s.qualified()];
    if (!seen.count(s.qualified())) value = canonical(s, s.default_value);
    if (value.empty() && contains(s.required_for, command)) missing.push_back(s.qualified());
  }
  auto& kind = cfg.values_["experiment.kind"];
  if (kind.empty()) kind = command;
  if (kind != command) {
    throw ConfigError(origin + ": [experiment] kind = " + kind + " does not match subcommand " + command);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ConfigError(origin + ": missing required keys for " + command + ": " + list);
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::string& command) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), command, path.string());
}

}  // namespace msopt
