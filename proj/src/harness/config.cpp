#include "dynaboost/harness/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace dynaboost::harness {

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(line > 0 ? source + ":" + std::to_string(line) + ": " + message
                                  : source + ": " + message),
      line_(line) {}

const char* baseline_name(Baseline b) {
  switch (b) {
    case Baseline::kLqr: return "lqr";
    case Baseline::kSingle: return "single";
    case Baseline::kZero: return "zero";
    case Baseline::kOverparam: return "overparam";
  }
  return "?";
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, end);
  // Keep floats recognizable as floats when read back by other tools.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& message) const {
    throw ConfigError(source_, node.Mark().line + 1, message);
  }

  void expect_map(const YAML::Node& node, const std::string& what) const {
    if (!node.IsMap()) fail(node, what + " must be a mapping");
  }

  void only_keys(const YAML::Node& node, const std::set<std::string>& allowed,
                 const std::string& where) const {
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + where);
    }
  }

  template <typename T>
  T scalar(const YAML::Node& node, const std::string& key) const {
    if (!node.IsScalar()) fail(node, "'" + key + "' must be a scalar");
    try {
      return node.as<T>();
    } catch (const YAML::BadConversion&) {
      fail(node, "'" + key + "' has an invalid value '" + node.Scalar() + "'");
    }
  }

  template <typename T>
  void read(const YAML::Node& parent, const std::string& key, T& out) const {
    if (const auto node = parent[key]) out = scalar<T>(node, key);
  }

  template <typename T>
  void read(const YAML::Node& parent, const std::string& key, std::optional<T>& out) const {
    if (const auto node = parent[key]) {
      if (node.IsNull()) {
        out.reset();
      } else {
        out = scalar<T>(node, key);
      }
    }
  }

  void positive(const YAML::Node& parent, const std::string& key, double value) const {
    if (!(value > 0.0) || !std::isfinite(value)) fail(parent[key], "'" + key + "' must be positive");
  }

 private:
  std::string source_;
};

void parse_env(const Reader& r, const YAML::Node& node, EnvConfig& env) {
  r.expect_map(node, "env");
  r.only_keys(node, {"type", "k", "d", "rho", "system_seed"}, "env");
  std::string type = "lds";
  r.read(node, "type", type);
  if (type == "lds") {
    env.kind = EnvConfig::Kind::kLds;
    long k = env.k, d = env.d;
    r.read(node, "k", k);
    r.read(node, "d", d);
    if (k < 1) r.fail(node["k"], "'k' must be >= 1");
    if (d < 1) r.fail(node["d"], "'d' must be >= 1");
    env.k = k;
    env.d = d;
    r.read(node, "rho", env.rho);
    if (!(env.rho > 0.0) || !std::isfinite(env.rho)) r.fail(node["rho"], "'rho' must be positive");
    r.read(node, "system_seed", env.system_seed);
  } else if (type == "pendulum") {
    env.kind = EnvConfig::Kind::kPendulum;
    for (const char* key : {"k", "d", "rho", "system_seed"}) {
      if (node[key]) r.fail(node[key], std::string("'") + key + "' does not apply to the pendulum");
    }
    env.k = 2;
    env.d = 1;
  } else {
    r.fail(node["type"], "unknown env type '" + type + "' (expected lds or pendulum)");
  }
}

DisturbanceSpec parse_disturbance(const Reader& r, const YAML::Node& node) {
  r.expect_map(node, "disturbance");
  std::string type = "iid";
  r.read(node, "type", type);
  if (type == "iid") {
    r.only_keys(node, {"type", "std", "cap"}, "iid disturbance");
    IidGaussian s;
    r.read(node, "std", s.std);
    r.read(node, "cap", s.cap);
    if (!(s.std >= 0.0)) r.fail(node["std"], "'std' must be >= 0");
    if (!(s.cap >= 0.0)) r.fail(node["cap"], "'cap' must be >= 0");
    return s;
  }
  if (type == "random_walk") {
    r.only_keys(node, {"type", "std", "lo", "hi"}, "random_walk disturbance");
    RandomWalk s;
    r.read(node, "std", s.std);
    r.read(node, "lo", s.lo);
    r.read(node, "hi", s.hi);
    if (!(s.std >= 0.0)) r.fail(node["std"], "'std' must be >= 0");
    if (!(s.lo <= 0.0 && 0.0 <= s.hi && s.lo < s.hi)) r.fail(node, "random walk needs lo <= 0 <= hi and lo < hi");
    return s;
  }
  if (type == "sinusoidal") {
    r.only_keys(node, {"type"}, "sinusoidal disturbance");
    return Sinusoidal{};
  }
  r.fail(node["type"], "unknown disturbance type '" + type +
                           "' (expected iid, random_walk or sinusoidal)");
}

void parse_booster(const Reader& r, const YAML::Node& node, BoosterConfig& b) {
  r.expect_map(node, "booster");
  r.only_keys(node, {"variant", "alpha", "beta"}, "booster");
  std::string variant = variant_name(b.variant);
  r.read(node, "variant", variant);
  if (variant == "dynaboost1") {
    b.variant = BoostVariant::kDynaBoost1;
  } else if (variant == "dynaboost2") {
    b.variant = BoostVariant::kDynaBoost2;
  } else {
    r.fail(node["variant"], "unknown booster variant '" + variant +
                                "' (expected dynaboost1 or dynaboost2)");
  }
  r.read(node, "alpha", b.alpha);
  r.read(node, "beta", b.beta);
  if (b.alpha) r.positive(node, "alpha", *b.alpha);
  if (b.beta) r.positive(node, "beta", *b.beta);
}

const char* schedule_name(LearningRate::Kind k) {
  switch (k) {
    case LearningRate::Kind::kConstant: return "constant";
    case LearningRate::Kind::kInverseSqrt: return "inverse_sqrt";
    case LearningRate::Kind::kAdaptive: return "adaptive";
  }
  return "?";
}

void parse_controller(const Reader& r, const YAML::Node& node, ControllerConfig& c) {
  r.expect_map(node, "controller");
  std::string type = "gpc";
  r.read(node, "type", type);
  if (type == "gpc") {
    c.kind = ControllerConfig::Kind::kGpc;
    r.only_keys(node, {"type", "schedule", "lr", "radius_m", "feedback"}, "gpc controller");
    std::string schedule = schedule_name(c.gpc.schedule);
    r.read(node, "schedule", schedule);
    if (schedule == "constant") {
      c.gpc.schedule = LearningRate::Kind::kConstant;
    } else if (schedule == "inverse_sqrt") {
      c.gpc.schedule = LearningRate::Kind::kInverseSqrt;
    } else if (schedule == "adaptive") {
      c.gpc.schedule = LearningRate::Kind::kAdaptive;
    } else {
      r.fail(node["schedule"], "unknown schedule '" + schedule +
                                   "' (expected constant, inverse_sqrt or adaptive)");
    }
    r.read(node, "lr", c.gpc.lr);
    r.positive(node, "lr", c.gpc.lr);
    r.read(node, "radius_m", c.gpc.radius_m);
    r.positive(node, "radius_m", c.gpc.radius_m);
    std::string feedback = c.gpc.feedback == Feedback::kLqr ? "lqr" : "zero";
    r.read(node, "feedback", feedback);
    if (feedback == "zero") {
      c.gpc.feedback = Feedback::kZero;
    } else if (feedback == "lqr") {
      c.gpc.feedback = Feedback::kLqr;
    } else {
      r.fail(node["feedback"], "unknown feedback '" + feedback + "' (expected zero or lqr)");
    }
  } else if (type == "rnn") {
    c.kind = ControllerConfig::Kind::kRnn;
    r.only_keys(node, {"type", "cell", "hidden", "lr", "clip_norm", "init_scale", "last_slot_only"},
                "rnn controller");
    std::string cell = "elman";
    r.read(node, "cell", cell);
    if (cell != "elman") r.fail(node["cell"], "unsupported cell '" + cell + "' (only elman is available)");
    r.read(node, "hidden", c.rnn.hidden);
    if (c.rnn.hidden < 1) r.fail(node["hidden"], "'hidden' must be >= 1");
    r.read(node, "lr", c.rnn.lr);
    r.positive(node, "lr", c.rnn.lr);
    r.read(node, "clip_norm", c.rnn.clip_norm);
    r.positive(node, "clip_norm", c.rnn.clip_norm);
    r.read(node, "init_scale", c.rnn.init_scale);
    if (!(c.rnn.init_scale >= 0.0)) r.fail(node["init_scale"], "'init_scale' must be >= 0");
    r.read(node, "last_slot_only", c.rnn.last_slot_only);
  } else {
    r.fail(node["type"], "unknown controller type '" + type + "' (expected gpc or rnn)");
  }
}

std::vector<Baseline> parse_baselines(const Reader& r, const YAML::Node& node) {
  if (!node.IsSequence()) r.fail(node, "'baselines' must be a list");
  std::vector<Baseline> out;
  for (const auto& item : node) {
    const auto name = r.scalar<std::string>(item, "baselines");
    Baseline b;
    if (name == "lqr") {
      b = Baseline::kLqr;
    } else if (name == "single") {
      b = Baseline::kSingle;
    } else if (name == "zero") {
      b = Baseline::kZero;
    } else if (name == "overparam") {
      b = Baseline::kOverparam;
    } else {
      r.fail(item, "unknown baseline '" + name + "' (expected lqr, single, zero or overparam)");
    }
    for (const auto seen : out) {
      if (seen == b) r.fail(item, "duplicate baseline '" + name + "'");
    }
    out.push_back(b);
  }
  return out;
}

}  // namespace

void validate(const ExperimentConfig& c, const std::string& source) {
  auto bad = [&](const std::string& m) { throw ConfigError(source, 0, m); };
  if (c.H < 1) bad("H must be >= 1");
  if (c.T < c.H) bad("T must be >= H");
  if (c.N < 1) bad("N must be >= 1");
  if (c.runs < 1) bad("runs must be >= 1");
  if (!(c.action_radius > 0.0)) bad("action_radius must be positive");
  if (c.name.empty() || c.name.find_first_of(",\\\n\r\"") != std::string::npos) {
    bad("name must be non-empty and free of commas, quotes and newlines");
  }
  const bool rnn = c.controller.kind == ControllerConfig::Kind::kRnn;
  for (const auto b : c.baselines) {
    if (b == Baseline::kOverparam && !rnn) bad("the overparam baseline needs an rnn controller");
  }
  if (c.output.empty() || c.output.find_first_of("\"\\\n\r") != std::string::npos) {
    bad("output must be non-empty and free of quotes, backslashes and newlines");
  }
}

ExperimentConfig parse_config(std::string_view text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source, e.mark.line + 1, e.msg);
  }
  Reader r(source);
  ExperimentConfig c;
  if (root.IsNull()) return (validate(c, source), c);
  r.expect_map(root, "the document");
  r.only_keys(root, {"name", "env", "disturbance", "T", "H", "N", "booster", "action_radius",
                     "controller", "baselines", "runs", "seed", "output"},
              "the document");
  r.read(root, "name", c.name);
  if (const auto n = root["env"]) parse_env(r, n, c.env);
  if (const auto n = root["disturbance"]) c.disturbance = parse_disturbance(r, n);
  r.read(root, "T", c.T);
  r.read(root, "H", c.H);
  r.read(root, "N", c.N);
  if (const auto n = root["booster"]) parse_booster(r, n, c.booster);
  r.read(root, "action_radius", c.action_radius);
  if (const auto n = root["controller"]) parse_controller(r, n, c.controller);
  if (const auto n = root["baselines"]) c.baselines = parse_baselines(r, n);
  r.read(root, "runs", c.runs);
  r.read(root, "seed", c.seed);
  r.read(root, "output", c.output);

  // Report range errors against the line of the offending key when there is one.
  auto at = [&](const char* key, bool ok, const std::string& m) {
    if (!ok) throw ConfigError(source, root[key] ? root[key].Mark().line + 1 : 0, m);
  };
  at("H", c.H >= 1, "H must be >= 1");
  at("T", c.T >= c.H, "T must be >= H");
  at("N", c.N >= 1, "N must be >= 1");
  at("runs", c.runs >= 1, "runs must be >= 1");
  at("action_radius", c.action_radius > 0.0 && std::isfinite(c.action_radius),
     "action_radius must be positive");
  validate(c, source);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot read config file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string emit_config(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "name: \"" << c.name << "\"\n";
  o << "env:\n";
  if (c.env.kind == EnvConfig::Kind::kLds) {
    o << "  type: lds\n  k: " << c.env.k << "\n  d: " << c.env.d << "\n  rho: " << format_double(c.env.rho)
      << "\n";
    if (c.env.system_seed) o << "  system_seed: " << *c.env.system_seed << "\n";
  } else {
    o << "  type: pendulum\n";
  }
  o << "disturbance:\n";
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, IidGaussian>) {
          o << "  type: iid\n  std: " << format_double(s.std) << "\n  cap: " << format_double(s.cap)
            << "\n";
        } else if constexpr (std::is_same_v<S, RandomWalk>) {
          o << "  type: random_walk\n  std: " << format_double(s.std) << "\n  lo: "
            << format_double(s.lo) << "\n  hi: " << format_double(s.hi) << "\n";
        } else {
          o << "  type: sinusoidal\n";
        }
      },
      c.disturbance);
  o << "T: " << c.T << "\nH: " << c.H << "\nN: " << c.N << "\n";
  o << "booster:\n  variant: " << variant_name(c.booster.variant) << "\n";
  if (c.booster.alpha) o << "  alpha: " << format_double(*c.booster.alpha) << "\n";
  if (c.booster.beta) o << "  beta: " << format_double(*c.booster.beta) << "\n";
  o << "action_radius: " << format_double(c.action_radius) << "\n";
  o << "controller:\n";
  if (c.controller.kind == ControllerConfig::Kind::kGpc) {
    const auto& g = c.controller.gpc;
    o << "  type: gpc\n  schedule: " << schedule_name(g.schedule) << "\n  lr: " << format_double(g.lr)
      << "\n  radius_m: " << format_double(g.radius_m)
      << "\n  feedback: " << (g.feedback == Feedback::kLqr ? "lqr" : "zero") << "\n";
  } else {
    const auto& n = c.controller.rnn;
    o << "  type: rnn\n  cell: elman\n  hidden: " << n.hidden << "\n  lr: " << format_double(n.lr)
      << "\n  clip_norm: " << format_double(n.clip_norm)
      << "\n  init_scale: " << format_double(n.init_scale)
      << "\n  last_slot_only: " << (n.last_slot_only ? "true" : "false") << "\n";
  }
  o << "baselines: [";
  for (std::size_t i = 0; i < c.baselines.size(); ++i) {
    o << (i ? ", " : "") << baseline_name(c.baselines[i]);
  }
  o << "]\n";
  o << "runs: " << c.runs << "\nseed: " << c.seed << "\noutput: \"" << c.output << "\"\n";
  return o.str();
}

}  // namespace dynaboost::harness
