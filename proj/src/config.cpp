#include "metagfn/config.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <vector>

namespace metagfn {

namespace {

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  const auto a = s.find_first_not_of(ws);
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(ws);
  return s.substr(a, b - a + 1);
}

struct Item {
  std::string section, key, value;
  int line = 0;
};

[[noreturn]] void fail(int line, const std::string& what) {
  throw ConfigParseError("config line " + std::to_string(line) + ": " + what);
}

std::vector<Item> read_items(std::istream& is) {
  static const std::set<std::string> known_sections = {
      "run", "trainer", "loss", "strategy", "metadynamics"};
  std::vector<Item> items;
  std::string section, line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    const auto cut = line.find_first_of("#;");
    if (cut != std::string::npos) line.erase(cut);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(n, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!known_sections.count(section))
        fail(n, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(n, "expected key = value");
    if (section.empty()) fail(n, "key outside any section");
    Item it;
    it.section = section;
    it.key = trim(line.substr(0, eq));
    it.value = trim(line.substr(eq + 1));
    it.line = n;
    if (it.key.empty()) fail(n, "empty key");
    items.push_back(std::move(it));
  }
  return items;
}

double to_double(const Item& it) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(it.value, &pos);
    if (pos != it.value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    fail(it.line, "expected a number for " + it.key + ", got '" + it.value + "'");
  }
}

long to_long(const Item& it) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(it.value, &pos);
    if (pos != it.value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    fail(it.line,
         "expected an integer for " + it.key + ", got '" + it.value + "'");
  }
}

int to_int(const Item& it) { return static_cast<int>(to_long(it)); }

std::uint64_t to_u64(const Item& it) {
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(it.value, &pos);
    if (pos != it.value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    fail(it.line,
         "expected an integer for " + it.key + ", got '" + it.value + "'");
  }
}

EnvKind env_kind_from_name(const std::string& name) {
  if (name == "line") return EnvKind::Line;
  if (name == "grid") return EnvKind::Grid;
  if (name == "torus") return EnvKind::Torus;
  throw std::invalid_argument("unknown environment '" + name +
                              "' (expected one of: line, grid, torus)");
}

RunMode mode_from(const std::string& s) {
  if (s == "train") return RunMode::Train;
  if (s == "sample-am") return RunMode::SampleAm;
  if (s == "eval") return RunMode::Eval;
  throw std::invalid_argument("unknown mode '" + s +
                              "' (expected one of: train, sample-am, eval)");
}

const char* loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::TB: return "tb";
    case LossKind::DB: return "db";
    case LossKind::SubTB: return "subtb";
  }
  return "?";
}

LossKind loss_kind_from(const std::string& s) {
  if (s == "tb") return LossKind::TB;
  if (s == "db") return LossKind::DB;
  if (s == "subtb") return LossKind::SubTB;
  throw std::invalid_argument("unknown loss '" + s +
                              "' (expected one of: tb, db, subtb)");
}

StrategyKind strategy_kind_from(const std::string& s) {
  if (s == "on_policy") return StrategyKind::OnPolicy;
  if (s == "noisy") return StrategyKind::Noisy;
  if (s == "thompson") return StrategyKind::Thompson;
  if (s == "metagfn") return StrategyKind::MetaGfn;
  throw std::invalid_argument(
      "unknown strategy '" + s +
      "' (expected one of: on_policy, noisy, thompson, metagfn)");
}

const char* variant_name(ReplayVariant v) {
  return v == ReplayVariant::AlwaysBackwardSample ? "always_backward_sample"
                                                  : "reuse_initial";
}

ReplayVariant variant_from(const std::string& s) {
  if (s == "always_backward_sample") return ReplayVariant::AlwaysBackwardSample;
  if (s == "reuse_initial") return ReplayVariant::ReuseInitial;
  throw std::invalid_argument(
      "unknown replay variant '" + s +
      "' (expected one of: always_backward_sample, reuse_initial)");
}

void apply(RunConfig& cfg, const Item& it) {
  const std::string& k = it.key;
  if (it.section == "run") {
    if (k == "mode") cfg.mode = mode_from(it.value);
    else if (k == "out_dir") cfg.out_dir = it.value;
    else if (k == "repeats") cfg.repeats = to_int(it);
    else if (k == "seed") cfg.seed = to_u64(it);
    else fail(it.line, "unknown key '" + k + "' in [run]");
  } else if (it.section == "trainer") {
    TrainConfig& t = cfg.train;
    if (k == "env") t.env_name = it.value;  // already applied in the pre-pass
    else if (k == "torus_potential_file") t.torus_potential_file = it.value;
    else if (k == "batch_size") t.batch_size = to_int(it);
    else if (k == "total_batches") t.total_batches = to_long(it);
    else if (k == "lr0") t.lr0 = to_double(it);
    else if (k == "logz_lr0") t.logz_lr0 = to_double(it);
    else if (k == "clip_norm") t.clip_norm = to_double(it);
    else if (k == "eval_every") t.eval_every = to_long(it);
    else if (k == "eval_samples") t.eval_samples = to_int(it);
    else if (k == "checkpoint_every") t.checkpoint_every = to_long(it);
    else fail(it.line, "unknown key '" + k + "' in [trainer]");
  } else if (it.section == "loss") {
    if (k == "kind") cfg.train.loss.kind = loss_kind_from(it.value);
    else if (k == "lambda") cfg.train.loss.lambda = to_double(it);
    else fail(it.line, "unknown key '" + k + "' in [loss]");
  } else if (it.section == "strategy") {
    StrategyConfig& s = cfg.train.strategy;
    if (k == "kind") s.kind = strategy_kind_from(it.value);
    else if (k == "sigma0") s.sigma0 = to_double(it);
    else if (k == "n_heads") s.n_heads = to_int(it);
    else if (k == "include_prob") s.include_prob = to_double(it);
    else if (k == "freq_md") s.freq_md = to_int(it);
    else if (k == "freq_rb") s.freq_rb = to_int(it);
    else if (k == "variant") s.variant = variant_from(it.value);
    else if (k == "backward_noise_sigma0")
      s.backward_noise_sigma0 = to_double(it);
    else fail(it.line, "unknown key '" + k + "' in [strategy]");
  } else {  // metadynamics
    MetadParams& m = *cfg.metad;
    if (k == "dt") m.langevin.dt = to_double(it);
    else if (k == "friction") m.langevin.gamma = to_double(it);
    else if (k == "beta") m.langevin.beta = to_double(it);
    else if (k == "stride") m.stride = to_int(it);
    else if (k == "w") m.bias_height = to_double(it);
    else if (k == "epsilon") m.epsilon = to_double(it);
    else if (k == "sigma") m.kernel_width = to_double(it);
    else if (k == "spacing") m.grid_spacing = to_double(it);
    else if (k == "iterations") cfg.am_iterations = to_long(it);
    else fail(it.line, "unknown key '" + k + "' in [metadynamics]");
  }
}

}  // namespace

const char* run_mode_name(RunMode m) {
  switch (m) {
    case RunMode::Train: return "train";
    case RunMode::SampleAm: return "sample-am";
    case RunMode::Eval: return "eval";
  }
  return "?";
}

void RunConfig::validate() const {
  if (repeats < 1)
    throw std::invalid_argument("config: repeats must be >= 1");
  if (am_iterations < 1)
    throw std::invalid_argument("config: iterations must be >= 1");
  if (out_dir.empty())
    throw std::invalid_argument("config: out_dir must be set");
  train.validate();
  if (metad) {
    const MetadParams& m = *metad;
    if (m.stride < 1)
      throw std::invalid_argument("config: stride must be >= 1");
    if (!(m.bias_height > 0.0) || !(m.epsilon > 0.0) ||
        !(m.kernel_width > 0.0) || !(m.grid_spacing > 0.0))
      throw std::invalid_argument(
          "config: metadynamics parameters must be positive");
    if (!(m.langevin.dt > 0.0) || !(m.langevin.gamma > 0.0) ||
        !(m.langevin.beta > 0.0))
      throw std::invalid_argument(
          "config: langevin parameters must be positive");
  }
}

RunConfig default_run_config(const std::string& env_name,
                             const std::string& torus_potential_file) {
  RunConfig cfg;
  cfg.train.env_name = env_name;
  cfg.train.torus_potential_file = torus_potential_file;
  cfg.train.loss.kind = LossKind::TB;
  cfg.train.strategy.kind = StrategyKind::MetaGfn;
  cfg.metad = MetadParams::defaults_for(env_kind_from_name(env_name));
  return cfg;
}

RunConfig parse_run_config(std::istream& is) {
  const std::vector<Item> items = read_items(is);

  // the environment decides the baked-in defaults, so resolve it first
  std::string env = "line", potential;
  for (const Item& it : items) {
    if (it.section != "trainer") continue;
    if (it.key == "env") env = it.value;
    if (it.key == "torus_potential_file") potential = it.value;
  }
  RunConfig cfg = default_run_config(env, potential);
  for (const Item& it : items) apply(cfg, it);
  return cfg;
}

void write_run_config(std::ostream& os, const RunConfig& cfg) {
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << std::setprecision(17);

  os << "[run]\n";
  os << "mode = " << run_mode_name(cfg.mode) << '\n';
  os << "out_dir = " << cfg.out_dir << '\n';
  os << "repeats = " << cfg.repeats << '\n';
  os << "seed = " << cfg.seed << '\n';

  const TrainConfig& t = cfg.train;
  os << "\n[trainer]\n";
  os << "env = " << t.env_name << '\n';
  if (!t.torus_potential_file.empty())
    os << "torus_potential_file = " << t.torus_potential_file << '\n';
  os << "batch_size = " << t.batch_size << '\n';
  os << "total_batches = " << t.total_batches << '\n';
  os << "lr0 = " << t.lr0 << '\n';
  os << "logz_lr0 = " << t.logz_lr0 << '\n';
  os << "clip_norm = " << t.clip_norm << '\n';
  os << "eval_every = " << t.eval_every << '\n';
  os << "eval_samples = " << t.eval_samples << '\n';
  os << "checkpoint_every = " << t.checkpoint_every << '\n';

  os << "\n[loss]\n";
  os << "kind = " << loss_kind_name(t.loss.kind) << '\n';
  os << "lambda = " << t.loss.lambda << '\n';

  const StrategyConfig& s = t.strategy;
  os << "\n[strategy]\n";
  os << "kind = " << strategy_name(s.kind) << '\n';
  os << "sigma0 = " << s.sigma0 << '\n';
  os << "n_heads = " << s.n_heads << '\n';
  os << "include_prob = " << s.include_prob << '\n';
  os << "freq_md = " << s.freq_md << '\n';
  os << "freq_rb = " << s.freq_rb << '\n';
  os << "variant = " << variant_name(s.variant) << '\n';
  if (s.backward_noise_sigma0)
    os << "backward_noise_sigma0 = " << *s.backward_noise_sigma0 << '\n';

  const MetadParams m =
      cfg.metad ? *cfg.metad
                : MetadParams::defaults_for(env_kind_from_name(t.env_name));
  os << "\n[metadynamics]\n";
  os << "dt = " << m.langevin.dt << '\n';
  os << "friction = " << m.langevin.gamma << '\n';
  os << "beta = " << m.langevin.beta << '\n';
  os << "stride = " << m.stride << '\n';
  os << "w = " << m.bias_height << '\n';
  os << "epsilon = " << m.epsilon << '\n';
  os << "sigma = " << m.kernel_width << '\n';
  os << "spacing = " << m.grid_spacing << '\n';
  os << "iterations = " << cfg.am_iterations << '\n';

  os.flags(flags);
  os.precision(precision);
}

}  // namespace metagfn
