#include "fomo/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace fomo {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// Thrown by value parsers; rewrapped with key and line.
struct BadValue {
  std::string what;
};

template <typename T>
T parse_number(std::string_view s) {
  T v{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) throw BadValue{"cannot parse '" + std::string(s) + "' as a number"};
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(v)) throw BadValue{"value must be finite"};
  }
  return v;
}

bool parse_bool(std::string_view s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw BadValue{"cannot parse '" + std::string(s) + "' as a boolean"};
}

template <typename T>
std::vector<T> parse_numbers(std::string_view s) {
  std::vector<T> out;
  for (auto item : split_list(s)) out.push_back(parse_number<T>(item));
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::ostringstream os;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) os << ',';
    if constexpr (std::is_floating_point_v<T>) {
      os << fmt(xs[i]);
    } else {
      os << xs[i];
    }
  }
  return os.str();
}

struct Key {
  std::string name;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(const RunConfig&)> check;  // throws BadValue
};

void require(bool ok, const std::string& msg) {
  if (!ok) throw BadValue{msg};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    auto none = [](const RunConfig&) {};
    auto positive_list = [](const auto& xs, const char* what) {
      for (auto x : xs) require(x >= 0, std::string(what) + " entries must be >= 0");
    };

    k.push_back({"data.source", [](RunConfig& c, std::string_view v) { c.data.source = v; },
                 [](const RunConfig& c) { return c.data.source; },
                 [](const RunConfig& c) {
                   require(c.data.source == "blobs" || c.data.source == "spirals" || c.data.source == "idx",
                           "must be blobs, spirals or idx");
                 }});
    k.push_back({"data.n", [](RunConfig& c, std::string_view v) { c.data.n = parse_number<Index>(v); },
                 [](const RunConfig& c) { return std::to_string(c.data.n); },
                 [](const RunConfig& c) { require(c.data.n >= 10, "must be >= 10"); }});
    k.push_back({"data.classes", [](RunConfig& c, std::string_view v) { c.data.classes = parse_number<int>(v); },
                 [](const RunConfig& c) { return std::to_string(c.data.classes); },
                 [](const RunConfig& c) { require(c.data.classes >= 2, "must be >= 2"); }});
    k.push_back({"data.label_noise",
                 [](RunConfig& c, std::string_view v) { c.data.label_noise = parse_number<double>(v); },
                 [](const RunConfig& c) { return fmt(c.data.label_noise); },
                 [](const RunConfig& c) {
                   require(c.data.label_noise >= 0 && c.data.label_noise < 1, "must lie in [0, 1)");
                 }});
    k.push_back({"data.spread", [](RunConfig& c, std::string_view v) { c.data.spread = parse_number<double>(v); },
                 [](const RunConfig& c) { return fmt(c.data.spread); },
                 [](const RunConfig& c) { require(c.data.spread >= 0, "must be >= 0"); }});
    k.push_back({"data.dim", [](RunConfig& c, std::string_view v) { c.data.dim = parse_number<Index>(v); },
                 [](const RunConfig& c) { return std::to_string(c.data.dim); },
                 [](const RunConfig& c) {
                   require(c.data.dim >= 2, "must be >= 2");
                   require(c.data.source != "spirals" || c.data.dim == 2, "spirals are 2-D");
                 }});
    k.push_back({"data.test_n", [](RunConfig& c, std::string_view v) { c.data.test_n = parse_number<Index>(v); },
                 [](const RunConfig& c) { return std::to_string(c.data.test_n); },
                 [](const RunConfig& c) { require(c.data.test_n >= 1, "must be >= 1"); }});
    k.push_back({"data.seed", [](RunConfig& c, std::string_view v) { c.data.seed = parse_number<std::uint64_t>(v); },
                 [](const RunConfig& c) { return std::to_string(c.data.seed); }, none});
    k.push_back({"data.train_images", [](RunConfig& c, std::string_view v) { c.data.train_images = v; },
                 [](const RunConfig& c) { return c.data.train_images; }, none});
    k.push_back({"data.train_labels", [](RunConfig& c, std::string_view v) { c.data.train_labels = v; },
                 [](const RunConfig& c) { return c.data.train_labels; }, none});
    k.push_back({"data.test_images", [](RunConfig& c, std::string_view v) { c.data.test_images = v; },
                 [](const RunConfig& c) { return c.data.test_images; }, none});
    k.push_back({"data.test_labels", [](RunConfig& c, std::string_view v) { c.data.test_labels = v; },
                 [](const RunConfig& c) { return c.data.test_labels; }, none});
    k.push_back({"data.subset", [](RunConfig& c, std::string_view v) { c.data.subset = parse_number<Index>(v); },
                 [](const RunConfig& c) { return std::to_string(c.data.subset); },
                 [](const RunConfig& c) {
                   require(c.data.subset == 0 || c.data.subset >= 10, "must be 0 (all) or >= 10");
                 }});

    k.push_back({"model.hidden",
                 [](RunConfig& c, std::string_view v) {
                   c.hidden = trim(v) == "auto" ? std::vector<Index>{} : parse_numbers<Index>(v);
                 },
                 [](const RunConfig& c) { return c.hidden.empty() ? std::string("auto") : join(c.hidden); },
                 [](const RunConfig& c) {
                   for (auto w : c.hidden) require(w >= 1, "widths must be >= 1");
                 }});

    k.push_back({"train.mode", [](RunConfig& c, std::string_view v) {
                   try {
                     c.train.mode = parse_train_mode(v);
                   } catch (const ConfigError& e) {
                     throw BadValue{e.what()};
                   }
                 },
                 [](const RunConfig& c) { return to_string(c.train.mode); }, none});
    k.push_back({"train.epochs", [](RunConfig& c, std::string_view v) { c.train.epochs = parse_number<int>(v); },
                 [](const RunConfig& c) { return std::to_string(c.train.epochs); },
                 [](const RunConfig& c) { require(c.train.epochs >= 1, "must be >= 1"); }});
    k.push_back({"train.batch_size",
                 [](RunConfig& c, std::string_view v) { c.train.batch_size = parse_number<Index>(v); },
                 [](const RunConfig& c) { return std::to_string(c.train.batch_size); },
                 [](const RunConfig& c) { require(c.train.batch_size >= 1, "must be >= 1"); }});
    k.push_back({"train.lr", [](RunConfig& c, std::string_view v) { c.train.lr = parse_number<double>(v); },
                 [](const RunConfig& c) { return fmt(c.train.lr); },
                 [](const RunConfig& c) { require(c.train.lr >= 0, "must be >= 0"); }});
    k.push_back({"train.lr_decay_epochs",
                 [](RunConfig& c, std::string_view v) { c.train.lr_decay_epochs = parse_numbers<int>(v); },
                 [](const RunConfig& c) { return join(c.train.lr_decay_epochs); },
                 [](const RunConfig& c) {
                   const auto& d = c.train.lr_decay_epochs;
                   for (std::size_t i = 0; i < d.size(); ++i) {
                     require(d[i] >= 1 && d[i] < c.train.epochs, "entries must lie in [1, train.epochs)");
                     require(i == 0 || d[i] > d[i - 1], "must be strictly increasing");
                   }
                 }});
    k.push_back({"train.momentum", [](RunConfig& c, std::string_view v) { c.train.momentum = parse_number<double>(v); },
                 [](const RunConfig& c) { return fmt(c.train.momentum); },
                 [](const RunConfig& c) { require(c.train.momentum >= 0 && c.train.momentum < 1, "must lie in [0, 1)"); }});
    k.push_back({"train.weight_decay",
                 [](RunConfig& c, std::string_view v) { c.train.weight_decay = parse_number<double>(v); },
                 [](const RunConfig& c) { return fmt(c.train.weight_decay); },
                 [](const RunConfig& c) { require(c.train.weight_decay >= 0, "must be >= 0"); }});
    k.push_back({"train.checkpoint_every",
                 [](RunConfig& c, std::string_view v) { c.train.checkpoint_every = parse_number<int>(v); },
                 [](const RunConfig& c) { return std::to_string(c.train.checkpoint_every); },
                 [](const RunConfig& c) { require(c.train.checkpoint_every >= 0, "must be >= 0"); }});

    auto optional_double = [](std::optional<double> RunConfig::Attack::*field) {
      return std::function<void(RunConfig&, std::string_view)>([field](RunConfig& c, std::string_view v) {
        c.attack.*field = v == "preset" ? std::nullopt : std::optional<double>(parse_number<double>(v));
      });
    };
    auto optional_int = [](std::optional<int> RunConfig::Attack::*field) {
      return std::function<void(RunConfig&, std::string_view)>([field](RunConfig& c, std::string_view v) {
        c.attack.*field = v == "preset" ? std::nullopt : std::optional<int>(parse_number<int>(v));
      });
    };
    k.push_back({"attack.preset", [](RunConfig& c, std::string_view v) { c.attack.preset = v; },
                 [](const RunConfig& c) { return c.attack.preset; },
                 [](const RunConfig& c) {
                   require(c.attack.preset == "linf" || c.attack.preset == "l2" || c.attack.preset == "mnist-linf",
                           "must be linf, l2 or mnist-linf");
                 }});
    k.push_back({"attack.norm", [](RunConfig& c, std::string_view v) { c.attack.norm = v; },
                 [](const RunConfig& c) { return c.attack.norm; },
                 [](const RunConfig& c) {
                   // The preset fixes the norm; an explicit value must agree with it.
                   if (c.attack.norm == "auto") return;
                   Norm n{};
                   try {
                     n = parse_norm(c.attack.norm);
                   } catch (const ConfigError& e) {
                     throw BadValue{e.what()};
                   }
                   require((n == Norm::kL2) == (c.attack.preset == "l2"), "does not match attack.preset");
                 }});
    k.push_back({"attack.epsilon", optional_double(&RunConfig::Attack::epsilon),
                 [](const RunConfig& c) { return c.attack.epsilon ? fmt(*c.attack.epsilon) : std::string("preset"); },
                 [](const RunConfig& c) { require(!c.attack.epsilon || *c.attack.epsilon >= 0, "must be >= 0"); }});
    k.push_back({"attack.step_size", optional_double(&RunConfig::Attack::step_size),
                 [](const RunConfig& c) {
                   return c.attack.step_size ? fmt(*c.attack.step_size) : std::string("preset");
                 },
                 [](const RunConfig& c) { require(!c.attack.step_size || *c.attack.step_size > 0, "must be > 0"); }});
    k.push_back({"attack.train_steps", optional_int(&RunConfig::Attack::train_steps),
                 [](const RunConfig& c) {
                   return c.attack.train_steps ? std::to_string(*c.attack.train_steps) : std::string("preset");
                 },
                 [](const RunConfig& c) { require(!c.attack.train_steps || *c.attack.train_steps >= 1, "must be >= 1"); }});
    k.push_back({"attack.test_steps", optional_int(&RunConfig::Attack::test_steps),
                 [](const RunConfig& c) {
                   return c.attack.test_steps ? std::to_string(*c.attack.test_steps) : std::string("preset");
                 },
                 [](const RunConfig& c) { require(!c.attack.test_steps || *c.attack.test_steps >= 1, "must be >= 1"); }});
    k.push_back({"attack.random_start",
                 [](RunConfig& c, std::string_view v) { c.attack.random_start = parse_bool(v); },
                 [](const RunConfig& c) { return std::string(c.attack.random_start ? "true" : "false"); }, none});
    k.push_back({"attack.clamp", [](RunConfig& c, std::string_view v) { c.attack.clamp = parse_bool(v); },
                 [](const RunConfig& c) { return std::string(c.attack.clamp ? "true" : "false"); }, none});

    k.push_back({"fomo.sparsity", [](RunConfig& c, std::string_view v) { c.fomo.sparsity = parse_number<double>(v); },
                 [](const RunConfig& c) { return fmt(c.fomo.sparsity); },
                 [](const RunConfig& c) { require(c.fomo.sparsity >= 0 && c.fomo.sparsity <= 1, "must lie in [0, 1]"); }});
    k.push_back({"fomo.layer_threshold",
                 [](RunConfig& c, std::string_view v) {
                   c.fomo.layer_threshold = v == "auto" ? -1 : parse_number<int>(v);
                 },
                 [](const RunConfig& c) {
                   return c.fomo.layer_threshold < 0 ? std::string("auto") : std::to_string(c.fomo.layer_threshold);
                 },
                 none});
    k.push_back({"fomo.warmup", [](RunConfig& c, std::string_view v) { c.fomo.warmup_epochs = parse_number<int>(v); },
                 [](const RunConfig& c) { return std::to_string(c.fomo.warmup_epochs); },
                 [](const RunConfig& c) { require(c.fomo.warmup_epochs >= 0, "must be >= 0"); }});
    k.push_back({"fomo.relearn_epochs",
                 [](RunConfig& c, std::string_view v) { c.fomo.relearn_epochs = parse_number<int>(v); },
                 [](const RunConfig& c) { return std::to_string(c.fomo.relearn_epochs); },
                 [](const RunConfig& c) { require(c.fomo.relearn_epochs >= 1, "must be >= 1"); }});
    k.push_back({"fomo.alpha_c", [](RunConfig& c, std::string_view v) { c.fomo.alpha_c = parse_number<double>(v); },
                 [](const RunConfig& c) { return fmt(c.fomo.alpha_c); },
                 [](const RunConfig& c) { require(c.fomo.alpha_c >= 0 && c.fomo.alpha_c < 1, "must lie in [0, 1)"); }});
    k.push_back({"fomo.lambda1", [](RunConfig& c, std::string_view v) { c.fomo.lambda1 = parse_number<double>(v); },
                 [](const RunConfig& c) { return fmt(c.fomo.lambda1); },
                 [](const RunConfig& c) { require(c.fomo.lambda1 >= 0, "must be >= 0"); }});
    k.push_back({"fomo.lambda2", [](RunConfig& c, std::string_view v) { c.fomo.lambda2 = parse_number<double>(v); },
                 [](const RunConfig& c) { return fmt(c.fomo.lambda2); },
                 [](const RunConfig& c) { require(c.fomo.lambda2 >= 0, "must be >= 0"); }});

    k.push_back({"run.seeds", [](RunConfig& c, std::string_view v) { c.run.seeds = parse_numbers<std::uint64_t>(v); },
                 [](const RunConfig& c) { return join(c.run.seeds); },
                 [](const RunConfig& c) { require(!c.run.seeds.empty(), "needs at least one seed"); }});
    k.push_back({"run.precision", [](RunConfig& c, std::string_view v) { c.run.precision = parse_number<int>(v); },
                 [](const RunConfig& c) { return std::to_string(c.run.precision); },
                 [](const RunConfig& c) { require(c.run.precision == 32 || c.run.precision == 64, "must be 32 or 64"); }});
    k.push_back({"run.out", [](RunConfig& c, std::string_view v) { c.run.out = v; },
                 [](const RunConfig& c) { return c.run.out; },
                 [](const RunConfig& c) { require(!c.run.out.empty(), "must not be empty"); }});

    k.push_back({"eval.sigmas", [](RunConfig& c, std::string_view v) { c.eval.sigmas = parse_numbers<double>(v); },
                 [](const RunConfig& c) { return join(c.eval.sigmas); },
                 [positive_list](const RunConfig& c) {
                   positive_list(c.eval.sigmas, "sigma");
                   require(std::is_sorted(c.eval.sigmas.begin(), c.eval.sigmas.end()), "must be ascending");
                 }});
    k.push_back({"eval.trials", [](RunConfig& c, std::string_view v) { c.eval.trials = parse_number<int>(v); },
                 [](const RunConfig& c) { return std::to_string(c.eval.trials); },
                 [](const RunConfig& c) { require(c.eval.trials >= 1, "must be >= 1"); }});
    k.push_back({"eval.epsilons", [](RunConfig& c, std::string_view v) { c.eval.epsilons = parse_numbers<double>(v); },
                 [](const RunConfig& c) { return join(c.eval.epsilons); },
                 [positive_list](const RunConfig& c) {
                   positive_list(c.eval.epsilons, "epsilon");
                   require(std::is_sorted(c.eval.epsilons.begin(), c.eval.epsilons.end()), "must be ascending");
                 }});
    k.push_back({"eval.corruptions",
                 [](RunConfig& c, std::string_view v) {
                   c.eval.corruptions.clear();
                   for (auto item : split_list(v)) c.eval.corruptions.emplace_back(item);
                 },
                 [](const RunConfig& c) { return join(c.eval.corruptions); },
                 [](const RunConfig& c) {
                   for (const auto& name : c.eval.corruptions) {
                     try {
                       parse_corruption(name);
                     } catch (const ConfigError& e) {
                       throw BadValue{e.what()};
                     }
                   }
                 }});
    k.push_back({"eval.severities", [](RunConfig& c, std::string_view v) { c.eval.severities = parse_numbers<int>(v); },
                 [](const RunConfig& c) { return join(c.eval.severities); },
                 [](const RunConfig& c) {
                   for (int s : c.eval.severities) require(s >= 0 && s <= 5, "entries must lie in 0..5");
                 }});

    k.push_back({"sweep.sparsity", [](RunConfig& c, std::string_view v) { c.sweep.sparsity = parse_numbers<double>(v); },
                 [](const RunConfig& c) { return join(c.sweep.sparsity); },
                 [](const RunConfig& c) {
                   require(!c.sweep.sparsity.empty(), "must not be empty");
                   for (double s : c.sweep.sparsity) require(s >= 0 && s <= 1, "entries must lie in [0, 1]");
                 }});
    k.push_back({"sweep.relearn_epochs",
                 [](RunConfig& c, std::string_view v) { c.sweep.relearn_epochs = parse_numbers<int>(v); },
                 [](const RunConfig& c) { return join(c.sweep.relearn_epochs); },
                 [](const RunConfig& c) {
                   require(!c.sweep.relearn_epochs.empty(), "must not be empty");
                   for (int e : c.sweep.relearn_epochs) require(e >= 1, "entries must be >= 1");
                 }});
    k.push_back({"sweep.layer_threshold",
                 [](RunConfig& c, std::string_view v) {
                   c.sweep.layer_threshold.clear();
                   for (auto item : split_list(v)) {
                     c.sweep.layer_threshold.push_back(item == "auto" ? -1 : parse_number<int>(item));
                   }
                 },
                 [](const RunConfig& c) {
                   std::string out;
                   for (std::size_t i = 0; i < c.sweep.layer_threshold.size(); ++i) {
                     if (i) out += ',';
                     const int l = c.sweep.layer_threshold[i];
                     out += l < 0 ? std::string("auto") : std::to_string(l);
                   }
                   return out;
                 },
                 [](const RunConfig& c) { require(!c.sweep.layer_threshold.empty(), "must not be empty"); }});
    return k;
  }();
  return table;
}

const Key* find_key(std::string_view name) {
  for (const auto& k : keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

std::string where(const std::string& key, int line) {
  return line > 0 ? key + " (line " + std::to_string(line) + ")" : key;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::map<std::string, int> seen;  // key -> line of its last assignment
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view s = raw;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line) + ": expected 'key = value', got '" + std::string(s) + "'");
    }
    const std::string key(trim(s.substr(0, eq)));
    const std::string_view value = trim(s.substr(eq + 1));
    const Key* k = find_key(key);
    if (!k) throw ConfigError("unknown key " + where(key, line));
    try {
      k->set(cfg, value);
    } catch (const BadValue& e) {
      throw ConfigError("invalid value for " + where(key, line) + ": " + e.what);
    }
    seen[key] = line;
  }
  // Range checks run after every key is known so that train.mode can gate fomo.*.
  for (const auto& k : keys()) {
    if (cfg.train.mode == TrainMode::kPgdAt && k.name.rfind("fomo.", 0) == 0) continue;
    try {
      k.check(cfg);
    } catch (const BadValue& e) {
      const auto it = seen.find(k.name);
      throw ConfigError("invalid value for " + where(k.name, it == seen.end() ? 0 : it->second) + ": " + e.what);
    }
  }
  if (cfg.data.source == "idx" && (cfg.data.train_images.empty() || cfg.data.train_labels.empty() ||
                                   cfg.data.test_images.empty() || cfg.data.test_labels.empty())) {
    throw ConfigError("data.source = idx needs data.train_images, data.train_labels, data.test_images, data.test_labels");
  }
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config_text(os.str());
}

std::string render_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& k : keys()) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

std::uint64_t config_hash(const RunConfig& cfg, std::uint64_t seed) {
  RunConfig copy = cfg;
  copy.run.out.clear();
  copy.run.seeds.clear();
  const std::string text = render_config(copy) + "seed = " + std::to_string(seed) + "\n";
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace {

AttackConfig preset_attack(const RunConfig& cfg, bool train) {
  const std::string suffix = train ? "-train" : "-test";
  AttackConfig a = cfg.attack.preset == "mnist-linf" ? attack_preset(train ? "mnist-linf" : "mnist-linf-test")
                                                     : attack_preset(cfg.attack.preset + suffix);
  if (cfg.attack.epsilon) a.epsilon = *cfg.attack.epsilon;
  if (cfg.attack.step_size) a.step_size = *cfg.attack.step_size;
  if (train && cfg.attack.train_steps) a.steps = *cfg.attack.train_steps;
  if (!train && cfg.attack.test_steps) a.steps = *cfg.attack.test_steps;
  a.random_start = cfg.attack.random_start;
  if (!cfg.attack.clamp) a.input_bounds.reset();
  return a;
}

}  // namespace

AttackConfig train_attack(const RunConfig& cfg) { return preset_attack(cfg, true); }
AttackConfig test_attack(const RunConfig& cfg) { return preset_attack(cfg, false); }

TrainConfig train_config(const RunConfig& cfg, std::uint64_t seed) {
  TrainConfig t;
  t.epochs = cfg.train.epochs;
  t.batch_size = cfg.train.batch_size;
  t.lr = cfg.train.lr;
  t.lr_decay_epochs = cfg.train.lr_decay_epochs;
  t.momentum = cfg.train.momentum;
  t.weight_decay = cfg.train.weight_decay;
  t.seed = seed;
  t.mode = cfg.train.mode;
  t.train_attack = train_attack(cfg);
  t.test_attack = test_attack(cfg);
  t.schedule = cfg.fomo;
  return t;
}

std::vector<Index> layer_widths(const RunConfig& cfg, Index input_dim, int num_classes) {
  std::vector<Index> hidden = cfg.hidden;
  if (hidden.empty()) hidden = cfg.data.source == "idx" ? std::vector<Index>{256, 128, 64} : std::vector<Index>{64, 64};
  std::vector<Index> widths{input_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(num_classes);
  return widths;
}

namespace data_stream {
inline constexpr std::uint64_t kTrainPool = 11;
inline constexpr std::uint64_t kTestPool = 12;
inline constexpr std::uint64_t kSubset = 13;
}  // namespace data_stream

Splits<double> load_splits(const RunConfig& cfg) {
  Dataset<double> pool;
  Dataset<double> test;
  if (cfg.data.source == "idx") {
    pool = load_idx(cfg.data.train_images, cfg.data.train_labels);
    test = load_idx(cfg.data.test_images, cfg.data.test_labels);
    if (cfg.data.subset > 0 && cfg.data.subset < pool.size()) {
      std::vector<Index> rows(static_cast<std::size_t>(pool.size()));
      std::iota(rows.begin(), rows.end(), Index{0});
      Rng rng = derive_rng(cfg.data.seed, {data_stream::kSubset});
      std::shuffle(rows.begin(), rows.end(), rng);
      rows.resize(static_cast<std::size_t>(cfg.data.subset));
      pool = pool.subset(rows);
    }
    const int k = std::max(pool.num_classes, test.num_classes);
    pool.num_classes = test.num_classes = k;
    if (cfg.data.label_noise > 0) {
      Rng noise_rng = derive_rng(cfg.data.seed, {data_stream::kTrainPool});
      flip_labels(pool.labels, k, cfg.data.label_noise, noise_rng);
    }
  } else {
    const auto kind = parse_synthetic_kind(cfg.data.source);
    const SyntheticLayout layout{cfg.data.spread, cfg.data.dim, cfg.data.seed};
    Rng train_rng = derive_rng(cfg.data.seed, {data_stream::kTrainPool});
    Rng test_rng = derive_rng(cfg.data.seed, {data_stream::kTestPool});
    pool = make_synthetic<double>(kind, cfg.data.n, cfg.data.classes, cfg.data.label_noise, train_rng, layout);
    test = make_synthetic<double>(kind, cfg.data.test_n, cfg.data.classes, 0.0, test_rng, layout);
  }
  auto [train, val] = split(pool, cfg.data.seed);
  return {std::move(train), std::move(val), std::move(test)};
}

}  // namespace fomo
