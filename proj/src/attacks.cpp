#include "fomo/attacks.hpp"

#include <sstream>

namespace fomo {

Norm parse_norm(std::string_view name) {
  if (name == "linf" || name == "inf") return Norm::kLinf;
  if (name == "l2" || name == "2") return Norm::kL2;
  throw ConfigError("unsupported norm '" + std::string(name) + "' (expected linf or l2)");
}

std::string to_string(Norm norm) { return norm == Norm::kLinf ? "linf" : "l2"; }

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("attack epsilon must be a finite value >= 0, got " + std::to_string(epsilon));
  }
  if (steps < 1) throw ConfigError("attack steps must be >= 1, got " + std::to_string(steps));
  if (epsilon > 0.0 && !(step_size > 0.0)) throw ConfigError("attack step size must be > 0, got " + std::to_string(step_size));
  if (input_bounds && !(input_bounds->first < input_bounds->second)) {
    throw ConfigError("attack input bounds must satisfy lo < hi");
  }
}

std::vector<std::string> AttackConfig::warnings() const {
  std::vector<std::string> out;
  if (epsilon > 0 && step_size > 2 * epsilon) {
    std::ostringstream os;
    os << "attack step size " << step_size << " exceeds twice the budget " << epsilon;
    out.push_back(os.str());
  }
  return out;
}

AttackConfig attack_preset(std::string_view name) {
  AttackConfig cfg;
  if (name == "linf-train" || name == "linf-test") {
    cfg.epsilon = 8.0 / 255.0;
    cfg.step_size = 2.0 / 255.0;
    cfg.steps = name == "linf-train" ? 10 : 20;
  } else if (name == "l2-train" || name == "l2-test") {
    cfg.norm = Norm::kL2;
    cfg.epsilon = 128.0 / 255.0;
    cfg.step_size = 15.0 / 255.0;
    cfg.steps = name == "l2-train" ? 10 : 20;
  } else if (name == "mnist-linf" || name == "mnist-linf-test") {
    cfg.epsilon = 0.3;
    cfg.step_size = 0.04;
    cfg.steps = name == "mnist-linf" ? 10 : 20;
  } else {
    throw ConfigError("unknown attack preset '" + std::string(name) + "'");
  }
  return cfg;
}

}  // namespace fomo
