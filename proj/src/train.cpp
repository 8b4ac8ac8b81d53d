#include "fomo/train.hpp"

namespace fomo {

TrainMode parse_train_mode(std::string_view name) {
  if (name == "pgd-at") return TrainMode::kPgdAt;
  if (name == "fomo") return TrainMode::kFomo;
  throw ConfigError("unknown training mode '" + std::string(name) + "' (expected pgd-at or fomo)");
}

std::string to_string(TrainMode mode) { return mode == TrainMode::kFomo ? "fomo" : "pgd-at"; }

void TrainConfig::validate(std::size_t layer_count) const {
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(lr >= 0.0)) throw ConfigError("train.lr must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be >= 0");
  for (std::size_t i = 0; i < lr_decay_epochs.size(); ++i) {
    if (lr_decay_epochs[i] < 1 || lr_decay_epochs[i] >= epochs) {
      throw ConfigError("train.lr_decay_epochs entries must lie in [1, epochs)");
    }
    if (i > 0 && lr_decay_epochs[i] <= lr_decay_epochs[i - 1]) {
      throw ConfigError("train.lr_decay_epochs must be strictly increasing");
    }
  }
  train_attack.validate();
  test_attack.validate();
  if (mode == TrainMode::kFomo) schedule.validate(layer_count);
}

double lr_at(int epoch, const TrainConfig& cfg) {
  if (epoch < 0 || epoch > cfg.epochs) {
    throw ContractError("lr_at: epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(cfg.epochs) + "]");
  }
  double lr = cfg.lr;
  for (int d : cfg.lr_decay_epochs) {
    if (d <= epoch) lr /= 10.0;
  }
  return lr;
}

EvalReport summarize(const std::vector<EpochRecord>& records) {
  EvalReport r;
  if (records.empty()) return r;
  const EpochRecord* best = &records.front();
  for (const auto& rec : records) {
    if (rec.rob_val > best->rob_val) best = &rec;
  }
  const auto& last = records.back();
  r.best_epoch = best->epoch;
  r.natural_best = best->nat_test;
  r.robust_best = best->rob_test;
  r.natural_last = last.nat_test;
  r.robust_last = last.rob_test;
  r.delta = r.robust_last - r.robust_best;
  r.tradeoff = (r.natural_last > 0 && r.robust_last > 0) ? tradeoff(100.0 * r.natural_last, 100.0 * r.robust_last) : 0.0;
  return r;
}

}  // namespace fomo
