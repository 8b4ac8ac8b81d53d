#include "fomo/fomo.hpp"

#include <algorithm>

namespace fomo {

void FomoSchedule::validate(std::size_t layer_count) const {
  check_sparsity(sparsity);
  check_alpha(alpha_c);
  check_lambdas(lambda1, lambda2);
  if (relearn_epochs < 1) throw ConfigError("fomo.relearn_epochs must be >= 1");
  if (warmup_epochs < 0) throw ConfigError("fomo.warmup must be >= 0");
  if (layer_count > 0 && resolved_threshold(layer_count) >= layer_count) {
    throw ConfigError("fomo.layer_threshold " + std::to_string(resolved_threshold(layer_count)) +
                      " must be < layer count " + std::to_string(layer_count));
  }
}

double chance_accuracy(const std::vector<int>& labels, int num_classes) {
  if (num_classes < 2) throw ContractError("chance accuracy needs K >= 2");
  if (labels.empty()) throw ContractError("chance accuracy of an empty label set");
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw IndexError("label " + std::to_string(y) + " out of range");
    ++counts[static_cast<std::size_t>(y)];
  }
  return static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
         static_cast<double>(labels.size());
}

}  // namespace fomo
