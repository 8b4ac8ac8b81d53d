#include "fomo/eval.hpp"

namespace fomo {

double tradeoff(double natural_last, double robust_last) {
  if (!(natural_last > 0.0) || !(robust_last > 0.0)) {
    throw ContractError("tradeoff needs positive accuracies, got " + std::to_string(natural_last) + ", " +
                        std::to_string(robust_last));
  }
  return 2.0 * natural_last * robust_last / (natural_last + robust_last);
}

}  // namespace fomo
