#ifndef FOMO_FOMO_HPP
#define FOMO_FOMO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "fomo/model.hpp"
#include "fomo/optim.hpp"

namespace fomo {

/// Forgetting / relearning / consolidation hyperparameters.
struct FomoSchedule {
  double sparsity = 0.035;    // fraction of eligible entries reset per event
  int layer_threshold = -1;   // first layer eligible for forgetting; -1 means layer_count - 2
  int warmup_epochs = 32;
  int relearn_epochs = 3;
  double alpha_c = 0.999;
  double lambda1 = 1.0;       // clean-input consistency weight
  double lambda2 = 1.0;       // adversarial-input consistency weight

  std::size_t resolved_threshold(std::size_t layer_count) const {
    if (layer_threshold >= 0) return static_cast<std::size_t>(layer_threshold);
    return layer_count >= 2 ? layer_count - 2 : 0;
  }

  /// Consolidate-then-forget fires at epoch > warmup with epoch % e_r == 0 (1-based epochs).
  bool forgets_at(int epoch) const { return epoch > warmup_epochs && epoch % relearn_epochs == 0; }
  bool regularizes_at(int epoch) const { return epoch > warmup_epochs; }

  /// A warmup at or beyond the run length is valid: the gate simply never fires.
  void validate(std::size_t layer_count) const;
};

using MaskArray = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Binary retain(1)/reset(0) masks, one slot per parameter tensor in
/// enumeration order. Tensors of layers below the threshold have an empty
/// slot and are retained implicitly.
struct ResetMask {
  double sparsity = 0.0;
  std::size_t layer_threshold = 0;
  std::vector<MaskArray> masks;

  bool eligible(std::size_t param_index) const { return masks.at(param_index).size() > 0; }

  Index reset_count(std::size_t param_index) const {
    const auto& m = masks.at(param_index);
    return m.size() - m.template cast<Index>().sum();
  }
};

inline void check_sparsity(double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw ConfigError("sparsity must lie in [0, 1], got " + std::to_string(s));
}

/// Draws, for every tensor of layers >= layer_threshold, exactly
/// round(s * |theta_l|) reset positions uniformly without replacement.
template <typename Scalar>
ResetMask sample_reset_mask(const Mlp<Scalar>& model, double s, std::size_t layer_threshold, Rng& rng) {
  check_sparsity(s);
  if (layer_threshold >= model.layer_count()) {
    throw ConfigError("layer threshold " + std::to_string(layer_threshold) + " must be < layer count " +
                      std::to_string(model.layer_count()));
  }
  ResetMask mask;
  mask.sparsity = s;
  mask.layer_threshold = layer_threshold;
  const auto params = model.parameters();
  mask.masks.resize(params.size());
  std::vector<Index> positions;
  std::vector<Index> chosen;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (Mlp<Scalar>::layer_of_parameter(i) < layer_threshold) continue;
    const Index n = params[i].size();
    const auto resets = static_cast<Index>(std::llround(s * static_cast<double>(n)));
    MaskArray m = MaskArray::Ones(params[i].rows(), params[i].cols());
    positions.resize(static_cast<std::size_t>(n));
    std::iota(positions.begin(), positions.end(), Index{0});
    chosen.clear();
    std::sample(positions.begin(), positions.end(), std::back_inserter(chosen), resets, rng);
    for (Index p : chosen) m.data()[p] = 0;
    mask.masks[i] = std::move(m);
  }
  return mask;
}

/// theta = M * theta + (1 - M) * theta_r with theta_r drawn from the
/// initialisation distribution. Velocity entries of reset positions are zeroed.
template <typename Scalar>
void apply_forgetting(Mlp<Scalar>& model, const ResetMask& mask, Rng& rng,
                      SgdState<Scalar>* optimizer_state = nullptr) {
  auto params = model.parameters();
  if (mask.masks.size() != params.size()) {
    throw ContractError("reset mask covers " + std::to_string(mask.masks.size()) + " tensors, model has " +
                        std::to_string(params.size()));
  }
  const bool zero_velocity = optimizer_state && !optimizer_state->velocity.empty();
  if (zero_velocity && optimizer_state->velocity.size() != params.size()) {
    throw ContractError("optimizer state does not match the model's parameter layout");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& m = mask.masks[i];
    if (m.size() == 0) continue;
    if (m.rows() != params[i].rows() || m.cols() != params[i].cols()) {
      throw ContractError("reset mask for parameter " + std::to_string(i) + " has the wrong shape");
    }
    const bool is_bias = Mlp<Scalar>::is_bias_parameter(i);
    const Index fan_in = model.fan_in_of_parameter(i);
    auto& value = params[i].value();
    for (Index k = 0; k < value.size(); ++k) {
      if (m.data()[k]) continue;
      value.data()[k] = sample_init<Scalar>(is_bias, fan_in, rng);
      if (zero_velocity) optimizer_state->velocity[i].data()[k] = Scalar(0);
    }
  }
}

inline void check_alpha(double alpha_c) {
  if (!(alpha_c >= 0.0 && alpha_c < 1.0)) {
    throw ConfigError("consolidation decay alpha_c must lie in [0, 1), got " + std::to_string(alpha_c));
  }
}

/// phi = alpha_c * phi + (1 - alpha_c) * theta for every parameter.
template <typename Scalar>
void consolidate(StableModel<Scalar>& stable, const Mlp<Scalar>& model, double alpha_c) {
  check_alpha(alpha_c);
  if (!stable.congruent_with(model)) throw ContractError("stable model is not shape-congruent with the model");
  const auto a = static_cast<Scalar>(alpha_c);
  const auto b = static_cast<Scalar>(1.0 - alpha_c);
  auto phi = stable.parameters();
  const auto theta = model.parameters();
  for (std::size_t i = 0; i < phi.size(); ++i) {
    phi[i].value() = a * phi[i].value() + b * theta[i].value();
  }
}

inline void check_lambdas(double lambda1, double lambda2) {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) {
    throw ConfigError("consistency weights must be >= 0, got " + std::to_string(lambda1) + ", " +
                      std::to_string(lambda2));
  }
}

/// lambda1 * KL(model(x) || stable(x)) + lambda2 * KL(model(x_adv) || stable(x_adv)),
/// from precomputed logits. Stable logits are plain matrices, hence constants.
template <typename Scalar>
Tensor<Scalar> consistency_loss(Tape<Scalar>& tape, const Tensor<Scalar>& logits_clean,
                                const Tensor<Scalar>& logits_adv, const Matrix<Scalar>& stable_clean,
                                const Matrix<Scalar>& stable_adv, double lambda1, double lambda2) {
  check_lambdas(lambda1, lambda2);
  auto clean = kl_divergence(tape, logits_clean, Tensor<Scalar>(stable_clean));
  auto adv = kl_divergence(tape, logits_adv, Tensor<Scalar>(stable_adv));
  return add(tape, scale(tape, clean, static_cast<Scalar>(lambda1)), scale(tape, adv, static_cast<Scalar>(lambda2)));
}

template <typename Scalar>
Tensor<Scalar> consistency_loss(Tape<Scalar>& tape, const Mlp<Scalar>& model, const StableModel<Scalar>& stable,
                                const Matrix<Scalar>& x, const Matrix<Scalar>& x_adv, double lambda1,
                                double lambda2) {
  if (!stable.congruent_with(model)) throw ContractError("stable model is not shape-congruent with the model");
  return consistency_loss(tape, model.forward(tape, Tensor<Scalar>(x)), model.forward(tape, Tensor<Scalar>(x_adv)),
                          stable.logits(x), stable.logits(x_adv), lambda1, lambda2);
}

template <typename Scalar>
struct FomoLoss {
  Tensor<Scalar> total;
  Tensor<Scalar> logits_adv;    // model logits on x_adv
  Tensor<Scalar> logits_clean;  // defined only when the consistency term was computed
  Scalar adversarial = 0;
  Scalar consistency = 0;
};

/// L_adv(model(x_adv), y), plus the consistency term once epoch > warmup.
template <typename Scalar>
FomoLoss<Scalar> fomo_loss(Tape<Scalar>& tape, const Mlp<Scalar>& model, const StableModel<Scalar>& stable,
                           const Matrix<Scalar>& x, const Matrix<Scalar>& x_adv, const std::vector<int>& y,
                           const FomoSchedule& schedule, int epoch) {
  FomoLoss<Scalar> out;
  out.logits_adv = model.forward(tape, Tensor<Scalar>(x_adv));
  auto adv = softmax_cross_entropy(tape, out.logits_adv, y);
  out.adversarial = adv.item();
  if (!schedule.regularizes_at(epoch)) {
    out.total = adv;
    return out;
  }
  if (!stable.congruent_with(model)) {
    throw ContractError("consistency term requested before the stable model was initialised");
  }
  out.logits_clean = model.forward(tape, Tensor<Scalar>(x));
  auto cr = consistency_loss(tape, out.logits_clean, out.logits_adv, stable.logits(x), stable.logits(x_adv),
                             schedule.lambda1, schedule.lambda2);
  out.consistency = cr.item();
  out.total = add(tape, adv, cr);
  return out;
}

/// Accuracy of an uninformed predictor on a balanced K-class problem.
inline double chance_accuracy(int num_classes) {
  if (num_classes < 2) throw ContractError("chance accuracy needs K >= 2");
  return 1.0 / num_classes;
}

/// Majority-class frequency of the given labels.
double chance_accuracy(const std::vector<int>& labels, int num_classes);

}  // namespace fomo

#endif  // FOMO_FOMO_HPP
