#ifndef FOMO_TRAIN_HPP
#define FOMO_TRAIN_HPP

#include <chrono>
#include <functional>
#include <limits>
#include <numeric>
#include <type_traits>
#include <string>
#include <string_view>
#include <vector>

#include "fomo/attacks.hpp"
#include "fomo/data.hpp"
#include "fomo/eval.hpp"
#include "fomo/fomo.hpp"
#include "fomo/optim.hpp"

namespace fomo {

enum class TrainMode { kPgdAt, kFomo };

TrainMode parse_train_mode(std::string_view name);
std::string to_string(TrainMode mode);

inline constexpr std::string_view kForgetEvent = "consolidate+forget";

struct TrainConfig {
  int epochs = 60;
  Index batch_size = 128;
  double lr = 0.1;
  std::vector<int> lr_decay_epochs{30, 45};
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::kFomo;
  AttackConfig train_attack = attack_preset("linf-train");
  AttackConfig test_attack = attack_preset("linf-test");
  FomoSchedule schedule;

  void validate(std::size_t layer_count) const;
};

/// Step schedule: lr * 10^-d, d = number of decay epochs <= epoch. Epochs are 1-based.
double lr_at(int epoch, const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double nat_train = 0.0;  // running, on clean batches before each update
  double rob_train = 0.0;  // running, on the training-attack batches
  double nat_test = 0.0;
  double rob_test = 0.0;
  double rob_val = 0.0;    // selects the best epoch
  double loss_adv = 0.0;
  double loss_cr = 0.0;
  std::string event;
  double wall_time = 0.0;
};

/// Best-versus-last summary of a run.
struct EvalReport {
  int best_epoch = 0;
  double natural_best = 0.0;
  double natural_last = 0.0;
  double robust_best = 0.0;
  double robust_last = 0.0;
  double delta = 0.0;     // robust_last - robust_best (negative = overfitting)
  double tradeoff = 0.0;  // harmonic mean of the last-epoch accuracies, in percent
};

/// Best epoch = highest robust validation accuracy (earliest on ties).
EvalReport summarize(const std::vector<EpochRecord>& records);

template <typename Scalar>
struct Splits {
  Dataset<Scalar> train;
  Dataset<Scalar> val;
  Dataset<Scalar> test;
};

/// Everything needed to continue a run from the end of `epoch`.
template <typename Scalar>
struct TrainState {
  Mlp<Scalar> model;
  StableModel<Scalar> stable;
  SgdState<Scalar> optimizer;
  Rng rng;
  int epoch = 0;  // last completed epoch

  /// Inference uses the stable model once it exists (fomo mode), else theta.
  const Mlp<Scalar>& inference_model() const { return stable.initialized() ? stable.net() : model; }
};

namespace stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kTrain = 2;
inline constexpr std::uint64_t kShuffle = 3;
inline constexpr std::uint64_t kEval = 4;
}  // namespace stream

template <typename Scalar>
TrainState<Scalar> init_state(const TrainConfig& cfg, const std::vector<Index>& widths) {
  Rng init = derive_rng(cfg.seed, {stream::kInit});
  TrainState<Scalar> state;
  state.model = Mlp<Scalar>::init(widths, init);
  state.rng = derive_rng(cfg.seed, {stream::kTrain});
  cfg.validate(state.model.layer_count());
  return state;
}

/// Pre-batch work of an epoch: in fomo mode, creates the stable copy on the
/// first regularised epoch, then consolidates and forgets at gated epochs.
/// Returns the event label for the metrics log.
template <typename Scalar>
std::string begin_epoch(TrainState<Scalar>& state, const TrainConfig& cfg, int epoch) {
  if (cfg.mode != TrainMode::kFomo || !cfg.schedule.regularizes_at(epoch)) return {};
  if (!state.stable.initialized()) state.stable = clone_parameters(state.model);
  if (!cfg.schedule.forgets_at(epoch)) return {};
  consolidate(state.stable, state.model, cfg.schedule.alpha_c);
  const auto mask = sample_reset_mask(state.model, cfg.schedule.sparsity,
                                      cfg.schedule.resolved_threshold(state.model.layer_count()), state.rng);
  apply_forgetting(state.model, mask, state.rng, &state.optimizer);
  return std::string(kForgetEvent);
}

/// One pass over the shuffled training set; fills the training fields of the record.
template <typename Scalar>
EpochRecord train_epoch(TrainState<Scalar>& state, const Dataset<Scalar>& train, const TrainConfig& cfg, int epoch) {
  EpochRecord rec;
  rec.epoch = epoch;
  rec.lr = lr_at(epoch, cfg);
  std::vector<Index> order(static_cast<std::size_t>(train.size()));
  std::iota(order.begin(), order.end(), Index{0});
  Rng shuffle_rng = derive_rng(cfg.seed, {stream::kShuffle, static_cast<std::uint64_t>(epoch)});
  std::shuffle(order.begin(), order.end(), shuffle_rng);

  const bool regularize = cfg.mode == TrainMode::kFomo && cfg.schedule.regularizes_at(epoch);
  const FomoSchedule plain{.warmup_epochs = std::numeric_limits<int>::max()};
  const FomoSchedule& schedule = regularize ? cfg.schedule : plain;

  auto params = state.model.parameters();
  Index nat_correct = 0;
  Index rob_correct = 0;
  double adv_total = 0.0;
  double cr_total = 0.0;
  for (Index start = 0; start < train.size(); start += cfg.batch_size) {
    const Index rows = std::min(cfg.batch_size, train.size() - start);
    Matrix<Scalar> x(rows, train.dim());
    std::vector<int> y(static_cast<std::size_t>(rows));
    for (Index i = 0; i < rows; ++i) {
      const Index src = order[static_cast<std::size_t>(start + i)];
      x.row(i) = train.inputs.row(src);
      y[static_cast<std::size_t>(i)] = train.labels[static_cast<std::size_t>(src)];
    }
    const Matrix<Scalar> x_adv = pgd(state.model, x, y, cfg.train_attack, state.rng);

    Tape<Scalar> tape;
    auto loss = fomo_loss(tape, state.model, state.stable, x, x_adv, y, schedule, epoch);
    rob_correct += count_correct(loss.logits_adv.value(), y);
    nat_correct += count_correct(loss.logits_clean.defined() ? loss.logits_clean.value() : state.model.logits(x), y);
    adv_total += static_cast<double>(loss.adversarial) * static_cast<double>(rows);
    cr_total += static_cast<double>(loss.consistency) * static_cast<double>(rows);

    backward(loss.total, tape);
    sgd_step<Scalar>(params, static_cast<Scalar>(rec.lr), static_cast<Scalar>(cfg.momentum),
                     static_cast<Scalar>(cfg.weight_decay), state.optimizer);
    zero_grad<Scalar>(params);
  }
  const auto n = static_cast<double>(train.size());
  rec.nat_train = static_cast<double>(nat_correct) / n;
  rec.rob_train = static_cast<double>(rob_correct) / n;
  rec.loss_adv = adv_total / n;
  rec.loss_cr = cr_total / n;
  return rec;
}

/// Natural and robust accuracy of the inference model. Attack randomness comes
/// from a stream keyed by (seed, epoch), so re-evaluating a saved state is exact.
template <typename Scalar>
void evaluate_epoch(const TrainState<Scalar>& state, const Splits<Scalar>& data, const TrainConfig& cfg,
                    EpochRecord& rec) {
  const auto& net = state.inference_model();
  Rng val_rng = derive_rng(cfg.seed, {stream::kEval, static_cast<std::uint64_t>(rec.epoch), 0});
  Rng test_rng = derive_rng(cfg.seed, {stream::kEval, static_cast<std::uint64_t>(rec.epoch), 1});
  rec.nat_test = accuracy(net, data.test);
  rec.rob_test = accuracy(net, data.test, cfg.test_attack, test_rng);
  rec.rob_val = data.val.size() > 0 ? accuracy(net, data.val, cfg.test_attack, val_rng) : rec.rob_test;
}

/// Called after each epoch's evaluation with the record and the post-epoch state.
template <typename Scalar>
using EpochHook = std::function<void(const EpochRecord&, const TrainState<Scalar>&)>;

/// Continues training from state.epoch + 1 through cfg.epochs.
template <typename Scalar>
std::vector<EpochRecord> run_from(TrainState<Scalar>& state, const TrainConfig& cfg, const Splits<Scalar>& data,
                                  const std::type_identity_t<EpochHook<Scalar>>& on_epoch = {}) {
  cfg.validate(state.model.layer_count());
  std::vector<EpochRecord> records;
  for (int epoch = state.epoch + 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string event = begin_epoch(state, cfg, epoch);
    EpochRecord rec = train_epoch(state, data.train, cfg, epoch);
    rec.event = event;
    state.epoch = epoch;
    evaluate_epoch(state, data, cfg, rec);
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    records.push_back(rec);
    if (on_epoch) on_epoch(rec, state);
  }
  return records;
}

template <typename Scalar>
struct RunResult {
  std::vector<EpochRecord> records;
  TrainState<Scalar> state;
  EvalReport report;
};

/// Full run from initialisation.
template <typename Scalar>
RunResult<Scalar> run(const TrainConfig& cfg, const std::vector<Index>& widths, const Splits<Scalar>& data,
                      const std::type_identity_t<EpochHook<Scalar>>& on_epoch = {}) {
  RunResult<Scalar> result{{}, init_state<Scalar>(cfg, widths), {}};
  result.records = run_from(result.state, cfg, data, on_epoch);
  result.report = summarize(result.records);
  return result;
}

}  // namespace fomo

#endif  // FOMO_TRAIN_HPP
