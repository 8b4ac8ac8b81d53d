#ifndef FOMO_CHECKPOINT_HPP
#define FOMO_CHECKPOINT_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fomo/train.hpp"

namespace fomo {

/// Container layout:
///   "FOMOCKPT" | u32 LE version | u32 LE length | UTF-8 JSON metadata |
///   f32 LE arrays: theta, then phi (if present), then velocities (if present),
///   each in parameter enumeration order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct BestTracking {
  int epoch = 0;
  double rob_val = -1.0;
  double rob_test = 0.0;
  double nat_test = 0.0;
};

struct Checkpoint {
  std::vector<Index> widths;
  int epoch = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::string mode;
  std::string rng_state;
  BestTracking best;
  std::string config_text;
  std::vector<std::vector<float>> theta;
  std::vector<std::vector<float>> phi;       // empty: no stable model yet
  std::vector<std::vector<float>> velocity;  // empty: optimizer not started
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Sizes of the parameter tensors for a layer spec, in enumeration order.
std::vector<std::size_t> parameter_sizes(const std::vector<Index>& widths);

namespace detail {

template <typename Scalar>
std::vector<float> flatten(const Matrix<Scalar>& m) {
  std::vector<float> out(static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.size(); ++i) out[static_cast<std::size_t>(i)] = static_cast<float>(m.data()[i]);
  return out;
}

template <typename Scalar>
void unflatten(const std::vector<float>& src, Matrix<Scalar>& dst) {
  if (static_cast<Index>(src.size()) != dst.size()) throw FormatError("checkpoint array size does not match model");
  for (Index i = 0; i < dst.size(); ++i) dst.data()[i] = static_cast<Scalar>(src[static_cast<std::size_t>(i)]);
}

}  // namespace detail

template <typename Scalar>
Checkpoint make_checkpoint(const TrainState<Scalar>& state, const TrainConfig& cfg, std::uint64_t hash,
                           const BestTracking& best, const std::string& config_text) {
  Checkpoint c;
  c.widths = state.model.widths();
  c.epoch = state.epoch;
  c.seed = cfg.seed;
  c.config_hash = hash;
  c.mode = to_string(cfg.mode);
  c.rng_state = rng_state(state.rng);
  c.best = best;
  c.config_text = config_text;
  for (const auto& p : state.model.parameters()) c.theta.push_back(detail::flatten(p.value()));
  if (state.stable.initialized()) {
    for (const auto& p : state.stable.parameters()) c.phi.push_back(detail::flatten(p.value()));
  }
  for (const auto& v : state.optimizer.velocity) c.velocity.push_back(detail::flatten(v));
  return c;
}

template <typename Scalar>
TrainState<Scalar> restore_state(const Checkpoint& c) {
  TrainState<Scalar> state;
  Rng unused;
  state.model = Mlp<Scalar>::init(c.widths, unused);
  auto params = state.model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) detail::unflatten(c.theta[i], params[i].value());
  if (!c.phi.empty()) {
    state.stable = clone_parameters(state.model);
    auto phi = state.stable.parameters();
    for (std::size_t i = 0; i < phi.size(); ++i) detail::unflatten(c.phi[i], phi[i].value());
  }
  if (!c.velocity.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      Matrix<Scalar> v(params[i].rows(), params[i].cols());
      detail::unflatten(c.velocity[i], v);
      state.optimizer.velocity.push_back(std::move(v));
    }
  }
  restore_rng_state(state.rng, c.rng_state);
  state.epoch = c.epoch;
  return state;
}

}  // namespace fomo

#endif  // FOMO_CHECKPOINT_HPP
