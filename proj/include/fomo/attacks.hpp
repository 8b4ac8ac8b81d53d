#ifndef FOMO_ATTACKS_HPP
#define FOMO_ATTACKS_HPP

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fomo/model.hpp"

namespace fomo {

enum class Norm { kLinf, kL2 };

Norm parse_norm(std::string_view name);
std::string to_string(Norm norm);

/// PGD threat model and step schedule. Budgets are in input-space units.
struct AttackConfig {
  double epsilon = 8.0 / 255.0;
  Norm norm = Norm::kLinf;
  double step_size = 2.0 / 255.0;
  int steps = 10;
  bool random_start = true;
  std::optional<std::pair<double, double>> input_bounds = std::make_pair(0.0, 1.0);

  /// Throws ConfigError on a malformed configuration.
  void validate() const;
  /// Non-fatal advisories (e.g. step size larger than twice the budget).
  std::vector<std::string> warnings() const;
};

/// Named configurations: linf-train, linf-test, l2-train, l2-test,
/// mnist-linf (training) and mnist-linf-test.
AttackConfig attack_preset(std::string_view name);

/// Projects each row of delta onto the norm ball of radius epsilon.
template <typename Scalar>
Matrix<Scalar> project(const Matrix<Scalar>& delta, double epsilon, Norm norm) {
  if (epsilon < 0) throw ConfigError("project: epsilon must be >= 0, got " + std::to_string(epsilon));
  const auto eps = static_cast<Scalar>(epsilon);
  switch (norm) {
    case Norm::kLinf:
      return delta.cwiseMax(-eps).cwiseMin(eps);
    case Norm::kL2: {
      Matrix<Scalar> out = delta;
      for (Index i = 0; i < out.rows(); ++i) {
        const Scalar n = out.row(i).norm();
        if (n > eps) out.row(i) *= eps / n;
      }
      return out;
    }
  }
  throw ConfigError("project: unsupported norm");
}

namespace detail {

template <typename Scalar>
Matrix<Scalar> sample_in_ball(Index rows, Index cols, double epsilon, Norm norm, Rng& rng) {
  Matrix<Scalar> delta(rows, cols);
  if (norm == Norm::kLinf) {
    std::uniform_real_distribution<double> u(-epsilon, epsilon);
    for (Index i = 0; i < delta.size(); ++i) delta.data()[i] = static_cast<Scalar>(u(rng));
    return delta;
  }
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) delta(i, j) = static_cast<Scalar>(g(rng));
    const Scalar n = delta.row(i).norm();
    const double radius = epsilon * std::pow(u(rng), 1.0 / static_cast<double>(cols));
    if (n > 0) delta.row(i) *= static_cast<Scalar>(radius) / n;
  }
  return project(delta, epsilon, norm);
}

template <typename Scalar>
Matrix<Scalar> clamp_to(const Matrix<Scalar>& x, const AttackConfig& cfg) {
  if (!cfg.input_bounds) return x;
  return x.cwiseMax(static_cast<Scalar>(cfg.input_bounds->first))
      .cwiseMin(static_cast<Scalar>(cfg.input_bounds->second));
}

}  // namespace detail

/// Gradient of the mean cross-entropy with respect to the inputs. Model
/// parameters are used as constants, so no parameter gradient is touched.
template <typename Scalar>
Matrix<Scalar> input_gradient(const Mlp<Scalar>& frozen, const Matrix<Scalar>& x,
                              const std::vector<int>& y, Scalar* loss_out = nullptr) {
  Tape<Scalar> tape;
  Tensor<Scalar> input(x, true);
  auto loss = softmax_cross_entropy(tape, frozen.forward(tape, input), y);
  backward(loss, tape);
  if (loss_out) *loss_out = loss.item();
  return input.grad();
}

/// Projected gradient ascent on the cross-entropy inside the epsilon ball.
/// One step from a zero start with step_size == epsilon is FGSM.
template <typename Scalar>
Matrix<Scalar> pgd(const Mlp<Scalar>& model, const Matrix<Scalar>& x, const std::vector<int>& y,
                   const AttackConfig& cfg, Rng& rng) {
  cfg.validate();
  if (cfg.epsilon == 0.0) return x;
  const Mlp<Scalar> frozen = model.clone(false);
  const auto step = static_cast<Scalar>(cfg.step_size);

  Matrix<Scalar> delta = cfg.random_start
                             ? detail::sample_in_ball<Scalar>(x.rows(), x.cols(), cfg.epsilon, cfg.norm, rng)
                             : Matrix<Scalar>::Zero(x.rows(), x.cols());
  Matrix<Scalar> x_adv = detail::clamp_to<Scalar>(x + delta, cfg);

  for (int k = 0; k < cfg.steps; ++k) {
    const Matrix<Scalar> g = input_gradient(frozen, x_adv, y);
    if (cfg.norm == Norm::kLinf) {
      x_adv += step * g.array().sign().matrix();
    } else {
      for (Index i = 0; i < g.rows(); ++i) {
        const Scalar n = g.row(i).norm();
        if (n > 0) x_adv.row(i) += (step / n) * g.row(i);
      }
    }
    delta = project<Scalar>(x_adv - x, cfg.epsilon, cfg.norm);
    x_adv = detail::clamp_to<Scalar>(x + delta, cfg);
  }
  return x_adv;
}

}  // namespace fomo

#endif  // FOMO_ATTACKS_HPP
