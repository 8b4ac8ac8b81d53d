#ifndef FOMO_EVAL_HPP
#define FOMO_EVAL_HPP

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fomo/attacks.hpp"
#include "fomo/data.hpp"
#include "fomo/model.hpp"

namespace fomo {

/// Index of the largest entry; ties go to the lowest index.
template <typename Derived>
Index argmax_row(const Eigen::MatrixBase<Derived>& row) {
  Index best = 0;
  for (Index j = 1; j < row.size(); ++j) {
    if (row(j) > row(best)) best = j;
  }
  return best;
}

template <typename Scalar>
Index count_correct(const Matrix<Scalar>& logits, const std::vector<int>& labels, Index offset = 0) {
  Index correct = 0;
  for (Index i = 0; i < logits.rows(); ++i) {
    if (argmax_row(logits.row(i)) == labels[static_cast<std::size_t>(offset + i)]) ++correct;
  }
  return correct;
}

/// Fraction of examples classified correctly; with an attack, each batch is
/// first replaced by its PGD counterpart.
template <typename Scalar>
double accuracy(const Mlp<Scalar>& model, const Dataset<Scalar>& data, const std::optional<AttackConfig>& attack,
                Rng& rng, Index batch_size = 256) {
  if (data.size() == 0) throw ContractError("accuracy of an empty dataset");
  Index correct = 0;
  for (Index start = 0; start < data.size(); start += batch_size) {
    const Index rows = std::min(batch_size, data.size() - start);
    Matrix<Scalar> x = data.inputs.middleRows(start, rows);
    if (attack) {
      std::vector<int> y(data.labels.begin() + start, data.labels.begin() + start + rows);
      x = pgd(model, x, y, *attack, rng);
    }
    correct += count_correct(model.logits(x), data.labels, start);
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

template <typename Scalar>
double accuracy(const Mlp<Scalar>& model, const Dataset<Scalar>& data) {
  Rng unused;
  return accuracy(model, data, std::nullopt, unused);
}

/// Harmonic mean of last-epoch natural and robust accuracy.
double tradeoff(double natural_last, double robust_last);

struct CurvePoint {
  double x = 0.0;
  double accuracy = 0.0;
};

/// Mean natural accuracy under i.i.d. N(0, sigma^2) noise on every parameter,
/// averaged over `trials` draws per sigma. The model itself is never modified.
template <typename Scalar>
std::vector<CurvePoint> flatness_probe(const Mlp<Scalar>& model, const Dataset<Scalar>& data,
                                       const std::vector<double>& sigmas, int trials, Rng& rng) {
  if (trials < 1) throw ConfigError("flatness probe needs at least one trial");
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    if (sigmas[i] < 0) throw ConfigError("flatness probe sigma must be >= 0");
    if (i > 0 && sigmas[i] < sigmas[i - 1]) throw ConfigError("flatness probe sigmas must be ascending");
  }
  std::vector<CurvePoint> curve;
  for (double sigma : sigmas) {
    if (sigma == 0.0) {
      curve.push_back({sigma, accuracy(model, data)});
      continue;
    }
    std::normal_distribution<double> noise(0.0, sigma);
    double total = 0.0;
    for (int t = 0; t < trials; ++t) {
      Mlp<Scalar> perturbed = model.clone(false);
      for (auto& p : perturbed.parameters()) {
        auto& v = p.value();
        for (Index k = 0; k < v.size(); ++k) v.data()[k] += static_cast<Scalar>(noise(rng));
      }
      total += accuracy(perturbed, data);
    }
    curve.push_back({sigma, total / trials});
  }
  return curve;
}

/// Robust accuracy per budget. Step count is fixed; the step size scales
/// with epsilon relative to the base configuration.
template <typename Scalar>
std::vector<CurvePoint> epsilon_sweep(const Mlp<Scalar>& model, const Dataset<Scalar>& data,
                                      const std::vector<double>& epsilons, const AttackConfig& base, Rng& rng) {
  base.validate();
  std::vector<CurvePoint> curve;
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (i > 0 && epsilons[i] < epsilons[i - 1]) throw ConfigError("epsilon sweep values must be ascending");
    AttackConfig cfg = base;
    cfg.epsilon = epsilons[i];
    if (base.epsilon > 0 && epsilons[i] > 0) cfg.step_size = base.step_size * epsilons[i] / base.epsilon;
    curve.push_back({epsilons[i], accuracy(model, data, cfg, rng)});
  }
  return curve;
}

struct CorruptionCell {
  Corruption kind;
  int severity = 0;
  double accuracy = 0.0;
};

struct CorruptionReport {
  std::vector<CorruptionCell> cells;
  double mean_accuracy = 0.0;  // mCA over all cells
};

template <typename Scalar>
CorruptionReport corruption_eval(const Mlp<Scalar>& model, const Dataset<Scalar>& data,
                                 const std::vector<Corruption>& kinds, const std::vector<int>& severities,
                                 Rng& rng) {
  CorruptionReport report;
  for (auto kind : kinds) {
    for (int severity : severities) {
      Dataset<Scalar> corrupted = data;
      corrupted.inputs = corrupt(data.inputs, kind, severity, data.height, data.width, rng);
      report.cells.push_back({kind, severity, accuracy(model, corrupted)});
    }
  }
  if (!report.cells.empty()) {
    double total = 0.0;
    for (const auto& c : report.cells) total += c.accuracy;
    report.mean_accuracy = total / static_cast<double>(report.cells.size());
  }
  return report;
}

}  // namespace fomo

#endif  // FOMO_EVAL_HPP
