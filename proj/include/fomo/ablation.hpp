#ifndef FOMO_ABLATION_HPP
#define FOMO_ABLATION_HPP

#include <cstdint>
#include <vector>

#include "fomo/train.hpp"

namespace fomo {

struct AblationGrid {
  std::vector<double> sparsity;
  std::vector<int> relearn_epochs;
  std::vector<int> layer_threshold;  // -1: layer_count - 2

  std::size_t size() const { return sparsity.size() * relearn_epochs.size() * layer_threshold.size(); }
};

struct AblationRow {
  double sparsity = 0.0;
  int relearn_epochs = 0;
  int layer_threshold = 0;  // resolved
  std::vector<EvalReport> per_seed;
  double delta_mean = 0.0;
  double robust_last_mean = 0.0;
  double natural_last_mean = 0.0;
};

/// One fomo-mode run per (cell, seed), cells in row-major order s, e_r, L.
template <typename Scalar>
std::vector<AblationRow> ablation_sweep(const AblationGrid& grid, TrainConfig base, const std::vector<Index>& widths,
                                        const Splits<Scalar>& data, const std::vector<std::uint64_t>& seeds) {
  if (grid.size() == 0) throw ConfigError("ablation grid is empty");
  if (seeds.empty()) throw ConfigError("ablation sweep needs at least one seed");
  base.mode = TrainMode::kFomo;
  const std::size_t layers = widths.size() - 1;
  std::vector<AblationRow> rows;
  for (double s : grid.sparsity) {
    for (int er : grid.relearn_epochs) {
      for (int l : grid.layer_threshold) {
        AblationRow row;
        row.sparsity = s;
        row.relearn_epochs = er;
        TrainConfig cfg = base;
        cfg.schedule.sparsity = s;
        cfg.schedule.relearn_epochs = er;
        cfg.schedule.layer_threshold = l;
        row.layer_threshold = static_cast<int>(cfg.schedule.resolved_threshold(layers));
        for (auto seed : seeds) {
          cfg.seed = seed;
          const auto report = run<Scalar>(cfg, widths, data).report;
          row.per_seed.push_back(report);
          row.delta_mean += report.delta;
          row.robust_last_mean += report.robust_last;
          row.natural_last_mean += report.natural_last;
        }
        const auto n = static_cast<double>(seeds.size());
        row.delta_mean /= n;
        row.robust_last_mean /= n;
        row.natural_last_mean /= n;
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

}  // namespace fomo

#endif  // FOMO_ABLATION_HPP
