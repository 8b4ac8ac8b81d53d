#ifndef FOMO_CONFIG_HPP
#define FOMO_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fomo/data.hpp"
#include "fomo/train.hpp"

namespace fomo {

/// Everything a CLI run needs. Every field has a default; the defaults are
/// the desk-scale schedule (60 epochs, decays at 30/45, warm-up 32, e_r 3).
struct RunConfig {
  struct Data {
    std::string source = "blobs";  // blobs | spirals | idx
    Index n = 2000;
    int classes = 4;
    double label_noise = 0.2;  // training pool only, every source
    double spread = 0.08;
    Index dim = 2;
    Index test_n = 1000;
    std::uint64_t seed = 0;  // generation and split; independent of training seeds
    std::string train_images, train_labels, test_images, test_labels;
    Index subset = 0;  // 0 keeps every training image
  } data;

  std::vector<Index> hidden;  // empty: 64,64 for synthetic, 256,128,64 for idx

  struct Train {
    TrainMode mode = TrainMode::kFomo;
    int epochs = 60;
    Index batch_size = 128;
    double lr = 0.1;
    std::vector<int> lr_decay_epochs{30, 45};
    double momentum = 0.9;
    double weight_decay = 5e-4;
    int checkpoint_every = 10;  // 0: final checkpoint only
  } train;

  struct Attack {
    std::string preset = "linf";  // linf | l2 | mnist-linf
    std::string norm = "auto";    // implied by the preset
    std::optional<double> epsilon;
    std::optional<double> step_size;
    std::optional<int> train_steps;
    std::optional<int> test_steps;
    bool random_start = true;
    bool clamp = true;
  } attack;

  FomoSchedule fomo;

  struct Run {
    std::vector<std::uint64_t> seeds{0};
    int precision = 32;
    std::string out = "runs";
  } run;

  struct Eval {
    std::vector<double> sigmas{0.0, 0.01, 0.02, 0.05, 0.1, 0.2};
    int trials = 5;
    std::vector<double> epsilons{0.0, 1.0 / 255, 2.0 / 255, 4.0 / 255, 6.0 / 255, 8.0 / 255};
    std::vector<std::string> corruptions{"gaussian-noise", "impulse-noise", "box-blur", "brightness", "contrast"};
    std::vector<int> severities{1, 2, 3, 4, 5};
  } eval;

  struct Sweep {
    std::vector<double> sparsity{0.035, 0.5};
    std::vector<int> relearn_epochs{3, 1};
    std::vector<int> layer_threshold{-1};
  } sweep;
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config(const std::filesystem::path& path);

/// Canonical key = value listing of every field; parse_config_text(render_config(c)) == c.
std::string render_config(const RunConfig& cfg);

/// FNV-1a over the rendered config with the output directory and seed list
/// removed and the given training seed appended.
std::uint64_t config_hash(const RunConfig& cfg, std::uint64_t seed);

AttackConfig train_attack(const RunConfig& cfg);
AttackConfig test_attack(const RunConfig& cfg);
TrainConfig train_config(const RunConfig& cfg, std::uint64_t seed);
std::vector<Index> layer_widths(const RunConfig& cfg, Index input_dim, int num_classes);

/// Train/validation/test datasets as selected by data.*, at 64-bit precision.
Splits<double> load_splits(const RunConfig& cfg);

template <typename Scalar>
Splits<Scalar> cast_splits(const Splits<double>& s) {
  return {s.train.template cast<Scalar>(), s.val.template cast<Scalar>(), s.test.template cast<Scalar>()};
}

}  // namespace fomo

#endif  // FOMO_CONFIG_HPP
