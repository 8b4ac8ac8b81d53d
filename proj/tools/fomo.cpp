// Experiment driver: train, eval, probe, sweep-eps, sweep-ablation, corrupt-eval.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "fomo/ablation.hpp"
#include "fomo/checkpoint.hpp"
#include "fomo/config.hpp"
#include "fomo/eval.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace fomo {
namespace {

constexpr std::uint64_t kProbeStream = 5;
constexpr std::uint64_t kCorruptStream = 6;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> precision;
  std::string checkpoint;
  bool resume = false;
};

RunConfig resolve(const Options& opt, const std::string& fallback_text = {}) {
  RunConfig cfg = !opt.config.empty() ? parse_config(opt.config) : parse_config_text(fallback_text);
  if (!opt.out.empty()) cfg.run.out = opt.out;
  if (opt.seed) cfg.run.seeds = {*opt.seed};
  if (opt.precision) {
    if (*opt.precision != 32 && *opt.precision != 64) throw ConfigError("--precision must be 32 or 64");
    cfg.run.precision = *opt.precision;
  }
  return cfg;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw FormatError("cannot write " + path.string());
  f << text;
}

constexpr const char* kMetricsHeader = "epoch,lr,nat_train,rob_train,nat_test,rob_test,loss_adv,loss_cr,event";

std::string metrics_row(const EpochRecord& r) {
  return std::to_string(r.epoch) + "," + num(r.lr) + "," + num(r.nat_train) + "," + num(r.rob_train) + "," +
         num(r.nat_test) + "," + num(r.rob_test) + "," + num(r.loss_adv) + "," + num(r.loss_cr) + "," + r.event;
}

/// Keeps the header and the rows of epochs <= last_epoch, so a resumed run appends cleanly.
void truncate_metrics(const fs::path& path, int last_epoch) {
  std::ifstream in(path);
  if (!in) throw FormatError("resume: missing " + path.string());
  std::string line;
  std::string kept;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      if (line != kMetricsHeader) throw FormatError(path.string() + ": unexpected header");
      header = false;
      kept += line + "\n";
      continue;
    }
    if (line.empty()) continue;
    if (std::stoi(line.substr(0, line.find(','))) <= last_epoch) kept += line + "\n";
  }
  in.close();
  write_text(path, kept);
}

json report_json(const EvalReport& r) {
  return {{"best_epoch", r.best_epoch},     {"natural_best", r.natural_best}, {"natural_last", r.natural_last},
          {"robust_best", r.robust_best},   {"robust_last", r.robust_last},   {"delta", r.delta},
          {"tradeoff", r.tradeoff}};
}

template <typename Scalar>
struct Loaded {
  RunConfig cfg;
  Checkpoint ckpt;
  TrainState<Scalar> state;
  Splits<Scalar> data;
  TrainConfig train;
};

/// A checkpoint plus the data and config it was trained with (or --config).
template <typename Scalar>
Loaded<Scalar> load_for_eval(const Options& opt) {
  if (opt.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  if (!fs::exists(opt.checkpoint)) throw ConfigError("checkpoint not found: " + opt.checkpoint);
  Loaded<Scalar> l;
  l.ckpt = load_checkpoint(opt.checkpoint);
  l.cfg = resolve(opt, l.ckpt.config_text);
  l.state = restore_state<Scalar>(l.ckpt);
  l.data = cast_splits<Scalar>(load_splits(l.cfg));
  l.train = train_config(l.cfg, l.ckpt.seed);
  if (l.data.test.dim() != l.state.model.input_dim()) {
    throw ConfigError("checkpoint input width does not match the configured data");
  }
  return l;
}

fs::path eval_out_dir(const Options& opt) {
  fs::path dir = !opt.out.empty() ? fs::path(opt.out) : fs::path(opt.checkpoint).parent_path();
  if (dir.empty()) dir = ".";
  fs::create_directories(dir);
  return dir;
}

template <typename Scalar>
int cmd_train(const Options& opt) {
  const RunConfig cfg = resolve(opt);
  const auto data = cast_splits<Scalar>(load_splits(cfg));
  const auto widths = layer_widths(cfg, data.train.dim(), data.train.num_classes);
  const fs::path root(cfg.run.out);
  fs::create_directories(root);
  const std::string resolved = render_config(cfg);
  write_text(root / "config-resolved.txt", resolved);

  json summary = {{"mode", to_string(cfg.train.mode)}, {"seeds", json::array()}};
  EvalReport mean;
  for (auto seed : cfg.run.seeds) {
    const TrainConfig tc = train_config(cfg, seed);
    const std::uint64_t hash = config_hash(cfg, seed);
    const fs::path dir = root / ("seed-" + std::to_string(seed));
    fs::create_directories(dir);
    const fs::path metrics_path = dir / "metrics.csv";
    const fs::path last_path = dir / "last.ckpt";

    TrainState<Scalar> state;
    BestTracking best;
    if (opt.resume && fs::exists(last_path)) {
      const Checkpoint ckpt = load_checkpoint(last_path);
      if (ckpt.config_hash != hash) {
        throw RefusalError("refusing to resume " + last_path.string() + ": config hash differs from the checkpoint");
      }
      state = restore_state<Scalar>(ckpt);
      tc.validate(state.model.layer_count());
      best = ckpt.best;
      truncate_metrics(metrics_path, state.epoch);
    } else {
      state = init_state<Scalar>(tc, widths);
      write_text(metrics_path, std::string(kMetricsHeader) + "\n");
    }

    std::ofstream metrics(metrics_path, std::ios::app);
    if (!metrics) throw FormatError("cannot append to " + metrics_path.string());
    EpochRecord last;
    run_from(state, tc, data, [&](const EpochRecord& rec, const TrainState<Scalar>& s) {
      metrics << metrics_row(rec) << '\n';
      metrics.flush();
      if (rec.rob_val > best.rob_val) best = {rec.epoch, rec.rob_val, rec.rob_test, rec.nat_test};
      last = rec;
      const bool periodic = cfg.train.checkpoint_every > 0 && rec.epoch % cfg.train.checkpoint_every == 0;
      if (periodic || rec.epoch == tc.epochs) {
        const auto ckpt = make_checkpoint(s, tc, hash, best, resolved);
        if (periodic) {
          char name[32];
          std::snprintf(name, sizeof name, "epoch-%03d.ckpt", rec.epoch);
          save_checkpoint(ckpt, dir / name);
        }
        save_checkpoint(ckpt, last_path);
      }
    });
    if (last.epoch == 0) {
      // Resumed at the final epoch: nothing left to train, so re-evaluate the saved state.
      last.epoch = state.epoch;
      evaluate_epoch(state, data, tc, last);
    }

    // Best-versus-last from the tracked best and the final record.
    EvalReport r;
    r.best_epoch = best.epoch;
    r.natural_best = best.nat_test;
    r.robust_best = best.rob_test;
    r.natural_last = last.nat_test;
    r.robust_last = last.rob_test;
    r.delta = r.robust_last - r.robust_best;
    r.tradeoff = r.natural_last > 0 && r.robust_last > 0 ? tradeoff(100 * r.natural_last, 100 * r.robust_last) : 0.0;
    json seed_summary = report_json(r);
    seed_summary["seed"] = seed;
    write_text(dir / "summary.json", seed_summary.dump(2) + "\n");
    summary["seeds"].push_back(seed_summary);

    mean.natural_best += r.natural_best;
    mean.natural_last += r.natural_last;
    mean.robust_best += r.robust_best;
    mean.robust_last += r.robust_last;
    mean.delta += r.delta;
    mean.tradeoff += r.tradeoff;
  }
  const auto n = static_cast<double>(cfg.run.seeds.size());
  mean.natural_best /= n;
  mean.natural_last /= n;
  mean.robust_best /= n;
  mean.robust_last /= n;
  mean.delta /= n;
  mean.tradeoff /= n;
  json m = report_json(mean);
  m.erase("best_epoch");
  summary["mean"] = m;
  write_text(root / "summary.json", summary.dump(2) + "\n");

  std::printf("train mode=%s seeds=%zu nat_last=%.4f rob_best=%.4f rob_last=%.4f delta=%+.4f tradeoff=%.2f out=%s\n",
              to_string(cfg.train.mode).c_str(), cfg.run.seeds.size(), mean.natural_last, mean.robust_best,
              mean.robust_last, mean.delta, mean.tradeoff, root.string().c_str());
  return 0;
}

template <typename Scalar>
int cmd_eval(const Options& opt) {
  auto l = load_for_eval<Scalar>(opt);
  EpochRecord rec;
  rec.epoch = l.state.epoch;
  evaluate_epoch(l.state, l.data, l.train, rec);  // same attack stream as the training log
  const double delta = rec.rob_test - l.ckpt.best.rob_test;
  const double trade = rec.nat_test > 0 && rec.rob_test > 0 ? tradeoff(100 * rec.nat_test, 100 * rec.rob_test) : 0.0;
  json out = {{"checkpoint", opt.checkpoint}, {"epoch", rec.epoch},          {"natural", rec.nat_test},
              {"robust", rec.rob_test},       {"best_epoch", l.ckpt.best.epoch}, {"robust_best", l.ckpt.best.rob_test},
              {"delta", delta},               {"tradeoff", trade}};
  write_text(eval_out_dir(opt) / "eval.json", out.dump(2) + "\n");
  std::printf("eval epoch=%d natural=%.17g robust=%.17g robust_best=%.17g delta=%+.4f tradeoff=%.2f\n", rec.epoch,
              rec.nat_test, rec.rob_test, l.ckpt.best.rob_test, delta, trade);
  return 0;
}

template <typename Scalar>
int cmd_probe(const Options& opt) {
  auto l = load_for_eval<Scalar>(opt);
  Rng rng = derive_rng(l.ckpt.seed, {kProbeStream});
  const auto curve = flatness_probe(l.state.inference_model(), l.data.test, l.cfg.eval.sigmas, l.cfg.eval.trials, rng);
  std::string csv = "sigma,accuracy\n";
  for (const auto& p : curve) csv += num(p.x) + "," + num(p.accuracy) + "\n";
  write_text(eval_out_dir(opt) / "probe.csv", csv);
  std::printf("probe sigmas=%zu acc_first=%.4f acc_last=%.4f chance=%.4f\n", curve.size(),
              curve.empty() ? 0.0 : curve.front().accuracy, curve.empty() ? 0.0 : curve.back().accuracy,
              chance_accuracy(l.data.test.labels, l.data.test.num_classes));
  return 0;
}

template <typename Scalar>
int cmd_sweep_eps(const Options& opt) {
  auto l = load_for_eval<Scalar>(opt);
  std::string csv = "epsilon,robust_accuracy\n";
  double first = 0.0;
  double last = 0.0;
  for (std::size_t i = 0; i < l.cfg.eval.epsilons.size(); ++i) {
    // Each budget gets the evaluation stream used by eval, so a single-entry sweep reproduces it.
    Rng rng = derive_rng(l.ckpt.seed, {stream::kEval, static_cast<std::uint64_t>(l.state.epoch), 1});
    const auto point = epsilon_sweep(l.state.inference_model(), l.data.test, {l.cfg.eval.epsilons[i]},
                                     l.train.test_attack, rng);
    csv += num(point[0].x) + "," + num(point[0].accuracy) + "\n";
    if (i == 0) first = point[0].accuracy;
    last = point[0].accuracy;
  }
  write_text(eval_out_dir(opt) / "sweep-eps.csv", csv);
  std::printf("sweep-eps points=%zu acc_first=%.17g acc_last=%.17g\n", l.cfg.eval.epsilons.size(), first, last);
  return 0;
}

template <typename Scalar>
int cmd_corrupt_eval(const Options& opt) {
  auto l = load_for_eval<Scalar>(opt);
  std::vector<Corruption> kinds;
  for (const auto& name : l.cfg.eval.corruptions) kinds.push_back(parse_corruption(name));
  Rng rng = derive_rng(l.ckpt.seed, {kCorruptStream});
  const auto report = corruption_eval(l.state.inference_model(), l.data.test, kinds, l.cfg.eval.severities, rng);
  std::string csv = "corruption,severity,accuracy\n";
  for (const auto& c : report.cells) csv += to_string(c.kind) + "," + std::to_string(c.severity) + "," + num(c.accuracy) + "\n";
  csv += "mCA,," + num(report.mean_accuracy) + "\n";
  write_text(eval_out_dir(opt) / "corruption.csv", csv);
  std::printf("corrupt-eval cells=%zu mCA=%.4f\n", report.cells.size(), report.mean_accuracy);
  return 0;
}

template <typename Scalar>
int cmd_sweep_ablation(const Options& opt) {
  const RunConfig cfg = resolve(opt);
  const auto data = cast_splits<Scalar>(load_splits(cfg));
  const auto widths = layer_widths(cfg, data.train.dim(), data.train.num_classes);
  const AblationGrid grid{cfg.sweep.sparsity, cfg.sweep.relearn_epochs, cfg.sweep.layer_threshold};
  TrainConfig base = train_config(cfg, 0);
  base.mode = TrainMode::kFomo;
  const auto rows = ablation_sweep(grid, base, widths, data, cfg.run.seeds);

  const fs::path root(cfg.run.out);
  fs::create_directories(root);
  write_text(root / "config-resolved.txt", render_config(cfg));
  std::string csv = "sparsity,relearn_epochs,layer_threshold,seed,natural_last,robust_best,robust_last,delta,tradeoff\n";
  for (const auto& row : rows) {
    const std::string cell = num(row.sparsity) + "," + std::to_string(row.relearn_epochs) + "," +
                             std::to_string(row.layer_threshold) + ",";
    for (std::size_t i = 0; i < row.per_seed.size(); ++i) {
      const auto& r = row.per_seed[i];
      csv += cell + std::to_string(cfg.run.seeds[i]) + "," + num(r.natural_last) + "," + num(r.robust_best) + "," +
             num(r.robust_last) + "," + num(r.delta) + "," + num(r.tradeoff) + "\n";
    }
    csv += cell + "mean," + num(row.natural_last_mean) + ",," + num(row.robust_last_mean) + "," +
           num(row.delta_mean) + ",\n";
  }
  write_text(root / "ablation.csv", csv);
  std::printf("sweep-ablation cells=%zu seeds=%zu out=%s\n", rows.size(), cfg.run.seeds.size(),
              (root / "ablation.csv").string().c_str());
  return 0;
}

template <typename Scalar>
int dispatch(const std::string& command, const Options& opt) {
  if (command == "train") return cmd_train<Scalar>(opt);
  if (command == "eval") return cmd_eval<Scalar>(opt);
  if (command == "probe") return cmd_probe<Scalar>(opt);
  if (command == "sweep-eps") return cmd_sweep_eps<Scalar>(opt);
  if (command == "sweep-ablation") return cmd_sweep_ablation<Scalar>(opt);
  return cmd_corrupt_eval<Scalar>(opt);
}

/// Precision comes from --precision, else from the config (or the checkpoint's config).
int precision_of(const std::string& command, const Options& opt) {
  if (opt.precision) return *opt.precision;
  if (!opt.config.empty()) return parse_config(opt.config).run.precision;
  if (command != "train" && command != "sweep-ablation" && !opt.checkpoint.empty() && fs::exists(opt.checkpoint)) {
    return parse_config_text(load_checkpoint(opt.checkpoint).config_text).run.precision;
  }
  return 32;
}

}  // namespace
}  // namespace fomo

int main(int argc, char** argv) {
  using namespace fomo;
  CLI::App app{"Adversarial training with periodic forgetting, relearning and consolidation"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--seed", opt.seed, "single training seed (overrides run.seeds)");
    sub->add_option("--precision", opt.precision, "32 or 64")->check(CLI::IsMember({32, 64}));
  };
  auto* train = app.add_subcommand("train", "full training run; writes metrics.csv, checkpoints, summary.json");
  add_common(train);
  train->add_flag("--resume", opt.resume, "continue each seed from its last.ckpt");

  auto* ablation = app.add_subcommand("sweep-ablation", "sparsity x relearning x layer-threshold grid; writes ablation.csv");
  add_common(ablation);

  for (auto [name, help] : {std::pair{"eval", "natural/robust accuracy, delta vs recorded best, trade-off"},
                            std::pair{"probe", "flatness curve under Gaussian parameter noise"},
                            std::pair{"sweep-eps", "robust accuracy per attack budget"},
                            std::pair{"corrupt-eval", "accuracy under parametric corruptions and mCA"}}) {
    auto* sub = app.add_subcommand(name, help);
    add_common(sub);
    sub->add_option("--checkpoint", opt.checkpoint, "checkpoint file")->required();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the usage problem
    return code == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    return precision_of(command, opt) == 64 ? dispatch<double>(command, opt) : dispatch<float>(command, opt);
  } catch (const ConfigError& e) {  // includes refusals
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return 3;
  } catch (const ContractError& e) {
    std::fprintf(stderr, "contract violation: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
