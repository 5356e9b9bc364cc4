// actgen: stochastic skeleton-action sequence generation toolkit.
//
// Subcommands: synth-data, pretrain, train, generate, evaluate, render.
// Every command is deterministic given its flags and seeds.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "actgen/data.hpp"
#include "actgen/eval.hpp"
#include "actgen/generator.hpp"
#include "actgen/render.hpp"
#include "actgen/training.hpp"

namespace {

using actgen::Dataset;
using actgen::LabelDistribution;
using actgen::ModelState;
using actgen::TrainingConfig;

struct PathConfig {
  std::string data;
  std::string output;
  std::string log;
  std::string decoder_init;
};

// Run configuration file: the TrainingConfig keys plus optional path keys
// (data, output, log, decoder_init). Unknown keys are rejected. CLI flags
// override file values because the file is loaded before flag parsing.
void load_run_config(const std::string& path, TrainingConfig& config, PathConfig& paths) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();

  nlohmann::json j = nlohmann::json::parse(buf.str());
  if (!j.is_object()) throw std::runtime_error("config file must hold a JSON object");

  nlohmann::json training_part = nlohmann::json::object();
  for (const auto& [key, value] : j.items()) {
    if (key == "data") paths.data = value.get<std::string>();
    else if (key == "output") paths.output = value.get<std::string>();
    else if (key == "log") paths.log = value.get<std::string>();
    else if (key == "decoder_init") paths.decoder_init = value.get<std::string>();
    else training_part[key] = value;
  }
  config = actgen::training_config_from_json(training_part.dump());
}

// --config must take effect before the other flags bind, so it is pre-scanned.
std::string find_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  return "";
}

std::vector<double> parse_weights(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  if (out.empty()) throw std::runtime_error("empty weight list");
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_log_csv(const std::string& path, const std::vector<actgen::TrainLogRow>& log) {
  std::ostringstream csv;
  csv << "iteration,loss_D,loss_adv_G,loss_smooth,loss_cls_real,loss_cycle\n";
  char buf[64];
  for (const actgen::TrainLogRow& r : log) {
    csv << r.iteration;
    for (double v : {r.loss_d, r.loss_adv_g, r.loss_smooth, r.loss_cls_real, r.loss_cycle}) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      csv << ',' << buf;
    }
    csv << '\n';
  }
  write_text(path, csv.str());
}

Dataset empty_generated_shell(const ModelState& state) {
  Dataset out;
  out.classes = state.classes();
  out.dim = state.pose_dim();
  out.norm = actgen::NormStats::identity(out.dim);
  for (std::size_t c = 0; c < out.classes; ++c) out.class_names.push_back("class" + std::to_string(c));
  return out;
}

Dataset generated_dataset(const ModelState& state, std::size_t per_class, std::size_t seq_len,
                          std::uint64_t seed) {
  Dataset out = empty_generated_shell(state);
  std::uint64_t counter = 0;
  for (std::size_t c = 0; c < out.classes; ++c) {
    LabelDistribution label = LabelDistribution::one_hot(out.classes, c);
    for (std::size_t i = 0; i < per_class; ++i) {
      auto [seq, traj] = actgen::generate_sequence(state.gen, label, seq_len,
                                                   actgen::Rng::derive(seed, counter++),
                                                   state.config.direct_latent);
      out.records.push_back({std::move(seq), label});
    }
  }
  return out;
}

int cmd_synth_data(std::size_t classes, std::size_t per_class, std::size_t seq_len, std::size_t dim,
                   double noise, std::uint64_t seed, const std::string& output) {
  Dataset ds = actgen::synthesize_dataset(actgen::default_class_specs(classes), per_class, seq_len,
                                          dim, noise, seed);
  actgen::save_dataset(ds, output);
  std::cout << "wrote " << ds.records.size() << " sequences (" << classes << " classes, T="
            << seq_len << ", d=" << dim << ") to " << output << "\n";
  return 0;
}

int cmd_pretrain(const TrainingConfig& config, const PathConfig& paths) {
  Dataset ds = actgen::load_dataset(paths.data);
  actgen::MlpParams decoder =
      actgen::pretrain_decoder(ds, config, actgen::Rng::derive(config.seed, 2));
  actgen::save_decoder_checkpoint(decoder, paths.output);
  std::cout << "wrote pretrained decoder to " << paths.output << "\n";
  return 0;
}

int cmd_train(TrainingConfig config, const PathConfig& paths, const std::string& resume,
              bool normalize_data) {
  Dataset ds = actgen::load_dataset(paths.data);
  if (normalize_data) ds = actgen::normalize(ds).first;

  actgen::TrainHooks hooks;
  std::size_t checkpoints = 0;
  if (config.checkpoint_interval > 0) {
    hooks.on_checkpoint = [&](const ModelState& s) {
      actgen::save_checkpoint(s, paths.output + "." + std::to_string(s.iteration));
      ++checkpoints;
    };
  }

  actgen::TrainResult result;
  if (!resume.empty()) {
    ModelState state = actgen::load_checkpoint(resume);
    if (config.iterations > 0) state.config.iterations = config.iterations;
    state.config.checkpoint_interval = config.checkpoint_interval;
    result = actgen::train_from(ds, std::move(state), hooks);
  } else if (!paths.decoder_init.empty()) {
    ModelState state = actgen::init_model_state(ds, config);
    state.gen.decoder = actgen::load_decoder_checkpoint(paths.decoder_init);
    if (state.gen.decoder.input_dim() != config.latent_dim + ds.classes ||
        state.gen.decoder.output_dim() != ds.dim) {
      throw std::runtime_error("decoder checkpoint dimensions do not match the config/dataset");
    }
    result = actgen::train_from(ds, std::move(state), hooks);
  } else {
    result = actgen::train(ds, config, hooks);
  }

  actgen::save_checkpoint(result.state, paths.output);
  if (!paths.log.empty()) write_log_csv(paths.log, result.log);
  std::cout << "trained to iteration " << result.state.iteration << "; checkpoint " << paths.output;
  if (checkpoints > 0) std::cout << " (+" << checkpoints << " periodic)";
  std::cout << "\n";
  return 0;
}

int cmd_generate(const std::string& checkpoint, int label_index, const std::string& mix_csv,
                 std::size_t count, std::size_t seq_len, std::uint64_t seed,
                 const std::string& output) {
  ModelState state = actgen::load_checkpoint(checkpoint);

  LabelDistribution label = LabelDistribution::one_hot(state.classes(), 0);
  if (!mix_csv.empty()) {
    std::vector<double> w = parse_weights(mix_csv);
    if (w.size() != state.classes()) {
      throw std::runtime_error("mix weights have length " + std::to_string(w.size()) +
                               ", checkpoint has " + std::to_string(state.classes()) + " classes");
    }
    label = actgen::mix_labels(w);
  } else if (label_index >= 0) {
    label = LabelDistribution::one_hot(state.classes(), static_cast<std::size_t>(label_index));
  } else {
    throw std::runtime_error("one of --label or --mix is required");
  }

  Dataset out = empty_generated_shell(state);
  for (std::size_t i = 0; i < count; ++i) {
    auto [seq, traj] = actgen::generate_sequence(state.gen, label, seq_len,
                                                 actgen::Rng::derive(seed, i),
                                                 state.config.direct_latent);
    out.records.push_back({std::move(seq), label});
  }
  actgen::save_dataset(out, output);
  std::cout << "wrote " << count << " generated sequences to " << output << "\n";
  return 0;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& real_path,
                 const std::string& generated_path, std::size_t samples_per_class,
                 std::uint64_t seed, const std::string& output) {
  ModelState state = actgen::load_checkpoint(checkpoint);
  Dataset real = actgen::load_dataset(real_path);
  if (real.classes != state.classes()) {
    throw std::runtime_error("class count mismatch: checkpoint has " + std::to_string(state.classes()) +
                             ", test set has " + std::to_string(real.classes));
  }
  if (real.dim != state.pose_dim()) {
    throw std::runtime_error("pose dimension mismatch between checkpoint and test set");
  }

  std::vector<actgen::SequenceSet> real_sets = actgen::dataset_by_class(real);
  std::size_t ref_len = actgen::reference_length(real_sets);

  Dataset generated;
  if (!generated_path.empty()) {
    generated = actgen::load_dataset(generated_path);
    if (generated.classes != real.classes || generated.dim != real.dim) {
      throw std::runtime_error("generated set does not match the test set layout");
    }
  } else {
    generated = generated_dataset(state, samples_per_class, ref_len, actgen::Rng::derive(seed, 100));
  }
  std::vector<actgen::SequenceSet> gen_sets = actgen::dataset_by_class(generated);

  actgen::EvalReport report;
  report.mmd_avg = actgen::mmd_avg(gen_sets, real_sets);
  report.mmd_seq = actgen::mmd_seq(gen_sets, real_sets);
  report.accuracy_real = actgen::classification_accuracy(state.cls, real, samples_per_class,
                                                         actgen::Rng::derive(seed, 101));
  report.accuracy_generated = actgen::classification_accuracy(state.cls, generated, samples_per_class,
                                                              actgen::Rng::derive(seed, 102));
  for (std::size_t c = 0; c < real.classes; ++c) {
    report.diversity_generated.push_back(actgen::diversity_std(gen_sets[c]));
    report.diversity_real.push_back(actgen::diversity_std(real_sets[c]));
  }
  report.classes = real.classes;
  report.samples_per_class = samples_per_class;
  report.reference_len = ref_len;
  report.seed = seed;

  write_text(output, report.to_json() + "\n");
  std::cout << "mmd_avg=" << report.mmd_avg << " mmd_seq=" << report.mmd_seq
            << " acc_real=" << report.accuracy_real.mean
            << " acc_gen=" << report.accuracy_generated.mean << "\nreport written to " << output
            << "\n";
  return 0;
}

int cmd_render(const std::string& data_path, const std::string& topology_path,
               const std::string& prefix, std::size_t limit) {
  Dataset ds = actgen::load_dataset(data_path);
  actgen::SkeletonTopology topo = actgen::load_topology(topology_path);

  std::size_t n = ds.records.size();
  if (limit > 0) n = std::min(n, limit);
  for (std::size_t i = 0; i < n; ++i) {
    char suffix[16];
    std::snprintf(suffix, sizeof(suffix), "_%03zu", i);
    write_text(prefix + suffix + ".svg", actgen::render_svg(ds.records[i].sequence, topo));
    write_text(prefix + suffix + ".csv", actgen::render_csv(ds.records[i].sequence));
  }
  std::cout << "rendered " << n << " sequences to " << prefix << "_*.svg/.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic skeleton-action sequence generation toolkit"};
  app.require_subcommand(1);

  TrainingConfig config;
  PathConfig paths;
  std::string config_path = find_config_arg(argc, argv);
  if (!config_path.empty()) {
    try {
      load_run_config(config_path, config, paths);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }

  // ---- synth-data ----
  auto* synth = app.add_subcommand("synth-data", "synthesize a harmonic-trajectory dataset");
  std::size_t sd_classes = 3, sd_per_class = 100, sd_T = 16, sd_dim = 8;
  double sd_noise = 0.05;
  std::uint64_t sd_seed = 0;
  std::string sd_out;
  synth->add_option("--classes", sd_classes, "number of action classes")->capture_default_str();
  synth->add_option("--per-class", sd_per_class, "sequences per class")->capture_default_str();
  synth->add_option("--T", sd_T, "frames per sequence")->capture_default_str();
  synth->add_option("--dim", sd_dim, "pose dimension (must be even)")->capture_default_str();
  synth->add_option("--noise", sd_noise, "Gaussian jitter scale")->capture_default_str();
  synth->add_option("--seed", sd_seed, "rng seed")->capture_default_str();
  synth->add_option("-o,--output", sd_out, "output dataset (JSONL)")->required();

  std::string ablation, resume, config_path_opt;
  bool normalize_data = false;

  auto add_training_flags = [&](CLI::App* cmd, bool with_train_extras) {
    cmd->add_option("--config", config_path_opt, "JSON run config (flags override file values)");
    cmd->add_option("--data", paths.data, "training dataset (JSONL)");
    cmd->add_option("-o,--output", paths.output, "output checkpoint path");
    cmd->add_option("--seed", config.seed, "run seed")->capture_default_str();
    cmd->add_option("--batch-size", config.batch_size, "minibatch size m")->capture_default_str();
    cmd->add_option("--lr-pretrain", config.lr_pretrain, "pretraining learning rate")
        ->capture_default_str();
    cmd->add_option("--pretrain-iters", config.pretrain_iterations, "decoder pretraining iterations")
        ->capture_default_str();
    cmd->add_option("--latent-dim", config.latent_dim, "latent frame dimension")->capture_default_str();
    cmd->add_option("--noise-dim", config.noise_dim, "noise input dimension")->capture_default_str();
    cmd->add_option("--lambda", config.lambda_gp, "gradient penalty weight")->capture_default_str();
    if (with_train_extras) {
      cmd->add_option("--iters", config.iterations, "training iterations")->capture_default_str();
      cmd->add_option("--T", config.seq_len, "training sequence length")->capture_default_str();
      cmd->add_option("--lr", config.lr_main, "main loop learning rate")->capture_default_str();
      cmd->add_option("--gamma", config.gamma_cycle, "cycle / supervised CE weight")
          ->capture_default_str();
      cmd->add_option("--sigma1", config.sigma_latent, "latent smoothness weight")
          ->capture_default_str();
      cmd->add_option("--sigma2", config.sigma_action, "action smoothness weight")
          ->capture_default_str();
      cmd->add_option("--disc-steps", config.disc_steps, "discriminator steps per iteration (K)")
          ->capture_default_str();
      cmd->add_option("--ablation", ablation,
                      "ablation: none|no-smoothness|latent-only|action-only|no-cycle|direct-latent");
      cmd->add_option("--decoder-init", paths.decoder_init, "pretrained decoder checkpoint");
      cmd->add_option("--resume", resume, "resume training from a model checkpoint");
      cmd->add_option("--checkpoint-interval", config.checkpoint_interval,
                      "write <output>.<iter> every N iterations (0 = off)")
          ->capture_default_str();
      cmd->add_option("--log", paths.log, "training log CSV path");
      cmd->add_flag("--normalize", normalize_data, "standardize the dataset before training");
    }
  };

  auto* pretrain = app.add_subcommand("pretrain", "WGAN-GP pretraining of the frame decoder");
  add_training_flags(pretrain, false);

  auto* train = app.add_subcommand("train", "adversarial training of the full model");
  add_training_flags(train, true);

  // ---- generate ----
  auto* generate = app.add_subcommand("generate", "sample sequences from a trained model");
  std::string g_checkpoint, g_mix, g_out;
  int g_label = -1;
  std::size_t g_count = 5, g_T = 16;
  std::uint64_t g_seed = 0;
  generate->add_option("--checkpoint", g_checkpoint, "model checkpoint")->required();
  generate->add_option("--label", g_label, "one-hot class index");
  generate->add_option("--mix", g_mix, "comma-separated class mixing weights (normalized)");
  generate->add_option("--count", g_count, "number of sequences")->capture_default_str();
  generate->add_option("--T", g_T, "frames per sequence")->capture_default_str();
  generate->add_option("--seed", g_seed, "rng seed")->capture_default_str();
  generate->add_option("-o,--output", g_out, "output dataset (JSONL)")->required();

  // ---- evaluate ----
  auto* evaluate = app.add_subcommand("evaluate", "MMD, accuracy and diversity report");
  std::string e_checkpoint, e_real, e_generated, e_out;
  std::size_t e_samples = 100;
  std::uint64_t e_seed = 0;
  evaluate->add_option("--checkpoint", e_checkpoint, "model checkpoint")->required();
  evaluate->add_option("--real", e_real, "real test dataset (JSONL)")->required();
  evaluate->add_option("--generated", e_generated,
                       "pre-generated dataset; skips sampling from the checkpoint");
  evaluate->add_option("--samples-per-class", e_samples, "generated samples per class")
      ->capture_default_str();
  evaluate->add_option("--seed", e_seed, "rng seed")->capture_default_str();
  evaluate->add_option("-o,--output", e_out, "report JSON path")->required();

  // ---- render ----
  auto* render = app.add_subcommand("render", "stick-figure SVG strips and trajectory CSVs");
  std::string r_data, r_topology, r_prefix;
  std::size_t r_limit = 0;
  render->add_option("--data", r_data, "dataset to render (JSONL)")->required();
  render->add_option("--topology", r_topology, "skeleton topology JSON (array of [i,j] bones)")
      ->required();
  render->add_option("-o,--output", r_prefix, "output file prefix")->required();
  render->add_option("--limit", r_limit, "render at most N sequences (0 = all)")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      return cmd_synth_data(sd_classes, sd_per_class, sd_T, sd_dim, sd_noise, sd_seed, sd_out);
    }
    if (pretrain->parsed() || train->parsed()) {
      if (!ablation.empty()) config.apply_ablation(ablation);
      if (paths.data.empty()) throw std::runtime_error("--data (or config 'data') is required");
      if (paths.output.empty()) throw std::runtime_error("--output (or config 'output') is required");
      config.validate();
      return pretrain->parsed() ? cmd_pretrain(config, paths)
                                : cmd_train(config, paths, resume, normalize_data);
    }
    if (generate->parsed()) {
      return cmd_generate(g_checkpoint, g_label, g_mix, g_count, g_T, g_seed, g_out);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(e_checkpoint, e_real, e_generated, e_samples, e_seed, e_out);
    }
    if (render->parsed()) {
      return cmd_render(r_data, r_topology, r_prefix, r_limit);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
