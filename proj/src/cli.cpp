#include "ez/cli.hpp"

#include <iostream>

#include "CLI11.hpp"

#include "ez/modelhub.hpp"
#include "ez/pipeline.hpp"
#include "ez/reference.hpp"

namespace ez::cli {

namespace {

struct Options {
  std::string data_dir;
  std::string out;
  std::string train_dir;
  std::string valid_dir;
  std::string config;
  std::string model_dir;
  std::string model_id;
  std::string registry;
  std::string cache;
  std::size_t n_utts = 20;
  std::size_t n_classes = 4;
  std::int64_t seed = 0;
  int sample_rate = 16000;
  bool lora = false;
  bool augment = false;
};

int run_validate(const Options& opt) {
  try {
    manifest::load_data_directory(opt.data_dir);
  } catch (const manifest::ValidationError& e) {
    for (const auto& v : e.violations())
      std::cout << to_string(v.kind) << ' ' << v.id << ' ' << v.message << '\n';
    std::cerr << "ez: error: " << opt.data_dir << ": " << e.violations().size()
              << " violation(s)\n";
    return 1;
  }
  return 0;
}

int run_gen_toy(const Options& opt) {
  reference::ToyCorpusSpec spec;
  spec.n_utts = opt.n_utts;
  spec.n_classes = opt.n_classes;
  spec.seed = opt.seed;
  spec.sample_rate_hz = opt.sample_rate;
  reference::generate_toy_corpus(spec, opt.out);
  std::cout << "wrote " << spec.n_utts << " utterances to " << opt.out << '\n';
  return 0;
}

trainer::TrainConfig load_config(const Options& opt) {
  auto cfg = trainer::load_train_config(opt.config);
  if (opt.lora && !cfg.lora)
    raise(ErrorKind::BadConfig, "--lora passed but the config has no lora section");
  if (opt.augment && !cfg.augment)
    raise(ErrorKind::BadConfig, "--augment passed but the config has no augment section");
  if (!opt.lora) cfg.lora.reset();
  if (!opt.augment) cfg.augment.reset();
  return cfg;
}

int run_collect_stats(const Options& opt) {
  pipeline::run_collect_stats(opt.train_dir, load_config(opt), opt.out);
  std::cout << "stats written under " << opt.out << "/stats\n";
  return 0;
}

int run_train(const Options& opt) {
  auto outcome = pipeline::run_training(opt.train_dir, opt.valid_dir, load_config(opt), opt.out);
  const auto& result = outcome.result;
  std::cout << "trained " << result.epochs_run << " epoch(s), best epoch " << result.best_epoch
            << (result.stopped_early ? " (stopped early)" : "") << '\n';
  if (!result.history.empty()) {
    const auto& last = result.history.back();
    std::cout << "final train_loss " << last.train_loss << ", valid_loss " << last.valid_loss
              << '\n';
  }
  return 0;
}

int run_infer(const Options& opt) {
  pipeline::run_infer(opt.model_dir, opt.data_dir, opt.out);
  std::cout << "predictions written to " << opt.out << '\n';
  return 0;
}

int run_download(const Options& opt) {
  auto cache = opt.cache.empty() ? modelhub::default_cache_root()
                                 : std::filesystem::path(opt.cache);
  auto bundle = modelhub::from_pretrained(opt.model_id, cache, opt.registry);
  std::cout << bundle.config_path.parent_path().string() << '\n';
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("ez");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Recipe-free training and fine-tuning pipeline"};
  app.require_subcommand(1);
  Options opt;

  auto* validate = app.add_subcommand("validate-datadir", "Check a Kaldi-style data directory");
  validate->add_option("dir", opt.data_dir, "data directory")->required();

  auto* gen = app.add_subcommand("gen-toy", "Generate the deterministic toy corpus");
  gen->add_option("--out", opt.out, "output directory")->required();
  gen->add_option("--n", opt.n_utts, "number of utterances");
  gen->add_option("--classes", opt.n_classes, "number of classes");
  gen->add_option("--seed", opt.seed, "generation seed");
  gen->add_option("--sample-rate", opt.sample_rate, "sample rate in Hz");

  auto* stats_cmd = app.add_subcommand("collect-stats", "Run the statistics-collection phase");
  stats_cmd->add_option("--train-dir", opt.train_dir, "training data directory")->required();
  stats_cmd->add_option("--config", opt.config, "training config file")->required();
  stats_cmd->add_option("--out", opt.out, "experiment directory")->required();

  auto* train = app.add_subcommand("train", "Collect stats, then train the toy classifier");
  train->add_option("--config", opt.config, "training config file")->required();
  train->add_option("--train-dir", opt.train_dir, "training data directory")->required();
  train->add_option("--valid-dir", opt.valid_dir, "validation data directory")->required();
  train->add_option("--out", opt.out, "experiment directory")->required();
  train->add_flag("--lora", opt.lora, "enable the config's lora section");
  train->add_flag("--augment", opt.augment, "enable the config's augment section");

  auto* infer = app.add_subcommand("infer", "Predict with the best checkpoint");
  infer->add_option("--model-dir", opt.model_dir, "experiment directory")->required();
  infer->add_option("--data-dir", opt.data_dir, "data directory to predict on")->required();
  infer->add_option("--out", opt.out, "output TSV path")->required();

  auto* download = app.add_subcommand("download", "Fetch a model with from_pretrained semantics");
  download->add_option("--id", opt.model_id, "model id")->required();
  download->add_option("--registry", opt.registry, "registry path or URL")->required();
  download->add_option("--cache", opt.cache, "cache root (default: EZ_HOME)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "ez: error: " << e.what() << '\n';
    std::cerr << app.help();
    return 2;
  }

  try {
    if (validate->parsed()) return run_validate(opt);
    if (gen->parsed()) return run_gen_toy(opt);
    if (stats_cmd->parsed()) return run_collect_stats(opt);
    if (train->parsed()) return run_train(opt);
    if (infer->parsed()) return run_infer(opt);
    if (download->parsed()) return run_download(opt);
  } catch (const Error& e) {
    std::cerr << "ez: error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "ez: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace ez::cli
