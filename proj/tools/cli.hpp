#pragma once

// Command-line driver: pca, value, exact, baseline, select, correlate,
// gen-benchmark. Exit codes: 0 success, 1 usage error, 2 data/validation error.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "digest.hpp"
#include "tsdshap/tsdshap.hpp"

namespace tsdshap::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

inline constexpr std::size_t kLooConfirmThreshold = 50000;

class UsageError : public Error {
 public:
  using Error::Error;
};

struct Preset {
  const char* name;
  std::size_t subset_size;
  std::size_t chains;
};

// Subset sizes and chain counts used for SST-2, QQP and RTE.
inline constexpr Preset kPresets[] = {
    {"sst2", 6700, 25},
    {"qqp", 7280, 10},
    {"rte", 374, 25},
};

inline std::optional<Preset> find_preset(const std::string& name) {
  for (const auto& p : kPresets) {
    if (name == p.name) return p;
  }
  return std::nullopt;
}

inline std::size_t default_threads() {
  if (const char* env = std::getenv("TSDSHAP_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

struct DataFlags {
  std::string train_embeddings;
  std::string train_labels;
  std::string dev_embeddings;
  std::string dev_labels;
};

struct ClassifierFlags {
  double reg_c = 1.0;
  std::size_t epochs = 100;
  ClassifierConfig config() const { return {reg_c, epochs}; }
};

inline void add_data_flags(CLI::App* sub, DataFlags& f, bool labels = true) {
  sub->add_option("--train-embeddings", f.train_embeddings, "training matrix (TSDS binary or CSV)")
      ->required();
  sub->add_option("--dev-embeddings", f.dev_embeddings, "dev matrix (TSDS binary or CSV)")->required();
  if (labels) {
    sub->add_option("--train-labels", f.train_labels, "training labels, one per line")->required();
    sub->add_option("--dev-labels", f.dev_labels, "dev labels, one per line")->required();
  }
}

inline void add_classifier_flags(CLI::App* sub, ClassifierFlags& f) {
  sub->add_option("--reg-c", f.reg_c, "L2 regularization strength of the linear SVM")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--epochs", f.epochs, "training epochs of the linear SVM")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

struct LoadedData {
  Dataset dataset;
  std::vector<InputDigest> digests;
};

inline LoadedData load_data(const DataFlags& f) {
  LoadedData out;
  auto train_x = io::load_embedding_matrix(f.train_embeddings);
  auto train_y = io::load_labels(f.train_labels);
  auto dev_x = io::load_embedding_matrix(f.dev_embeddings);
  auto dev_y = io::load_labels(f.dev_labels);
  out.dataset = make_dataset(std::move(train_x), std::move(train_y), std::move(dev_x), std::move(dev_y));
  require_valid(out.dataset);
  out.digests = {{"train_embeddings", sha256_file(f.train_embeddings)},
                 {"train_labels", sha256_file(f.train_labels)},
                 {"dev_embeddings", sha256_file(f.dev_embeddings)},
                 {"dev_labels", sha256_file(f.dev_labels)}};
  return out;
}

inline ordered_json classifier_json(const ClassifierFlags& f) {
  ordered_json j;
  j["reg_c"] = f.reg_c;
  j["epochs"] = f.epochs;
  return j;
}

inline std::filesystem::path manifest_path(const std::filesystem::path& out) {
  return out.string() + ".manifest.json";
}

inline void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  io::write_text(path, dump_json(to_json(m)));
}

// Writes `result` JSON to `out` plus its manifest.
inline void emit_valuation(const ValuationResult& result, const LoadedData& data,
                           const std::string& command, const ordered_json& params,
                           std::size_t threads, const std::string& out) {
  io::write_text(out, dump_json(to_json(result, data.digests)));
  RunManifest m;
  m.command = command;
  m.parameters = params;
  m.parameters["threads"] = threads;
  m.inputs = data.digests;
  m.seed = result.seed;
  write_manifest(m, manifest_path(out));
}

class Driver {
 public:
  Driver(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(const std::vector<std::string>& args) {
    CLI::App app{"Shapley-based training data valuation and selection", "tsdshap"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    threads_ = default_threads();

    setup_pca(app);
    setup_value(app);
    setup_exact(app);
    setup_baseline(app);
    setup_select(app);
    setup_correlate(app);
    setup_gen_benchmark(app);

    std::vector<std::string> storage = args;
    std::vector<char*> argv;
    argv.push_back(const_cast<char*>("tsdshap"));
    for (auto& a : storage) argv.push_back(a.data());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out_, err_);
      return code == 0 ? kExitOk : kExitUsage;
    }
    try {
      action_();
    } catch (const UsageError& e) {
      err_ << "usage error: " << e.what() << "\n";
      return kExitUsage;
    } catch (const std::exception& e) {
      err_ << "error: " << e.what() << "\n";
      return kExitData;
    }
    return kExitOk;
  }

 private:
  void add_threads(CLI::App* sub) {
    sub->add_option("--threads", threads_, "worker threads (default $TSDSHAP_THREADS or 1)")
        ->check(CLI::PositiveNumber);
  }

  void setup_pca(CLI::App& app) {
    auto* sub = app.add_subcommand("pca", "fit PCA on embeddings and write reduced matrices");
    add_data_flags(sub, data_, false);
    sub->add_option("--pca-dims", pca_dims_, "number of principal components")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--fit-on", fit_on_, "rows used to fit: joint (train+dev) or train")
        ->check(CLI::IsMember({"joint", "train"}))
        ->capture_default_str();
    sub->add_option("--out", out_path_, "output directory for train.tsds and dev.tsds")->required();
    sub->callback([this] { action_ = [this] { do_pca(); }; });
  }

  void do_pca() {
    const auto train = io::load_embedding_matrix(data_.train_embeddings);
    const auto dev = io::load_embedding_matrix(data_.dev_embeddings);
    const auto fit_rows = fit_on_ == "train" ? train : stack_rows(train, dev);
    const auto model = fit_pca(fit_rows, pca_dims_);
    const std::filesystem::path dir(out_path_);
    std::filesystem::create_directories(dir);
    io::write_embedding_matrix(apply_pca(model, train), dir / "train.tsds");
    io::write_embedding_matrix(apply_pca(model, dev), dir / "dev.tsds");

    RunManifest m;
    m.command = "pca";
    m.parameters["pca_dims"] = pca_dims_;
    m.parameters["components_kept"] = model.output_dims();
    m.parameters["fit_on"] = fit_on_;
    m.parameters["explained_variance"] = model.explained_variance;
    m.inputs = {{"train_embeddings", sha256_file(data_.train_embeddings)},
                {"dev_embeddings", sha256_file(data_.dev_embeddings)}};
    write_manifest(m, dir / "pca.manifest.json");
    out_ << "kept " << model.output_dims() << " components; wrote " << (dir / "train.tsds").string()
         << " and " << (dir / "dev.tsds").string() << "\n";
  }

  void setup_value(CLI::App& app) {
    auto* sub = app.add_subcommand("value", "estimate values with multi-chain subset sampling");
    add_data_flags(sub, data_);
    add_classifier_flags(sub, clf_);
    add_threads(sub);
    sub->add_option("--subset-size", subset_size_, "sampling upper bound s on |S_t|")
        ->check(CLI::PositiveNumber);
    sub->add_option("--subset-size-pct", subset_pct_, "s as a percentage of the training set")
        ->check(CLI::Range(0.0, 100.0));
    sub->add_option("--chains", chains_, "number of sampling chains J")->check(CLI::PositiveNumber);
    sub->add_option("--iterations", iterations_, "iterations per chain T")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--preset", preset_, "install s and J of a benchmark: sst2, qqp, rte")
        ->check(CLI::IsMember({"sst2", "qqp", "rte"}));
    sub->add_option("--seed", seed_, "master seed")->capture_default_str();
    sub->add_option("--normalize", normalize_,
                    "per-chain mean: iterations (divide by T) or inclusions (divide by times sampled)")
        ->check(CLI::IsMember({"iterations", "inclusions"}))
        ->capture_default_str();
    sub->add_option("--out", out_path_, "output valuation JSON")->required();
    sub->callback([this] { action_ = [this] { do_value(); }; });
  }

  SamplingConfig resolve_sampling(std::size_t n) const {
    SamplingConfig cfg;
    std::optional<Preset> preset;
    if (!preset_.empty()) preset = find_preset(preset_);
    if (subset_size_) {
      cfg.subset_size = *subset_size_;
    } else if (subset_pct_) {
      const auto s = std::llround(*subset_pct_ / 100.0 * static_cast<double>(n));
      cfg.subset_size = static_cast<std::size_t>(std::max<long long>(1, s));
    } else if (preset) {
      cfg.subset_size = preset->subset_size;
    } else {
      throw UsageError("one of --subset-size, --subset-size-pct or --preset is required");
    }
    cfg.chains = chains_ ? *chains_ : (preset ? preset->chains : 1);
    cfg.iterations = iterations_;
    cfg.master_seed = seed_;
    cfg.normalization = normalize_ == "inclusions" ? Normalization::inclusions : Normalization::iterations;
    return cfg;
  }

  void do_value() {
    const auto data = load_data(data_);
    const std::size_t n = data.dataset.train_size();
    const auto cfg = resolve_sampling(n);
    const DevAccuracyValue value_fn(data.dataset, clf_.config());
    auto result = estimate_values(value_fn, n, cfg, threads_);

    ordered_json config;
    config["n"] = n;
    config["subset_size"] = cfg.subset_size;
    config["iterations"] = cfg.iterations;
    config["chains"] = cfg.chains;
    config["normalization"] = normalize_;
    config["preset"] = preset_.empty() ? ordered_json(nullptr) : ordered_json(preset_);
    config["classifier"] = classifier_json(clf_);
    result.config_echo = config.dump();
    emit_valuation(result, data, "value", config, threads_, out_path_);
    out_ << "valued " << n << " instances (s=" << cfg.subset_size << ", T=" << cfg.iterations
         << ", J=" << cfg.chains << ") -> " << out_path_ << "\n";
  }

  void setup_exact(CLI::App& app) {
    auto* sub = app.add_subcommand("exact", "exact Shapley values by subset enumeration (n <= 20)");
    add_data_flags(sub, data_);
    add_classifier_flags(sub, clf_);
    add_threads(sub);
    sub->add_option("--out", out_path_, "output valuation JSON")->required();
    sub->callback([this] { action_ = [this] { do_exact(); }; });
  }

  void do_exact() {
    const auto data = load_data(data_);
    const std::size_t n = data.dataset.train_size();
    const DevAccuracyValue value_fn(data.dataset, clf_.config());
    auto result = exact_shapley(value_fn, n, threads_);
    ordered_json config;
    config["n"] = n;
    config["classifier"] = classifier_json(clf_);
    result.config_echo = config.dump();
    emit_valuation(result, data, "exact", config, threads_, out_path_);
    out_ << "exact values for " << n << " instances -> " << out_path_ << "\n";
  }

  void setup_baseline(CLI::App& app) {
    auto* sub = app.add_subcommand("baseline", "baseline valuations: loo, knn, random");
    add_data_flags(sub, data_);
    add_classifier_flags(sub, clf_);
    add_threads(sub);
    sub->add_option("--method", method_, "loo | knn | random")
        ->required()
        ->check(CLI::IsMember({"loo", "knn", "random"}));
    sub->add_option("--knn-k", knn_k_, "neighbors for KNN-Shapley")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--remove", remove_,
                    "random: number of instances to drop; writes kept indices instead of values");
    sub->add_option("--seed", seed_, "seed for --method random")->capture_default_str();
    sub->add_flag("--confirm-expensive", confirm_expensive_,
                  "allow leave-one-out above 50000 training instances");
    sub->add_option("--out", out_path_, "output file")->required();
    sub->callback([this] { action_ = [this] { do_baseline(); }; });
  }

  void do_baseline() {
    const auto data = load_data(data_);
    const std::size_t n = data.dataset.train_size();
    ordered_json config;
    config["n"] = n;
    config["method"] = method_;
    if (method_ == "loo") {
      if (n > kLooConfirmThreshold) {
        err_ << "leave-one-out will train the classifier " << (n + 1) << " times on up to " << n
             << " instances (" << clf_.epochs << " epochs each)\n";
        if (!confirm_expensive_) {
          throw UsageError("leave-one-out above " + std::to_string(kLooConfirmThreshold) +
                           " instances requires --confirm-expensive");
        }
      }
      config["classifier"] = classifier_json(clf_);
      auto result = loo_values(data.dataset, clf_.config(), threads_);
      result.config_echo = config.dump();
      emit_valuation(result, data, "baseline", config, threads_, out_path_);
    } else if (method_ == "knn") {
      config["knn_k"] = knn_k_;
      auto result = knn_shapley_values(data.dataset, knn_k_, threads_);
      result.config_echo = config.dump();
      emit_valuation(result, data, "baseline", config, threads_, out_path_);
    } else if (remove_) {
      const auto kept = random_removal(n, *remove_, seed_);
      config["remove"] = *remove_;
      io::write_indices(kept, out_path_);
      RunManifest m{"baseline", config, data.digests, seed_};
      m.parameters["threads"] = threads_;
      write_manifest(m, manifest_path(out_path_));
    } else {
      // Uniform random values; selecting on them removes a random prefix.
      ValuationResult result;
      result.method = Method::random;
      result.seed = seed_;
      Rng rng(mix_seed(seed_, 0));
      result.values.resize(n);
      for (double& v : result.values) v = rng.uniform();
      result.config_echo = config.dump();
      emit_valuation(result, data, "baseline", config, threads_, out_path_);
    }
    out_ << method_ << " baseline for " << n << " instances -> " << out_path_ << "\n";
  }

  void setup_select(CLI::App& app) {
    auto* sub = app.add_subcommand("select", "removal curve and optimal kept subset from values");
    add_data_flags(sub, data_);
    add_classifier_flags(sub, clf_);
    add_threads(sub);
    sub->add_option("--values", values_path_, "valuation JSON from value/exact/baseline")->required();
    sub->add_option("--step", step_, "instances removed per curve step (default max(1, n/100))")
        ->check(CLI::PositiveNumber);
    sub->add_option("--curve", curve_path_, "removal curve CSV (default <out>.curve.csv)");
    sub->add_option("--out", out_path_, "kept training indices, one per line")->required();
    sub->callback([this] { action_ = [this] { do_select(); }; });
  }

  void do_select() {
    auto data = load_data(data_);
    data.digests.push_back({"values", sha256_file(values_path_)});
    const auto values = load_valuation(values_path_);
    const std::size_t n = data.dataset.train_size();
    const std::size_t step = step_ ? *step_ : default_step(n);
    const auto curve = removal_curve(values, data.dataset, step, clf_.config(), threads_);
    const auto selection = select_from_curve(curve);

    io::write_indices(selection.kept_indices, out_path_);
    const std::string curve_path = curve_path_.empty() ? out_path_ + ".curve.csv" : curve_path_;
    io::write_text(curve_path, format_curve_csv(curve));

    RunManifest m;
    m.command = "select";
    m.parameters["step"] = step;
    m.parameters["classifier"] = classifier_json(clf_);
    m.parameters["optimal_removed"] = selection.optimal_removed;
    m.parameters["best_dev_accuracy"] = selection.best_dev_accuracy;
    m.parameters["threads"] = threads_;
    m.inputs = data.digests;
    m.seed = values.seed;
    write_manifest(m, manifest_path(out_path_));

    char acc[32];
    std::snprintf(acc, sizeof acc, "%.6f", selection.best_dev_accuracy);
    out_ << "removed " << selection.optimal_removed << " of " << n << " instances, best dev accuracy "
         << acc << " -> " << out_path_ << "\n";
  }

  void setup_correlate(CLI::App& app) {
    auto* sub = app.add_subcommand("correlate", "Pearson correlations from a hyperparameter sweep");
    sub->add_option("--records", records_path_,
                    "sweep CSV: subset_size_pct,chains,performance,trial")
        ->required();
    sub->add_option("--vary", vary_, "parameter correlated with performance: chains or subset-size")
        ->check(CLI::IsMember({"chains", "subset-size"}))
        ->capture_default_str();
    sub->add_option("--out", out_path_, "correlation table CSV")->required();
    sub->callback([this] { action_ = [this] { do_correlate(); }; });
  }

  void do_correlate() {
    const auto records = parse_sweep_csv(io::detail::read_file(records_path_));
    const auto axis = vary_ == "chains" ? SweepAxis::chains : SweepAxis::subset_size;
    const auto rows = sweep_correlations(records, axis);
    io::write_text(out_path_, format_correlations_csv(rows, axis));
    RunManifest m;
    m.command = "correlate";
    m.parameters["vary"] = vary_;
    m.inputs = {{"records", sha256_file(records_path_)}};
    write_manifest(m, manifest_path(out_path_));
    out_ << format_correlations_table(rows, axis);
  }

  void setup_gen_benchmark(CLI::App& app) {
    auto* sub = app.add_subcommand("gen-benchmark", "write a two-Gaussian benchmark with flipped labels");
    sub->add_option("--n", bench_.n, "training instances")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--dims", bench_.dims, "feature dimensions")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--flip", bench_.flip_fraction, "fraction of training labels flipped")
        ->check(CLI::Range(0.0, 0.5))
        ->capture_default_str();
    sub->add_option("--separation", bench_.separation, "distance between class means in sigma")
        ->capture_default_str();
    sub->add_option("--dev-size", bench_.dev_size, "dev instances (default n/4)");
    sub->add_option("--seed", seed_, "generator seed")->capture_default_str();
    sub->add_option("--out", out_path_, "output directory")->required();
    sub->callback([this] { action_ = [this] { do_gen_benchmark(); }; });
  }

  void do_gen_benchmark() {
    bench_.seed = seed_;
    const auto bench = generate_noisy_benchmark(bench_);
    const std::filesystem::path dir(out_path_);
    std::filesystem::create_directories(dir);
    io::write_embedding_matrix(bench.dataset.train_features, dir / "train.tsds");
    io::write_labels(bench.dataset.train_labels, dir / "train.labels");
    io::write_embedding_matrix(bench.dataset.dev_features, dir / "dev.tsds");
    io::write_labels(bench.dataset.dev_labels, dir / "dev.labels");
    io::write_indices(bench.flipped, dir / "flipped.txt");
    RunManifest m;
    m.command = "gen-benchmark";
    m.parameters["n"] = bench_.n;
    m.parameters["dims"] = bench_.dims;
    m.parameters["flip"] = bench_.flip_fraction;
    m.parameters["separation"] = bench_.separation;
    m.parameters["dev_size"] = bench.dataset.dev_labels.size();
    m.seed = seed_;
    write_manifest(m, dir / "benchmark.manifest.json");
    out_ << "wrote benchmark (" << bench_.n << " train, " << bench.dataset.dev_labels.size()
         << " dev, " << bench.flipped.size() << " flipped) to " << dir.string() << "\n";
  }

  std::ostream& out_;
  std::ostream& err_;
  std::function<void()> action_;

  DataFlags data_;
  ClassifierFlags clf_;
  std::size_t threads_ = 1;
  std::string out_path_;
  std::uint64_t seed_ = 0;

  std::size_t pca_dims_ = 32;
  std::string fit_on_ = "joint";

  std::optional<std::size_t> subset_size_;
  std::optional<double> subset_pct_;
  std::optional<std::size_t> chains_;
  std::size_t iterations_ = 50;
  std::string preset_;
  std::string normalize_ = "iterations";

  std::string method_;
  std::size_t knn_k_ = 5;
  std::optional<std::size_t> remove_;
  bool confirm_expensive_ = false;

  std::string values_path_;
  std::optional<std::size_t> step_;
  std::string curve_path_;

  std::string records_path_;
  std::string vary_ = "chains";

  BenchmarkConfig bench_;
};

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  return Driver(out, err).run(args);
}

}  // namespace tsdshap::cli
