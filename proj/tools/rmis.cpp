// rmis: data generation, training, evaluation, landscapes and benchmarks.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 runtime error
// (I/O, format, numerical divergence).

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>

#include "rmis/bench.hpp"
#include "rmis/binary_io.hpp"
#include "rmis/checkpoint.hpp"
#include "rmis/dataset.hpp"
#include "rmis/error.hpp"
#include "rmis/ising_energy.hpp"
#include "rmis/metrics.hpp"
#include "rmis/mlp_energy.hpp"
#include "rmis/toy2d.hpp"
#include "rmis/trainer.hpp"

#ifndef RMIS_VERSION
#define RMIS_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using namespace rmis;

namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 3;

using Clock = std::chrono::steady_clock;

std::string output_path(const std::string& p) {
  const char* base = std::getenv("RMIS_OUTPUT_DIR");
  if (base == nullptr || *base == '\0' || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).string();
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Options of `sub` in the form `--config` reads back, plus a [run] section
// the parser ignores.
void write_run_manifest(const std::string& path, const CLI::App& sub, Clock::time_point start,
                        const std::vector<std::string>& outputs) {
  std::string text = "[" + sub.get_name() + "]\n" + sub.config_to_str(true, false);
  text += "\n[run]\ncommand=\"" + sub.get_name() + "\"\n";
  text += "version=\"" RMIS_VERSION "\"\n";
  text += "wall_ms=" +
          num(std::chrono::duration<double, std::milli>(Clock::now() - start).count()) + "\n";
  std::string joined;
  for (const auto& o : outputs) joined += (joined.empty() ? "" : ",") + o;
  text += "outputs=\"" + joined + "\"\n";
  io::write_file_atomic(path, text);
}

std::string manifest_value(const BitDataset& ds, const std::string& key) {
  auto it = ds.manifest.find(key);
  return it == ds.manifest.end() ? std::string() : it->second;
}

struct GenDataArgs {
  std::string dist;
  bool ising = false;
  std::size_t bits = 16;
  std::size_t n = 100000;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t side = 25;
  double sigma = 0.25;
  std::size_t steps = 1000000;
  std::string encoding = "pm1";
};

struct TrainArgs {
  std::string data;
  std::string model = "auto";
  std::string estimator = "rmwggis-adv";
  std::size_t s = 10;
  std::size_t batch = 256;
  std::size_t width = 256;
  std::size_t depth = 3;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t iterations = 1000;
  std::uint64_t seed = 0;
  std::uint64_t eval_every = 0;
  std::uint64_t checkpoint_every = 0;
  double l1 = 0.0;
  double clamp = 30.0;
  std::string term = "ratio";
  std::size_t max_chunk_rows = 8192;
  std::string out_dir;
  std::string resume;
  bool eval_mmd = false;
  std::size_t eval_samples = 4000;
  std::size_t gibbs_chains = 100;
  std::size_t gibbs_burn_in = 1000;
  std::size_t gibbs_thin = 10;
};

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string metric = "objective";
  std::size_t n_samples = 4000;
  std::size_t gibbs_chains = 100;
  std::size_t gibbs_burn_in = 1000;
  std::size_t gibbs_thin = 10;
  std::uint64_t seed = 0;
  std::size_t true_side = 0;
  double true_sigma = 0.25;
  std::string out = "eval.json";
};

struct LandscapeArgs {
  std::string checkpoint;
  std::size_t resolution = 100;
  std::string out = "landscape.csv";
};

struct BenchArgs {
  BenchConfig cfg;
  std::string out = "bench.txt";
};

int cmd_gen_data(const GenDataArgs& a, const CLI::App& sub) {
  const auto start = Clock::now();
  if (a.dist.empty() == !a.ising) {
    throw ConfigError("gen-data needs exactly one of --dist or --ising");
  }
  RngStream rng(a.seed, 0);
  BitDataset ds;
  if (a.ising) {
    const IsingEnergy truth =
        IsingEnergy::lattice(a.side, a.sigma, spin_encoding_from_string(a.encoding));
    ds = gen_ising_data(truth, a.n, a.steps, rng);
  } else {
    ds = encode_dataset({a.dist, a.n, GrayCodec(a.bits, kToyLo, kToyHi)}, rng);
  }
  const std::string out = output_path(a.out);
  ensure_parent(out);
  save_dataset(out, ds);
  write_run_manifest(out + ".manifest", sub, start, {out});
  std::cout << "wrote " << out << ": n=" << ds.size() << " d=" << ds.dim() << "\n";
  return 0;
}

std::shared_ptr<const IsingEnergy> true_model_from(const BitDataset& ds) {
  if (manifest_value(ds, "source") != "ising") return nullptr;
  const std::size_t side = std::stoul(manifest_value(ds, "side"));
  const double sigma = std::stod(manifest_value(ds, "sigma"));
  const SpinEncoding enc = spin_encoding_from_string(manifest_value(ds, "encoding"));
  return std::make_shared<IsingEnergy>(IsingEnergy::lattice(side, sigma, enc));
}

int cmd_train(TrainArgs a, CLI::App& sub) {
  const auto start = Clock::now();
  const BitDataset ds = load_dataset(a.data);
  const bool ising_data = manifest_value(ds, "source") == "ising";
  std::string model_kind = a.model == "auto" ? (ising_data ? "ising" : "mlp") : a.model;
  // Ising runs default to lr 1e-4, batch 100, l1 0.01 unless given explicitly.
  if (model_kind == "ising") {
    // Effective values are recorded so the manifest re-runs without defaults.
    auto fill = [&sub](const char* name, const char* value) {
      CLI::Option* opt = sub.get_option(name);
      if (opt->count() > 0) return false;
      opt->add_result(value);
      return true;
    };
    if (fill("--lr", "0.0001")) a.lr = 1e-4;
    if (fill("--batch", "100")) a.batch = 100;
    if (fill("--l1", "0.01")) a.l1 = 0.01;
  }

  TrainConfig tc;
  tc.estimator.kind = estimator_kind_from_string(a.estimator);
  tc.estimator.samples = a.s;
  tc.estimator.exponent_clamp = a.clamp;
  tc.estimator.term = a.term == "g" ? TermKind::GForm : TermKind::RatioSquared;
  tc.adam = {a.lr, a.beta1, a.beta2, a.eps};
  tc.batch_size = a.batch;
  tc.iterations = a.iterations;
  tc.seed = a.seed;
  tc.eval_every = a.eval_every;
  tc.checkpoint_every = a.checkpoint_every;
  tc.l1_strength = a.l1;
  tc.max_chunk_rows = a.max_chunk_rows;

  const std::string out_dir = output_path(a.out_dir);
  fs::create_directories(out_dir);
  tc.divergence_dump = (fs::path(out_dir) / "diverged.ckpt").string();

  std::optional<Trainer> trainer;
  if (!a.resume.empty()) {
    trainer.emplace(Trainer::resume(a.resume, tc, ds.bits));
  } else {
    RngStream init(a.seed, 0);
    std::unique_ptr<EnergyModel> model;
    if (model_kind == "mlp") {
      model = std::make_unique<MlpEnergy>(MlpArchitecture{ds.dim(), a.width, a.depth}, init);
    } else if (model_kind == "ising") {
      const std::string enc = manifest_value(ds, "encoding");
      model = std::make_unique<IsingEnergy>(IsingEnergy::learnable(
          ds.dim(), enc.empty() ? SpinEncoding::PlusMinusOne : spin_encoding_from_string(enc)));
    } else {
      throw ConfigError("unknown model '" + model_kind + "' (expected auto, mlp or ising)");
    }
    trainer.emplace(tc, ds.bits, std::move(model));
  }

  EvalSpec eval;
  eval.objective_samples = a.eval_samples;
  eval.mmd = a.eval_mmd;
  eval.gibbs = {a.eval_samples, a.gibbs_chains, a.gibbs_burn_in, a.gibbs_thin};
  eval.mmd_data_samples = a.eval_samples;
  eval.true_model = true_model_from(ds);

  const std::string log_path = (fs::path(out_dir) / "metrics.jsonl").string();
  std::ofstream log(log_path, a.resume.empty() ? std::ios::trunc : std::ios::app);
  if (!log) throw IoError("cannot open " + log_path);
  std::vector<std::string> outputs = {log_path};

  Trainer::Hooks hooks;
  hooks.on_metrics = [&](const MetricEntry& e) {
    const std::string line = to_json(e);
    log << line << "\n" << std::flush;
    std::cout << line << "\n";
  };
  hooks.on_checkpoint = [&](const Trainer& t) {
    const std::string p =
        (fs::path(out_dir) / ("ckpt-" + std::to_string(t.iteration()) + ".ckpt")).string();
    t.save_checkpoint(p);
    outputs.push_back(p);
  };
  trainer->run(eval, hooks);
  const std::string final_path = (fs::path(out_dir) / "final.ckpt").string();
  trainer->save_checkpoint(final_path);
  outputs.push_back(final_path);
  write_run_manifest((fs::path(out_dir) / "train.manifest").string(), sub, start, outputs);
  return 0;
}

int cmd_eval(const EvalArgs& a, const CLI::App& sub) {
  const auto start = Clock::now();
  const auto model = load_model(a.checkpoint);
  nlohmann::ordered_json report;
  report["checkpoint"] = a.checkpoint;
  report["metric"] = a.metric;
  if (a.metric == "objective" || a.metric == "mmd") {
    if (a.data.empty()) throw ConfigError("--data is required for " + a.metric);
    const BitDataset ds = load_dataset(a.data);
    BitBatch head(ds.dim());
    for (std::size_t r = 0; r < std::min(a.n_samples, ds.size()); ++r) head.push_back(ds.bits.row(r));
    if (a.metric == "objective") {
      report["objective"] = objective_value_eval(*model, head);
      report["n"] = head.rows();
    } else {
      RngStream rng(a.seed, 0);
      const BitBatch samples =
          gibbs_sample_set(*model, {a.n_samples, a.gibbs_chains, a.gibbs_burn_in, a.gibbs_thin}, rng);
      const MmdReport m = mmd_linear(samples, head);
      report["mmd2"] = m.mmd_sq;
      report["n_model"] = m.n_x;
      report["n_data"] = m.n_y;
      report["kernel"] = m.kernel;
    }
  } else if (a.metric == "rmse") {
    const auto* ising = dynamic_cast<const IsingEnergy*>(model.get());
    if (ising == nullptr) throw ConfigError("rmse needs an Ising checkpoint");
    std::shared_ptr<const IsingEnergy> truth;
    if (a.true_side > 0) {
      truth = std::make_shared<IsingEnergy>(
          IsingEnergy::lattice(a.true_side, a.true_sigma, ising->encoding()));
    } else if (!a.data.empty()) {
      truth = true_model_from(load_dataset(a.data));
    }
    if (!truth) throw ConfigError("rmse needs --true-side or an Ising dataset via --data");
    report["rmse"] = rmse_connectivity(ising->coupling(), truth->coupling());
  }
  const std::string out = output_path(a.out);
  ensure_parent(out);
  io::write_file_atomic(out, report.dump(2) + "\n");
  write_run_manifest(out + ".manifest", sub, start, {out});
  std::cout << report.dump() << "\n";
  return 0;
}

int cmd_landscape(const LandscapeArgs& a, const CLI::App& sub) {
  const auto start = Clock::now();
  const auto model = load_model(a.checkpoint);
  if (model->kind() != "mlp" || model->dim() % 2 != 0) {
    throw ConfigError("landscape needs an MLP checkpoint with even dimension");
  }
  const GrayCodec codec(model->dim() / 2, kToyLo, kToyHi);
  const LandscapeGrid grid = energy_landscape(*model, codec, a.resolution);
  const std::string out = output_path(a.out);
  ensure_parent(out);
  write_landscape_csv(out, grid);
  write_run_manifest(out + ".manifest", sub, start, {out});
  std::cout << "wrote " << grid.energies.size() << " points to " << out << "\n";
  return 0;
}

int cmd_bench(const BenchArgs& a, const CLI::App& sub) {
  const auto start = Clock::now();
  const auto rows = run_bench(a.cfg, [](const BenchRow& r) {
    std::cerr << "d=" << r.d << " rm-full " << r.full_ms << " ms, rmwggis-adv " << r.adv_ms
              << " ms\n";
  });
  const std::string table = format_bench_table(rows);
  std::cout << table;
  const std::string out = output_path(a.out);
  ensure_parent(out);
  io::write_file_atomic(out, table);
  write_run_manifest(out + ".manifest", sub, start, {out});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ratio matching with gradient-guided importance sampling for binary EBMs"};
  app.set_version_flag("--version", RMIS_VERSION);
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "Re-run from a manifest (key=value file); flags override it");
  app.allow_config_extras(CLI::config_extras_mode::ignore);
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker cap (0: RMIS_THREADS or all processors)");

  GenDataArgs g;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic 2-D or Ising dataset");
  gen->add_option("--dist", g.dist, "2-D distribution")->check(CLI::IsMember(toy_distributions()));
  gen->add_flag("--ising", g.ising, "Ising lattice data instead of a 2-D distribution");
  gen->add_option("--bits", g.bits, "Gray-code bits per coordinate (d = 2 x bits)")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1 << 20}));
  gen->add_option("--n", g.n, "Number of samples")->check(CLI::PositiveNumber);
  gen->add_option("--seed", g.seed);
  gen->add_option("--out", g.out, "Dataset file")->required();
  gen->add_option("--side", g.side, "Ising lattice side")->check(CLI::Range(3, 1 << 12));
  gen->add_option("--sigma", g.sigma, "Ising coupling strength");
  gen->add_option("--steps", g.steps, "Gibbs single-site updates per chain")
      ->check(CLI::PositiveNumber);
  gen->add_option("--encoding", g.encoding, "Ising spin encoding")->check(CLI::IsMember({"pm1", "01"}));

  TrainArgs t;
  auto* train = app.add_subcommand("train", "Train an energy model on a dataset");
  train->add_option("--data", t.data, "Dataset file")->required()->check(CLI::ExistingFile);
  train->add_option("--model", t.model)->check(CLI::IsMember({"auto", "mlp", "ising"}));
  train->add_option("--estimator", t.estimator)
      ->check(CLI::IsMember({"rm-full", "rm-g", "rmwggis-basic", "rmwggis-adv", "rmwrand"}));
  train->add_option("--s", t.s, "Sampled flips per point")->check(CLI::PositiveNumber);
  train->add_option("--batch", t.batch)->check(CLI::PositiveNumber);
  train->add_option("--width", t.width, "MLP hidden width")->check(CLI::PositiveNumber);
  train->add_option("--depth", t.depth, "MLP hidden layers")->check(CLI::PositiveNumber);
  train->add_option("--lr", t.lr)->check(CLI::NonNegativeNumber);
  train->add_option("--beta1", t.beta1);
  train->add_option("--beta2", t.beta2);
  train->add_option("--eps", t.eps);
  train->add_option("--iterations", t.iterations)->check(CLI::PositiveNumber);
  train->add_option("--seed", t.seed);
  train->add_option("--eval-every", t.eval_every);
  train->add_option("--checkpoint-every", t.checkpoint_every);
  train->add_option("--l1", t.l1, "l1 penalty on couplings (Ising)")->check(CLI::NonNegativeNumber);
  train->add_option("--clamp", t.clamp, "Bound on 2(E(x) - E(x_-i)) inside exp")
      ->check(CLI::PositiveNumber);
  train->add_option("--term", t.term)->check(CLI::IsMember({"ratio", "g"}));
  train->add_option("--max-chunk-rows", t.max_chunk_rows)->check(CLI::Range(2, 1 << 30));
  train->add_option("--out-dir", t.out_dir)->required();
  train->add_option("--resume", t.resume, "Checkpoint to continue from");
  train->add_flag("--eval-mmd", t.eval_mmd, "Report MMD^2 against Gibbs samples");
  train->add_option("--eval-samples", t.eval_samples)->check(CLI::PositiveNumber);
  train->add_option("--gibbs-chains", t.gibbs_chains)->check(CLI::PositiveNumber);
  train->add_option("--gibbs-burn-in", t.gibbs_burn_in)->check(CLI::PositiveNumber);
  train->add_option("--gibbs-thin", t.gibbs_thin)->check(CLI::PositiveNumber);

  EvalArgs e;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--checkpoint", e.checkpoint)->required()->check(CLI::ExistingFile);
  eval->add_option("--data", e.data)->check(CLI::ExistingFile);
  eval->add_option("--metric", e.metric)->check(CLI::IsMember({"objective", "mmd", "rmse"}));
  eval->add_option("--n-samples", e.n_samples)->check(CLI::PositiveNumber);
  eval->add_option("--gibbs-chains", e.gibbs_chains)->check(CLI::PositiveNumber);
  eval->add_option("--gibbs-burn-in", e.gibbs_burn_in)->check(CLI::PositiveNumber);
  eval->add_option("--gibbs-thin", e.gibbs_thin)->check(CLI::PositiveNumber);
  eval->add_option("--seed", e.seed);
  eval->add_option("--true-side", e.true_side, "Lattice side of the true Ising model");
  eval->add_option("--true-sigma", e.true_sigma);
  eval->add_option("--out", e.out, "Report file (JSON)");

  LandscapeArgs l;
  auto* land = app.add_subcommand("landscape", "Export an energy grid for a 2-D Gray-coded model");
  land->add_option("--checkpoint", l.checkpoint)->required()->check(CLI::ExistingFile);
  land->add_option("--resolution", l.resolution, "Grid points per axis")->check(CLI::PositiveNumber);
  land->add_option("--out", l.out, "CSV file");

  BenchArgs b;
  auto* bench = app.add_subcommand("bench", "Time rm-full against rmwggis-adv across dimensions");
  bench->add_option("--dims", b.cfg.dims, "Comma-separated dimensions")->delimiter(',');
  bench->add_option("--batch", b.cfg.batch_size)->check(CLI::PositiveNumber);
  bench->add_option("--s", b.cfg.samples)->check(CLI::PositiveNumber);
  bench->add_option("--warmup", b.cfg.warmup);
  bench->add_option("--batches", b.cfg.batches)->check(CLI::PositiveNumber);
  bench->add_option("--width", b.cfg.width)->check(CLI::PositiveNumber);
  bench->add_option("--depth", b.cfg.depth)->check(CLI::PositiveNumber);
  bench->add_option("--seed", b.cfg.seed);
  bench->add_option("--out", b.out, "Table file");

  for (auto* sub : {gen, train, eval, land, bench}) sub->fallthrough()->configurable();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kUsageError;
  }

  // Everything runs on one thread; the cap is recorded but cannot lower it further.
  if (threads == 0) {
    if (const char* env = std::getenv("RMIS_THREADS")) threads = std::strtoul(env, nullptr, 10);
  }

  try {
    if (*gen) return cmd_gen_data(g, *gen);
    if (*train) return cmd_train(t, *train);
    if (*eval) return cmd_eval(e, *eval);
    if (*land) return cmd_landscape(l, *land);
    if (*bench) return cmd_bench(b, *bench);
  } catch (const ConfigError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kUsageError;
  } catch (const ShapeError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kUsageError;
  } catch (const DivergenceError& err) {
    std::cerr << "error: " << err.what();
    if (!err.dump_path().empty()) std::cerr << " (diagnostic checkpoint: " << err.dump_path() << ")";
    std::cerr << "\n";
    return kRuntimeError;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}
