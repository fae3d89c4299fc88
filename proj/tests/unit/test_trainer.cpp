#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "fixtures.hpp"
#include "rmis/binary_io.hpp"
#include "rmis/checkpoint.hpp"
#include "rmis/dataset.hpp"
#include "rmis/error.hpp"
#include "rmis/metrics.hpp"
#include "rmis/trainer.hpp"
#include "json.hpp"

using namespace rmis;
using doctest::Approx;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("rmis_trainer_" + name)).string();
}

BitBatch toy_data(std::size_t k, std::size_t n, std::uint64_t seed) {
  RngStream rng(seed, 0);
  return encode_dataset({"8gaussians", n, GrayCodec(k, -4.0, 4.0)}, rng).bits;
}

std::unique_ptr<EnergyModel> small_mlp(std::size_t d, std::uint64_t seed) {
  return std::make_unique<MlpEnergy>(testing::random_mlp(d, 16, 2, seed));
}

TrainConfig small_config(EstimatorKind kind) {
  TrainConfig c;
  c.estimator.kind = kind;
  c.estimator.samples = 3;
  c.batch_size = 16;
  c.iterations = 12;
  c.seed = 5;
  c.adam.lr = 1e-2;
  return c;
}

bool same_arrays(const CheckpointFile& a, const CheckpointFile& b) {
  if (a.arrays.size() != b.arrays.size()) return false;
  for (std::size_t i = 0; i < a.arrays.size(); ++i) {
    if (a.arrays[i].name != b.arrays[i].name) return false;
    if (a.arrays[i].value.to_vector() != b.arrays[i].value.to_vector()) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("zero learning rate leaves parameters unchanged") {
  const BitBatch data = toy_data(3, 100, 1);
  auto model = small_mlp(6, 2);
  const auto before = model->params();
  TrainConfig cfg = small_config(EstimatorKind::RmwggisAdvanced);
  cfg.adam.lr = 0.0;
  cfg.iterations = 30;
  Trainer t(cfg, data, std::move(model));
  t.run(EvalSpec{}, {});
  for (std::size_t p = 0; p < before.size(); ++p) {
    CHECK(t.model().params()[p].value.to_vector() == before[p].value.to_vector());
  }
}

TEST_CASE("training is deterministic for every estimator") {
  const BitBatch data = toy_data(4, 90, 2);
  for (auto kind : {EstimatorKind::RmFull, EstimatorKind::RmGFull, EstimatorKind::RmwggisBasic,
                    EstimatorKind::RmwggisAdvanced, EstimatorKind::Rmwrand}) {
    Trainer a(small_config(kind), data, small_mlp(8, 3));
    Trainer b(small_config(kind), data, small_mlp(8, 3));
    for (int i = 0; i < 12; ++i) CHECK(a.step() == b.step());
    const auto ca = a.checkpoint(), cb = b.checkpoint();
    CHECK(same_arrays(ca, cb));
    CHECK(ca.manifest == cb.manifest);
  }
}

TEST_CASE("chunking does not change the loss beyond rounding") {
  const BitBatch data = toy_data(4, 64, 3);
  TrainConfig whole = small_config(EstimatorKind::RmFull);
  TrainConfig split = whole;
  split.max_chunk_rows = 20;
  Trainer a(whole, data, small_mlp(8, 4));
  Trainer b(split, data, small_mlp(8, 4));
  CHECK(a.step() == Approx(b.step()).epsilon(1e-12));
  CHECK(a.hash() != b.hash());
}

TEST_CASE("resume reproduces the uninterrupted run bitwise") {
  const BitBatch data = toy_data(4, 40, 4);
  TrainConfig cfg = small_config(EstimatorKind::RmwggisAdvanced);
  cfg.iterations = 10;
  Trainer full(cfg, data, small_mlp(8, 6));
  const std::string mid = temp_path("mid.ckpt");
  for (int i = 0; i < 10; ++i) {
    full.step();
    if (full.iteration() == 7) full.save_checkpoint(mid);
  }
  Trainer resumed = Trainer::resume(mid, cfg, data);
  CHECK(resumed.iteration() == 7);
  while (resumed.iteration() < 10) resumed.step();
  CHECK(same_arrays(full.checkpoint(), resumed.checkpoint()));
  CHECK(full.checkpoint().manifest == resumed.checkpoint().manifest);

  // Cadence-only changes are allowed.
  TrainConfig longer = cfg;
  longer.iterations = 50;
  longer.eval_every = 3;
  CHECK_NOTHROW(Trainer::resume(mid, longer, data));

  TrainConfig other = cfg;
  other.adam.lr = 0.5;
  CHECK_THROWS_AS(Trainer::resume(mid, other, data), ConfigError);
  BitBatch changed = data;
  changed.flip(0, 0);
  CHECK_THROWS_AS(Trainer::resume(mid, cfg, changed), ConfigError);
  std::filesystem::remove(mid);
  CHECK_THROWS_AS(Trainer::resume(mid, cfg, data), IoError);
}

TEST_CASE("rm-full training lowers the objective on a small dataset") {
  const BitBatch data = toy_data(3, 400, 5);
  TrainConfig cfg = small_config(EstimatorKind::RmFull);
  cfg.iterations = 500;
  cfg.batch_size = 64;
  cfg.adam.lr = 1e-3;
  Trainer t(cfg, data, small_mlp(6, 7));
  std::vector<MetricEntry> log;
  EvalSpec eval;
  eval.objective_samples = 400;
  t.run(eval, {[&](const MetricEntry& e) { log.push_back(e); }, {}});
  REQUIRE(log.size() == 2);
  CHECK(log.front().iteration == 0);
  CHECK_FALSE(log.front().loss.has_value());
  CHECK(log.back().iteration == 500);
  CHECK(log.back().objective < log.front().objective);
}

TEST_CASE("metric and checkpoint schedule") {
  const BitBatch data = toy_data(3, 50, 6);
  TrainConfig cfg = small_config(EstimatorKind::Rmwrand);
  cfg.iterations = 10;
  cfg.eval_every = 4;
  cfg.checkpoint_every = 5;
  Trainer t(cfg, data, small_mlp(6, 8));
  std::vector<std::uint64_t> evals, ckpts;
  t.run(EvalSpec{}, {[&](const MetricEntry& e) { evals.push_back(e.iteration); },
                     [&](const Trainer& tr) { ckpts.push_back(tr.iteration()); }});
  CHECK(evals == std::vector<std::uint64_t>{0, 4, 8, 10});
  CHECK(ckpts == std::vector<std::uint64_t>{5, 10});
}

TEST_CASE("evaluate") {
  const BitBatch data = toy_data(3, 60, 7);
  RngStream rng(0, 0);
  const auto c = testing::constant_energy(6, 1.0);
  CHECK(evaluate(c, data, EvalSpec{}, rng).objective == Approx(6.0));

  auto truth = std::make_shared<const IsingEnergy>(IsingEnergy::lattice(3, 0.25));
  RngStream drng(1, 0);
  const BitBatch ising = gen_ising_data(*truth, 30, 90, drng).bits;
  EvalSpec spec;
  spec.true_model = truth;
  spec.mmd = true;
  spec.gibbs = GibbsConfig{50, 10, 5, 1};
  const MetricEntry e = evaluate(*truth, ising, spec, rng);
  REQUIRE(e.rmse.has_value());
  CHECK(*e.rmse == 0.0);
  REQUIRE(e.mmd_sq.has_value());
  CHECK(*e.mmd_sq >= 0.0);
}

TEST_CASE("metric entries serialise to json") {
  MetricEntry e;
  e.iteration = 3;
  e.loss = 1.5;
  e.objective = 2.25;
  e.clamp_events = 4;
  const auto j = nlohmann::json::parse(to_json(e));
  CHECK(j["iteration"] == 3);
  CHECK(j["loss"] == 1.5);
  CHECK(j["objective"] == 2.25);
  CHECK(j["mmd2"].is_null());
  CHECK(j["rmse"].is_null());
  CHECK(j["clamp_events"] == 4);
}

TEST_CASE("trainer rejects invalid setups") {
  const BitBatch data = toy_data(3, 20, 8);
  TrainConfig cfg = small_config(EstimatorKind::RmFull);
  CHECK_THROWS_AS(Trainer(cfg, data, small_mlp(8, 1)), ShapeError);
  CHECK_THROWS_AS(Trainer(cfg, BitBatch(6), small_mlp(6, 1)), ConfigError);
  TrainConfig bad = cfg;
  bad.batch_size = 0;
  CHECK_THROWS_AS(Trainer(bad, data, small_mlp(6, 1)), ConfigError);
  bad = cfg;
  bad.l1_strength = 0.1;
  CHECK_THROWS_AS(Trainer(bad, data, small_mlp(6, 1)), ConfigError);
  bad = cfg;
  bad.estimator.kind = EstimatorKind::RmwggisAdvanced;
  bad.estimator.samples = 7;
  CHECK_THROWS_AS(Trainer(bad, data, small_mlp(6, 1)), ConfigError);
}

TEST_CASE("divergence aborts with a dump") {
  BitBatch data(3);
  for (int r = 0; r < 4; ++r) data.push_back(BitVector(3));
  TrainConfig cfg = small_config(EstimatorKind::RmFull);
  cfg.batch_size = 4;
  cfg.estimator.exponent_clamp = 100.0;
  cfg.divergence_dump = temp_path("diverged.ckpt");
  Trainer t(cfg, data, std::make_unique<testing::LinearEnergy>(std::vector<double>(3, -20.0)));
  try {
    t.step();
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.dump_path() == cfg.divergence_dump);
    CHECK(std::filesystem::exists(cfg.divergence_dump));
  }
  CHECK(t.iteration() == 0);
  std::filesystem::remove(cfg.divergence_dump);
}

TEST_CASE("l1 penalty shrinks off-lattice couplings") {
  const IsingEnergy truth = IsingEnergy::lattice(3, 0.25);
  RngStream rng(2, 0);
  const BitBatch data = gen_ising_data(truth, 300, 9 * 200, rng).bits;
  auto off_lattice = [&](double l1) {
    TrainConfig cfg = small_config(EstimatorKind::RmwggisAdvanced);
    cfg.iterations = 300;
    cfg.batch_size = 50;
    cfg.l1_strength = l1;
    cfg.adam.lr = 1e-2;
    Trainer t(cfg, data, std::make_unique<IsingEnergy>(IsingEnergy::learnable(9)));
    t.run(EvalSpec{}, {});
    const Tensor jt = truth.coupling();
    const Tensor jh = static_cast<const IsingEnergy&>(t.model()).coupling();
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < 9; ++i) {
      for (std::size_t k = i + 1; k < 9; ++k) {
        if (jt.at(i, k) == 0.0) {
          sum += std::abs(jh.at(i, k));
          ++count;
        }
      }
    }
    return sum / count;
  };
  CHECK(off_lattice(10.0) < off_lattice(0.0));
}

TEST_CASE("checkpoint files roundtrip and reject other versions") {
  CheckpointFile ckpt;
  ckpt.manifest = {{"a", "1"}, {"b", "two words"}};
  ckpt.arrays.push_back({"m", Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6})});
  ckpt.arrays.push_back({"s", Tensor::scalar(-0.5)});
  const std::string path = temp_path("file.ckpt");
  write_checkpoint_file(path, ckpt);
  const CheckpointFile back = read_checkpoint_file(path);
  CHECK(back.manifest == ckpt.manifest);
  CHECK(back.array("m").shape() == std::vector<std::size_t>{2, 3});
  CHECK(back.array("m").to_vector() == ckpt.arrays[0].value.to_vector());
  CHECK(back.array("s").item() == -0.5);
  CHECK_THROWS_AS(back.array("missing"), FormatError);

  std::string raw = io::read_file(path);
  raw[8] = char(kCheckpointVersion + 1);
  io::write_file_atomic(path, raw);
  CHECK_THROWS_AS(read_checkpoint_file(path), VersionError);
  std::filesystem::remove(path);
}

TEST_CASE("models survive a checkpoint roundtrip") {
  auto mlp = testing::random_mlp(6, 8, 2, 9);
  CheckpointFile ckpt;
  put_model(ckpt, mlp);
  const std::string path = temp_path("model.ckpt");
  write_checkpoint_file(path, ckpt);
  const auto back = load_model(path);
  const BitBatch all = testing::all_states(6);
  CHECK(back->energy(all) == mlp.energy(all));
  std::filesystem::remove(path);
}
