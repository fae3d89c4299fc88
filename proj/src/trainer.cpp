#include "rmis/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <json.hpp>

#include "rmis/error.hpp"
#include "rmis/metrics.hpp"

namespace rmis {

namespace {

constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kEstimatorStream = 2;
constexpr std::uint64_t kEvalStreamBase = 1u << 20;
constexpr double kDivergenceLimit = 1e12;

class Fnv1a {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= b[i];
      h_ *= 0x100000001b3ull;
    }
  }
  void text(const std::string& s) {
    bytes(s.data(), s.size());
    bytes("\n", 1);
  }
  std::uint64_t value() const noexcept { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ull;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string term_name(TermKind t) { return t == TermKind::GForm ? "g" : "ratio"; }

std::uint64_t parse_u64(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(std::string("checkpoint field ") + what + " is not an integer: " + s);
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (iterations < 1) throw ConfigError("iterations must be at least 1");
  if (!(l1_strength >= 0.0)) throw ConfigError("l1 strength must be non-negative");
  if (!(adam.lr >= 0.0) || !std::isfinite(adam.lr)) throw ConfigError("learning rate must be >= 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(adam.eps > 0.0)) throw ConfigError("Adam eps must be positive");
  if (max_chunk_rows < 2) throw ConfigError("max chunk rows must be at least 2");
}

std::uint64_t config_hash(const TrainConfig& c, const EnergyModel& model, const BitBatch& data) {
  Fnv1a h;
  h.text("estimator=" + to_string(c.estimator.kind));
  h.text("samples=" + std::to_string(c.estimator.samples));
  h.text("clamp=" + num(c.estimator.exponent_clamp));
  h.text("term=" + term_name(c.estimator.term));
  h.text("lr=" + num(c.adam.lr));
  h.text("beta1=" + num(c.adam.beta1));
  h.text("beta2=" + num(c.adam.beta2));
  h.text("eps=" + num(c.adam.eps));
  h.text("batch=" + std::to_string(c.batch_size));
  h.text("seed=" + std::to_string(c.seed));
  h.text("l1=" + num(c.l1_strength));
  h.text("chunk=" + std::to_string(c.max_chunk_rows));
  for (const auto& [k, v] : model.describe()) h.text("model." + k + "=" + v);
  h.text("data=" + std::to_string(data.dim()) + "x" + std::to_string(data.rows()));
  const auto words = data.words();
  h.bytes(words.data(), words.size_bytes());
  return h.value();
}

std::string to_json(const MetricEntry& e) {
  nlohmann::ordered_json j;
  j["iteration"] = e.iteration;
  j["loss"] = e.loss ? nlohmann::ordered_json(*e.loss) : nlohmann::ordered_json(nullptr);
  j["objective"] = e.objective;
  j["mmd2"] = e.mmd_sq ? nlohmann::ordered_json(*e.mmd_sq) : nlohmann::ordered_json(nullptr);
  j["rmse"] = e.rmse ? nlohmann::ordered_json(*e.rmse) : nlohmann::ordered_json(nullptr);
  j["wall_ms"] = e.wall_ms;
  j["clamp_events"] = e.clamp_events;
  return j.dump();
}

namespace {

BitBatch head_rows(const BitBatch& data, std::size_t count) {
  const std::size_t n = std::min(count, data.rows());
  BitBatch out(data.dim());
  for (std::size_t r = 0; r < n; ++r) out.push_back(data.row(r));
  return out;
}

}  // namespace

MetricEntry evaluate(const EnergyModel& model, const BitBatch& data, const EvalSpec& spec,
                     RngStream& rng) {
  MetricEntry e;
  e.objective = objective_value_eval(model, head_rows(data, spec.objective_samples));
  if (spec.mmd) {
    const BitBatch samples = gibbs_sample_set(model, spec.gibbs, rng);
    e.mmd_sq = mmd_linear(samples, head_rows(data, spec.mmd_data_samples)).mmd_sq;
  }
  if (spec.true_model) {
    const auto* ising = dynamic_cast<const IsingEnergy*>(&model);
    if (ising == nullptr) throw ConfigError("RMSE needs an Ising model");
    e.rmse = rmse_connectivity(ising->coupling(), spec.true_model->coupling());
  }
  return e;
}

Trainer::Trainer(TrainConfig config, BitBatch data, std::unique_ptr<EnergyModel> model)
    : config_(std::move(config)),
      data_(std::move(data)),
      model_(std::move(model)),
      shuffle_rng_(config_.seed, kShuffleStream),
      estimator_rng_(config_.seed, kEstimatorStream) {
  if (!model_) throw ConfigError("trainer needs a model");
  config_.validate();
  if (data_.empty()) throw ConfigError("training set is empty");
  if (data_.dim() != model_->dim()) {
    throw ShapeError("dataset dimension " + std::to_string(data_.dim()) +
                     " does not match model dimension " + std::to_string(model_->dim()));
  }
  config_.estimator.validate(model_->dim());
  if (config_.l1_strength > 0.0) {
    const auto* ising = dynamic_cast<const IsingEnergy*>(model_.get());
    if (ising == nullptr || !ising->is_learnable()) {
      throw ConfigError("l1 penalty applies only to learnable Ising models");
    }
    const auto& ps = model_->params();
    for (std::size_t i = 0; i < ps.size(); ++i) {
      if (ps[i].name == "J_upper") j_index_ = i;
    }
  }
  adam_ = AdamState::zeros_like(model_->params());
  hash_ = config_hash(config_, *model_, data_);
  perm_.resize(data_.rows());
  reshuffle();
}

void Trainer::reshuffle() {
  for (std::size_t i = 0; i < perm_.size(); ++i) perm_[i] = i;
  for (std::size_t i = perm_.size(); i > 1; --i) {
    std::swap(perm_[i - 1], perm_[shuffle_rng_.uniform_index(i)]);
  }
  cursor_ = 0;
}

BitBatch Trainer::next_batch() {
  BitBatch batch(data_.dim());
  for (std::size_t k = 0; k < config_.batch_size; ++k) {
    if (cursor_ == perm_.size()) {
      ++epoch_;
      reshuffle();
    }
    batch.push_back(data_.row(perm_[cursor_++]));
  }
  return batch;
}

double Trainer::step() {
  const BitBatch batch = next_batch();
  const std::vector<FlipPlan> plans = plan_batch(*model_, batch, config_.estimator, estimator_rng_);
  const std::size_t n = batch.rows();
  const double scale = 1.0 / double(n);

  ParamSet& params = model_->params();
  GradRecord total;
  total.grads.reserve(params.size());
  for (const auto& p : params) total.grads.emplace_back(p.value.shape());

  double loss = 0.0;
  std::size_t clamp_events = 0;
  std::size_t tape_bytes = 0;
  try {
    std::size_t begin = 0;
    while (begin < n) {
      std::size_t end = begin;
      std::size_t rows = 0;
      while (end < n) {
        const std::size_t add = 1 + plans[end].flips.size();
        if (end > begin && rows + add > config_.max_chunk_rows) break;
        rows += add;
        ++end;
      }
      Tape tape;
      const ParamBinding bound = bind_params(tape, params, true);
      const LossGraph g = build_loss_graph(tape, *model_, bound, batch, plans, begin, end,
                                           config_.estimator.exponent_clamp, scale);
      loss += g.loss.value().item();
      clamp_events += g.clamp_events;
      const GradRecord grads = backward(g.loss, bound);
      tape_bytes = std::max(tape_bytes, tape.bytes());
      for (std::size_t i = 0; i < grads.grads.size(); ++i) {
        auto dst = total.grads[i].data();
        const auto src = grads.grads[i].data();
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
      }
      begin = end;
    }
  } catch (const NumericError& e) {
    loss = std::numeric_limits<double>::quiet_NaN();
  }

  if (j_index_ != SIZE_MAX && std::isfinite(loss)) {
    // sum over the full symmetric matrix counts each stored entry twice.
    const double c = 2.0 * config_.l1_strength;
    const auto j = params[j_index_].value.data();
    auto g = total.grads[j_index_].data();
    double penalty = 0.0;
    for (std::size_t k = 0; k < j.size(); ++k) {
      penalty += std::abs(j[k]);
      g[k] += j[k] > 0.0 ? c : (j[k] < 0.0 ? -c : 0.0);
    }
    loss += c * penalty;
  }

  if (!std::isfinite(loss) || loss > kDivergenceLimit) {
    std::string where;
    if (!config_.divergence_dump.empty()) {
      save_checkpoint(config_.divergence_dump);
      where = config_.divergence_dump;
    }
    throw DivergenceError("training diverged at iteration " + std::to_string(iteration_ + 1) +
                              " (loss " + num(loss) + ")",
                          where);
  }

  adam_step(params, total, adam_, config_.adam);
  ++iteration_;
  last_loss_ = loss;
  last_clamp_events_ = clamp_events;
  last_tape_bytes_ = tape_bytes;
  return loss;
}

void Trainer::run(const EvalSpec& eval, const Hooks& hooks) {
  const auto start = std::chrono::steady_clock::now();
  auto emit = [&] {
    if (!hooks.on_metrics) return;
    RngStream rng(config_.seed, kEvalStreamBase + iteration_);
    MetricEntry e = evaluate(*model_, data_, eval, rng);
    e.iteration = iteration_;
    e.loss = iteration_ == 0 ? std::nullopt : last_loss_;
    e.clamp_events = last_clamp_events_;
    e.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                    .count();
    hooks.on_metrics(e);
  };
  if (iteration_ == 0) emit();
  while (iteration_ < config_.iterations) {
    step();
    const bool last = iteration_ == config_.iterations;
    if (last || (config_.eval_every > 0 && iteration_ % config_.eval_every == 0)) emit();
    if (hooks.on_checkpoint && config_.checkpoint_every > 0 &&
        iteration_ % config_.checkpoint_every == 0) {
      hooks.on_checkpoint(*this);
    }
  }
}

CheckpointFile Trainer::checkpoint() const {
  CheckpointFile ckpt;
  put_model(ckpt, *model_);
  auto& m = ckpt.manifest;
  m["iteration"] = std::to_string(iteration_);
  m["epoch"] = std::to_string(epoch_);
  m["cursor"] = std::to_string(cursor_);
  m["adam.step"] = std::to_string(adam_.step);
  m["config_hash"] = hex(hash_);
  m["rng.shuffle"] = shuffle_rng_.state();
  m["rng.estimator"] = estimator_rng_.state();
  m["train.estimator"] = to_string(config_.estimator.kind);
  m["train.s"] = std::to_string(config_.estimator.samples);
  m["train.clamp"] = num(config_.estimator.exponent_clamp);
  m["train.term"] = term_name(config_.estimator.term);
  m["train.lr"] = num(config_.adam.lr);
  m["train.beta1"] = num(config_.adam.beta1);
  m["train.beta2"] = num(config_.adam.beta2);
  m["train.eps"] = num(config_.adam.eps);
  m["train.batch"] = std::to_string(config_.batch_size);
  m["train.seed"] = std::to_string(config_.seed);
  m["train.l1"] = num(config_.l1_strength);
  m["train.max_chunk_rows"] = std::to_string(config_.max_chunk_rows);
  m["train.last_loss"] = last_loss_ ? num(*last_loss_) : "none";
  const auto& ps = model_->params();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    ckpt.arrays.push_back({"adam_m/" + ps[i].name, adam_.m[i]});
    ckpt.arrays.push_back({"adam_v/" + ps[i].name, adam_.v[i]});
  }
  Tensor perm({perm_.size()});
  for (std::size_t i = 0; i < perm_.size(); ++i) perm[i] = double(perm_[i]);
  ckpt.arrays.push_back({"perm", std::move(perm)});
  return ckpt;
}

void Trainer::save_checkpoint(const std::string& path) const {
  write_checkpoint_file(path, checkpoint());
}

Trainer Trainer::resume(const std::string& checkpoint_path, TrainConfig config, BitBatch data) {
  const CheckpointFile ckpt = read_checkpoint_file(checkpoint_path);
  Trainer t(std::move(config), std::move(data), model_from_checkpoint(ckpt));
  const std::string stored = ckpt.value("config_hash");
  if (stored != hex(t.hash_)) {
    throw ConfigError("checkpoint " + checkpoint_path + " was written with a different config (hash " +
                      stored + ", current " + hex(t.hash_) + ")");
  }
  const auto& ps = t.model_->params();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    t.adam_.m[i] = ckpt.array("adam_m/" + ps[i].name);
    t.adam_.v[i] = ckpt.array("adam_v/" + ps[i].name);
    if (!t.adam_.m[i].same_shape(ps[i].value) || !t.adam_.v[i].same_shape(ps[i].value)) {
      throw FormatError("checkpoint optimiser state for '" + ps[i].name + "' has the wrong shape");
    }
  }
  t.adam_.step = parse_u64(ckpt.value("adam.step"), "adam.step");
  t.iteration_ = parse_u64(ckpt.value("iteration"), "iteration");
  t.epoch_ = parse_u64(ckpt.value("epoch"), "epoch");
  t.cursor_ = parse_u64(ckpt.value("cursor"), "cursor");
  t.shuffle_rng_.restore(ckpt.value("rng.shuffle"));
  t.estimator_rng_.restore(ckpt.value("rng.estimator"));
  const Tensor& perm = ckpt.array("perm");
  if (perm.size() != t.perm_.size() || t.cursor_ > t.perm_.size()) {
    throw FormatError("checkpoint batch order does not match the dataset");
  }
  for (std::size_t i = 0; i < perm.size(); ++i) t.perm_[i] = std::size_t(perm[i]);
  const std::string& last = ckpt.value("train.last_loss");
  if (last != "none") t.last_loss_ = std::stod(last);
  return t;
}

}  // namespace rmis
