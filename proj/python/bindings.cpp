#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rmis/checkpoint.hpp"
#include "rmis/dataset.hpp"
#include "rmis/error.hpp"
#include "rmis/ising_energy.hpp"
#include "rmis/metrics.hpp"
#include "rmis/mlp_energy.hpp"
#include "rmis/objectives.hpp"
#include "rmis/samplers.hpp"
#include "rmis/toy2d.hpp"
#include "rmis/trainer.hpp"

namespace py = pybind11;
using namespace rmis;

namespace {

using BitArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

BitBatch to_batch(const BitArray& arr) {
  if (arr.ndim() != 2) throw ShapeError("expected a 2-D array of bits (n, d)");
  const auto n = std::size_t(arr.shape(0)), d = std::size_t(arr.shape(1));
  BitBatch out(d, n);
  auto a = arr.unchecked<2>();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < d; ++i) out.set(r, i, a(r, i) != 0);
  }
  return out;
}

BitVector to_bits(const BitArray& arr) {
  if (arr.ndim() != 1) throw ShapeError("expected a 1-D array of bits");
  BitVector out(std::size_t(arr.shape(0)));
  auto a = arr.unchecked<1>();
  for (std::size_t i = 0; i < out.dim(); ++i) out.set(i, a(i) != 0);
  return out;
}

py::array_t<std::uint8_t> from_batch(const BitBatch& b) {
  py::array_t<std::uint8_t> out({b.rows(), b.dim()});
  auto a = out.mutable_unchecked<2>();
  for (std::size_t r = 0; r < b.rows(); ++r) {
    for (std::size_t i = 0; i < b.dim(); ++i) a(r, i) = b.get(r, i);
  }
  return out;
}

py::array_t<double> from_tensor(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<double> out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

Tensor to_tensor(const F64Array& arr) {
  std::vector<std::size_t> shape(arr.shape(), arr.shape() + arr.ndim());
  return Tensor(shape, std::vector<double>(arr.data(), arr.data() + arr.size()));
}

py::array_t<double> from_vector(const std::vector<double>& v) {
  return py::array_t<double>(py::ssize_t(v.size()), v.data());
}

// Python-side handle; Trainer and friends take clones.
using ModelPtr = std::shared_ptr<EnergyModel>;

py::dict metric_dict(const MetricEntry& e) {
  py::dict d;
  d["iteration"] = e.iteration;
  d["loss"] = e.loss ? py::cast(*e.loss) : py::none();
  d["objective"] = e.objective;
  d["mmd2"] = e.mmd_sq ? py::cast(*e.mmd_sq) : py::none();
  d["rmse"] = e.rmse ? py::cast(*e.rmse) : py::none();
  d["wall_ms"] = e.wall_ms;
  d["clamp_events"] = e.clamp_events;
  return d;
}

TrainConfig make_config(const std::string& estimator, std::size_t s, std::size_t batch_size,
                        double lr, std::uint64_t iterations, std::uint64_t seed, double l1,
                        double clamp, std::uint64_t eval_every) {
  TrainConfig c;
  c.estimator.kind = estimator_kind_from_string(estimator);
  c.estimator.samples = s;
  c.estimator.exponent_clamp = clamp;
  c.batch_size = batch_size;
  c.adam.lr = lr;
  c.iterations = iterations;
  c.seed = seed;
  c.l1_strength = l1;
  c.eval_every = eval_every;
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Ratio matching with gradient-guided importance sampling for binary EBMs";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_IOError);
  py::register_exception<IoError>(m, "IoError", PyExc_IOError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

  py::class_<EnergyModel, ModelPtr>(m, "EnergyModel")
      .def_property_readonly("dim", &EnergyModel::dim)
      .def_property_readonly("kind", &EnergyModel::kind)
      .def("energy",
           [](const EnergyModel& self, const BitArray& x) {
             return from_vector(self.energy(to_batch(x)));
           })
      .def("grad_input", [](const EnergyModel& self,
                            const BitArray& x) { return from_tensor(self.grad_input(to_batch(x))); })
      .def("neighbor_energies",
           [](const EnergyModel& self, const BitArray& x) {
             return from_vector(self.neighbor_energies(to_bits(x)));
           })
      .def("params",
           [](const EnergyModel& self) {
             py::dict d;
             for (const auto& p : self.params()) d[py::str(p.name)] = from_tensor(p.value);
             return d;
           })
      .def("set_param",
           [](EnergyModel& self, const std::string& name, const F64Array& value) {
             Tensor& t = self.params().get(name);
             Tensor v = to_tensor(value);
             if (v.size() != t.size()) throw ShapeError("set_param: wrong number of entries");
             std::copy(v.data().begin(), v.data().end(), t.data().begin());
           })
      .def("describe", &EnergyModel::describe)
      .def("save", [](const EnergyModel& self, const std::string& path) {
        CheckpointFile ckpt;
        put_model(ckpt, self);
        write_checkpoint_file(path, ckpt);
      });

  m.def(
      "mlp",
      [](std::size_t dim, std::size_t width, std::size_t depth, std::uint64_t seed) -> ModelPtr {
        RngStream rng(seed, 0);
        return std::make_shared<MlpEnergy>(MlpArchitecture{dim, width, depth}, rng);
      },
      py::arg("dim"), py::arg("width") = 256, py::arg("depth") = 3, py::arg("seed") = 0);
  m.def(
      "ising_lattice",
      [](std::size_t side, double sigma) -> ModelPtr {
        return std::make_shared<IsingEnergy>(IsingEnergy::lattice(side, sigma));
      },
      py::arg("side"), py::arg("sigma") = 0.25);
  m.def(
      "ising_learnable",
      [](std::size_t dim) -> ModelPtr {
        return std::make_shared<IsingEnergy>(IsingEnergy::learnable(dim));
      },
      py::arg("dim"));
  m.def("ising_coupling", [](const EnergyModel& model) {
    const auto* ising = dynamic_cast<const IsingEnergy*>(&model);
    if (!ising) throw ConfigError("not an Ising model");
    return from_tensor(ising->coupling());
  });
  m.def("load_model", [](const std::string& path) -> ModelPtr { return load_model(path); });

  m.def(
      "rm_full_loss",
      [](const EnergyModel& model, const BitArray& x, double clamp) {
        return rm_full_loss(model, to_bits(x), clamp).value;
      },
      py::arg("model"), py::arg("x"), py::arg("clamp") = 30.0);
  m.def("rm_g_loss", [](const EnergyModel& model, const BitArray& x) {
    return rm_g_loss(model, to_bits(x)).value;
  });
  m.def("exact_optimal_proposal", [](const EnergyModel& model, const BitArray& x) {
    return from_vector(exact_optimal_proposal(model, to_bits(x)).probs);
  });
  m.def("gradient_guided_proposal", [](const EnergyModel& model, const BitArray& x) {
    return from_vector(gradient_guided_proposal(model, to_bits(x)).probs);
  });
  m.def("taylor_delta", [](const EnergyModel& model, const BitArray& x) {
    return from_vector(taylor_delta(model, to_bits(x)));
  });
  m.def(
      "batch_loss",
      [](const EnergyModel& model, const BitArray& batch, const std::string& estimator,
         std::size_t s, std::uint64_t seed) {
        EstimatorSpec spec;
        spec.kind = estimator_kind_from_string(estimator);
        spec.samples = s;
        spec.validate(model.dim());
        RngStream rng(seed, 2);
        return batch_loss(model, to_batch(batch), spec, rng).value;
      },
      py::arg("model"), py::arg("batch"), py::arg("estimator") = "rmwggis-adv", py::arg("s") = 10,
      py::arg("seed") = 0);

  m.def(
      "gibbs_sample",
      [](const EnergyModel& model, std::size_t samples, std::size_t chains, std::size_t burn_in,
         std::size_t thin, std::uint64_t seed) {
        RngStream rng(seed, 0);
        return from_batch(gibbs_sample_set(model, GibbsConfig{samples, chains, burn_in, thin}, rng));
      },
      py::arg("model"), py::arg("samples") = 4000, py::arg("chains") = 100,
      py::arg("burn_in") = 1000, py::arg("thin") = 10, py::arg("seed") = 0);

  m.def("toy_distributions", &toy_distributions);
  m.def(
      "sample_2d",
      [](const std::string& name, std::size_t n, std::uint64_t seed) {
        RngStream rng(seed, 0);
        const auto pts = sample_2d(name, n, rng);
        py::array_t<double> out({n, std::size_t(2)});
        auto a = out.mutable_unchecked<2>();
        for (std::size_t i = 0; i < n; ++i) {
          a(i, 0) = pts[i].x;
          a(i, 1) = pts[i].y;
        }
        return out;
      },
      py::arg("name"), py::arg("n"), py::arg("seed") = 0);
  m.def(
      "gray_encode",
      [](double v, std::size_t k, double lo, double hi) { return GrayCodec(k, lo, hi).encode(v); },
      py::arg("v"), py::arg("k"), py::arg("lo") = kToyLo, py::arg("hi") = kToyHi);
  m.def(
      "gray_decode",
      [](const std::vector<std::uint8_t>& bits, double lo, double hi) {
        return GrayCodec(bits.size(), lo, hi).decode(bits);
      },
      py::arg("bits"), py::arg("lo") = kToyLo, py::arg("hi") = kToyHi);
  m.def(
      "encode_dataset",
      [](const std::string& name, std::size_t n, std::size_t bits, std::uint64_t seed) {
        RngStream rng(seed, 0);
        return from_batch(encode_dataset({name, n, GrayCodec(bits, kToyLo, kToyHi)}, rng).bits);
      },
      py::arg("name"), py::arg("n"), py::arg("bits") = 16, py::arg("seed") = 0);
  m.def(
      "gen_ising_data",
      [](std::size_t side, double sigma, std::size_t n, std::size_t steps, std::uint64_t seed) {
        RngStream rng(seed, 0);
        return from_batch(gen_ising_data(IsingEnergy::lattice(side, sigma), n, steps, rng).bits);
      },
      py::arg("side"), py::arg("sigma"), py::arg("n"), py::arg("steps"), py::arg("seed") = 0);
  m.def(
      "save_dataset",
      [](const std::string& path, const BitArray& bits, std::map<std::string, std::string> manifest) {
        save_dataset(path, BitDataset{to_batch(bits), std::move(manifest)});
      },
      py::arg("path"), py::arg("bits"), py::arg("manifest") = std::map<std::string, std::string>{});
  m.def("load_dataset", [](const std::string& path) {
    BitDataset ds = load_dataset(path);
    return py::make_tuple(from_batch(ds.bits), ds.manifest);
  });

  m.def("hamming_kernel", [](const BitArray& x, const BitArray& y) {
    return hamming_kernel(to_bits(x), to_bits(y));
  });
  m.def("mmd_linear", [](const BitArray& x, const BitArray& y) {
    return mmd_linear(to_batch(x), to_batch(y)).mmd_sq;
  });
  m.def("rmse_connectivity", [](const F64Array& a, const F64Array& b) {
    return rmse_connectivity(to_tensor(a), to_tensor(b));
  });
  m.def(
      "objective_value_eval",
      [](const EnergyModel& model, const BitArray& samples, double clamp) {
        return objective_value_eval(model, to_batch(samples), clamp);
      },
      py::arg("model"), py::arg("samples"), py::arg("clamp") = 30.0);
  m.def(
      "energy_landscape",
      [](const EnergyModel& model, std::size_t resolution) {
        const GrayCodec codec(model.dim() / 2, kToyLo, kToyHi);
        const LandscapeGrid g = energy_landscape(model, codec, resolution);
        return py::make_tuple(from_vector(g.xs), from_vector(g.ys), from_vector(g.energies));
      },
      py::arg("model"), py::arg("resolution") = 100);

  py::class_<Trainer>(m, "Trainer")
      .def(py::init([](const EnergyModel& model, const BitArray& data, const std::string& estimator,
                       std::size_t s, std::size_t batch_size, double lr, std::uint64_t iterations,
                       std::uint64_t seed, double l1, double clamp, std::uint64_t eval_every) {
             return Trainer(make_config(estimator, s, batch_size, lr, iterations, seed, l1, clamp,
                                        eval_every),
                            to_batch(data), model.clone());
           }),
           py::arg("model"), py::arg("data"), py::arg("estimator") = "rmwggis-adv",
           py::arg("s") = 10, py::arg("batch_size") = 256, py::arg("lr") = 1e-3,
           py::arg("iterations") = 1000, py::arg("seed") = 0, py::arg("l1") = 0.0,
           py::arg("clamp") = 30.0, py::arg("eval_every") = 0)
      .def_static(
          "resume",
          [](const std::string& path, const BitArray& data, const std::string& estimator,
             std::size_t s, std::size_t batch_size, double lr, std::uint64_t iterations,
             std::uint64_t seed, double l1, double clamp) {
            return Trainer::resume(path,
                                   make_config(estimator, s, batch_size, lr, iterations, seed, l1,
                                               clamp, 0),
                                   to_batch(data));
          },
          py::arg("path"), py::arg("data"), py::arg("estimator") = "rmwggis-adv",
          py::arg("s") = 10, py::arg("batch_size") = 256, py::arg("lr") = 1e-3,
          py::arg("iterations") = 1000, py::arg("seed") = 0, py::arg("l1") = 0.0,
          py::arg("clamp") = 30.0)
      .def("step", &Trainer::step)
      .def(
          "run",
          [](Trainer& self, std::size_t objective_samples) {
            EvalSpec eval;
            eval.objective_samples = objective_samples;
            py::list log;
            self.run(eval, {[&](const MetricEntry& e) { log.append(metric_dict(e)); }, {}});
            return log;
          },
          py::arg("objective_samples") = 4000)
      .def_property_readonly("iteration", &Trainer::iteration)
      .def_property_readonly("config_hash", &Trainer::hash)
      .def("model", [](const Trainer& self) -> ModelPtr { return self.model().clone(); })
      .def("save_checkpoint", &Trainer::save_checkpoint);
}
