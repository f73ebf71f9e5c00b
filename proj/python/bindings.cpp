#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <map>
#include <string>

#include "adjseg/adjoint.hpp"
#include "adjseg/data_synth.hpp"
#include "adjseg/errors.hpp"
#include "adjseg/network.hpp"
#include "adjseg/regularizer.hpp"
#include "adjseg/trainer.hpp"

namespace py = pybind11;
using namespace adjseg;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<int, py::array::c_style | py::array::forcecast>;

FeatureField to_field(const DoubleArray& a) {
  if (a.ndim() != 3) throw DimensionError("expected a (channels, height, width) array");
  const auto c = static_cast<std::size_t>(a.shape(0)), h = static_cast<std::size_t>(a.shape(1)),
             w = static_cast<std::size_t>(a.shape(2));
  return FeatureField(c, h, w, std::vector<double>(a.data(), a.data() + a.size()));
}

DoubleArray from_field(const FeatureField& f) {
  DoubleArray a({f.channels(), f.height(), f.width()});
  std::copy(f.values().begin(), f.values().end(), a.mutable_data());
  return a;
}

ClassMap to_map(const IntArray& a) {
  if (a.ndim() != 2) throw DimensionError("expected a (height, width) class map");
  return ClassMap(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                  std::vector<int>(a.data(), a.data() + a.size()));
}

IntArray from_map(const ClassMap& m) {
  IntArray a({m.height(), m.width()});
  std::copy(m.ids().begin(), m.ids().end(), a.mutable_data());
  return a;
}

// Rows of (row, col, class).
SelectionSet to_selection(const IntArray& a) {
  if (a.size() == 0) return {};
  if (a.ndim() != 2 || a.shape(1) != 3) throw DimensionError("expected an (n, 3) array of row, col, class");
  std::vector<LabeledPixel> px;
  for (py::ssize_t k = 0; k < a.shape(0); ++k) {
    const int* r = a.data(k, 0);
    if (r[0] < 0 || r[1] < 0) throw IndexError("negative pixel coordinate");
    px.push_back({static_cast<std::size_t>(r[0]), static_cast<std::size_t>(r[1]), r[2]});
  }
  return SelectionSet(std::move(px));
}

IntArray from_selection(const SelectionSet& q) {
  IntArray a({q.size(), std::size_t{3}});
  int* out = a.mutable_data();
  for (const auto& e : q.entries()) {
    *out++ = static_cast<int>(e.row);
    *out++ = static_cast<int>(e.col);
    *out++ = e.class_id;
  }
  return a;
}

py::list kernel_list(const GradientBundle& g) {
  py::list blocks;
  for (auto b : g.blocks()) blocks.append(DoubleArray(b.size(), b.data()));
  return blocks;
}

TrainConfig config_from_dict(const std::map<std::string, py::object>& kv) {
  std::map<std::string, std::string> text;
  for (const auto& [k, v] : kv) {
    if (py::isinstance<py::bool_>(v)) {
      text[k] = v.cast<bool>() ? "true" : "false";
    } else {
      text[k] = py::str(v).cast<std::string>();
    }
  }
  return TrainConfig::from_key_values(text);
}

Dataset make_dataset(const DoubleArray& data, const IntArray& truth, const IntArray& train, const IntArray& val,
                     std::size_t num_classes) {
  return Dataset{to_field(data), to_map(truth), to_selection(train), to_selection(val), num_classes};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Adjoint-trained residual segmentation network with an output smoothness penalty";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<StateError>(m, "StateError", PyExc_RuntimeError);

  py::enum_<Activation>(m, "Activation").value("ReLU", Activation::ReLU).value("Tanh", Activation::Tanh);

  py::class_<NetworkParams>(m, "NetworkParams")
      .def_readonly("step_size", &NetworkParams::step_size)
      .def_readonly("activation", &NetworkParams::activation)
      .def_property_readonly("width", &NetworkParams::width)
      .def_property_readonly("input_channels", &NetworkParams::input_channels)
      .def_property_readonly("num_classes", &NetworkParams::num_classes)
      .def_property_readonly("state_count", &NetworkParams::state_count)
      .def_property_readonly("parameter_count", &NetworkParams::parameter_count)
      .def("blocks",
           [](const NetworkParams& p) {
             py::list out;
             for (auto b : p.blocks()) out.append(DoubleArray(b.size(), b.data()));
             return out;
           },
           "Copies of the parameter blocks: lift, layers..., project.")
      .def("set_block",
           [](NetworkParams& p, std::size_t index, const DoubleArray& values) {
             auto blocks = p.blocks();
             if (index >= blocks.size()) throw IndexError("block index out of range");
             if (static_cast<std::size_t>(values.size()) != blocks[index].size())
               throw DimensionError("block size mismatch");
             std::copy(values.data(), values.data() + values.size(), blocks[index].begin());
           })
      .def("save", [](const NetworkParams& p, const std::filesystem::path& dir) { save_params(dir, p); })
      .def_static("load", &load_params)
      .def(py::self == py::self);

  m.def(
      "init_params",
      [](std::size_t input_channels, std::size_t width, std::size_t steps, std::size_t num_classes,
         Activation activation, double step_size, std::uint64_t seed, double scale) {
        ArchSpec a;
        a.input_channels = input_channels;
        a.width = width;
        a.steps = steps;
        a.num_classes = num_classes;
        a.activation = activation;
        a.step_size = step_size;
        return init_params(a, seed, scale);
      },
      py::arg("input_channels"), py::arg("width") = 32, py::arg("steps") = 10, py::arg("num_classes") = 2,
      py::arg("activation") = Activation::Tanh, py::arg("step_size") = 1.0, py::arg("seed") = 0,
      py::arg("scale") = 1.0);

  m.def(
      "forward", [](const NetworkParams& p, const DoubleArray& data) { return from_field(forward(p, to_field(data)).output); },
      py::arg("params"), py::arg("data"), "Class scores with shape (num_classes, height, width).");
  m.def(
      "predict",
      [](const NetworkParams& p, const DoubleArray& data) {
        return from_map(predict_classes(forward(p, to_field(data)).output));
      },
      py::arg("params"), py::arg("data"));

  m.def(
      "objective",
      [](const NetworkParams& p, const DoubleArray& data, const IntArray& labels, double alpha) {
        const ObjectiveValue v = objective(p, to_field(data), to_selection(labels), alpha,
                                           make_penalty(RegularizerKind::QuadraticSmoother));
        return py::dict(py::arg("objective") = v.objective, py::arg("loss") = v.loss,
                        py::arg("regularizer") = v.regularizer);
      },
      py::arg("params"), py::arg("data"), py::arg("labels"), py::arg("alpha") = 0.0);

  m.def(
      "gradient",
      [](const NetworkParams& p, const DoubleArray& data, const IntArray& labels, double alpha) {
        const GradientBundle g =
            gradient(p, to_field(data), to_selection(labels), alpha, make_penalty(RegularizerKind::QuadraticSmoother));
        return py::dict(py::arg("objective") = g.objective, py::arg("loss") = g.loss,
                        py::arg("regularizer") = g.regularizer, py::arg("blocks") = kernel_list(g));
      },
      py::arg("params"), py::arg("data"), py::arg("labels"), py::arg("alpha") = 0.0,
      "Adjoint gradient; blocks follow NetworkParams.blocks().");

  m.def(
      "gradcheck",
      [](const NetworkParams& p, const DoubleArray& data, const IntArray& labels, double alpha, std::size_t samples,
         std::uint64_t seed, double fd_step, int stencil_points) {
        GradcheckOptions o;
        o.samples = samples;
        o.seed = seed;
        o.fd_step = fd_step;
        o.stencil_points = stencil_points;
        const GradcheckReport r = gradcheck(p, to_field(data), to_selection(labels), alpha,
                                            make_penalty(RegularizerKind::QuadraticSmoother), o);
        return py::dict(py::arg("max_relative_error") = r.max_relative_error,
                        py::arg("coordinates") = r.coordinates.size());
      },
      py::arg("params"), py::arg("data"), py::arg("labels"), py::arg("alpha") = 0.0, py::arg("samples") = 50,
      py::arg("seed") = 0, py::arg("fd_step") = GradcheckOptions{}.fd_step,
      py::arg("stencil_points") = GradcheckOptions{}.stencil_points);

  m.def(
      "gradcheck_problem",
      [](std::uint64_t seed) {
        GradcheckProblem p = make_gradcheck_problem(seed);
        return py::make_tuple(p.params, from_field(p.data), from_selection(p.labels));
      },
      py::arg("seed"), "(params, data, labels) of the fixed 8x8 adjoint check instance.");

  m.def(
      "smoother_value", [](const DoubleArray& y) { return smoother_value(to_field(y)); }, py::arg("y"));
  m.def(
      "smoother_grad", [](const DoubleArray& y) { return from_field(smoother_grad(to_field(y))); }, py::arg("y"));

  m.def(
      "iou",
      [](const IntArray& pred, const IntArray& truth, std::size_t num_classes) {
        const IoUReport r = iou(to_map(pred), to_map(truth), num_classes);
        py::list per_class;
        for (const auto& c : r.per_class) per_class.append(c.iou ? py::cast(*c.iou) : py::none());
        return py::dict(py::arg("miou") = r.miou, py::arg("per_class") = per_class);
      },
      py::arg("pred"), py::arg("truth"), py::arg("num_classes"));

  m.def(
      "gen_scene",
      [](std::uint64_t seed, std::size_t height, std::size_t width, std::size_t channels, std::size_t num_classes,
         std::size_t blobs, double noise) {
        SceneSpec s;
        s.seed = seed;
        s.height = height;
        s.width = width;
        s.channels = channels;
        s.num_classes = num_classes;
        s.blob_count = blobs;
        s.noise_sigma = noise;
        const Scene sc = gen_scene(s);
        return py::make_tuple(from_field(sc.data), from_map(sc.truth));
      },
      py::arg("seed") = 0, py::arg("height") = SceneSpec{}.height, py::arg("width") = SceneSpec{}.width,
      py::arg("channels") = SceneSpec{}.channels, py::arg("num_classes") = SceneSpec{}.num_classes,
      py::arg("blobs") = SceneSpec{}.blob_count, py::arg("noise") = SceneSpec{}.noise_sigma,
      "(data, truth) arrays.");

  m.def(
      "sample_labels",
      [](const IntArray& truth, std::size_t n_train, std::size_t n_val, std::uint64_t seed) {
        auto [tr, va] = sample_labels(to_map(truth), {n_train, n_val, seed});
        return py::make_tuple(from_selection(tr), from_selection(va));
      },
      py::arg("truth"), py::arg("n_train") = 200, py::arg("n_val") = 50, py::arg("seed") = 0,
      "(train, val) label arrays of rows (row, col, class).");

  m.def(
      "train",
      [](const std::map<std::string, py::object>& config, const DoubleArray& data, const IntArray& train_labels,
         const IntArray& val_labels, std::size_t num_classes) {
        const TrainConfig cfg = config_from_dict(config);
        const FeatureField d = to_field(data);
        const SelectionSet tr = to_selection(train_labels), va = to_selection(val_labels);
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(cfg, d, tr, va, num_classes);
        }
        py::list history;
        for (const auto& h : r.history) {
          history.append(py::dict(py::arg("iteration") = h.iteration, py::arg("learning_rate") = h.learning_rate,
                                  py::arg("loss") = h.loss, py::arg("regularizer") = h.regularizer,
                                  py::arg("objective") = h.objective, py::arg("grad_norm") = h.grad_norm,
                                  py::arg("val_loss") = h.val_loss, py::arg("val_miou") = h.val_miou));
        }
        return py::make_tuple(r.params, history, to_string(r.status));
      },
      py::arg("config"), py::arg("data"), py::arg("train_labels"), py::arg("val_labels"), py::arg("num_classes") = 2,
      "Config keys as in the key=value files. Returns (params, history, status).");

  m.def(
      "sweep",
      [](const std::map<std::string, py::object>& config, const std::vector<double>& alphas,
         const std::vector<std::uint64_t>& seeds, const DoubleArray& data, const IntArray& truth,
         const IntArray& train_labels, const IntArray& val_labels, std::size_t num_classes, std::size_t jobs) {
        const TrainConfig cfg = config_from_dict(config);
        const Dataset ds = make_dataset(data, truth, train_labels, val_labels, num_classes);
        SweepResult r;
        {
          py::gil_scoped_release release;
          r = sweep(cfg, alphas, seeds, ds, jobs);
        }
        return py::make_tuple(sweep_csv(r.records), r.best_alpha);
      },
      py::arg("config"), py::arg("alphas"), py::arg("seeds"), py::arg("data"), py::arg("truth"),
      py::arg("train_labels"), py::arg("val_labels"), py::arg("num_classes") = 2, py::arg("jobs") = 1,
      "Returns (sweep.csv text, best alpha or None).");
}
