// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "pnp/checkpoint.hpp"
#include "pnp/cli.hpp"
#include "pnp/error.hpp"
#include "pnp/metrics.hpp"
#include "pnp/model.hpp"
#include "pnp/refine.hpp"
#include "pnp/scene.hpp"
#include "pnp/sparsity.hpp"

namespace py = pybind11;
using namespace pnp;

namespace {

py::array_t<double> to_numpy(const Tensor& t) {
  py::array_t<double> out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

Tensor from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

py::dict metrics_dict(const MetricRecord& r) {
  py::dict d;
  d["rmse"] = r.rmse;
  d["mae"] = r.mae;
  d["mre"] = r.mre;
  d["delta1"] = r.delta1;
  d["delta2"] = r.delta2;
  d["delta3"] = r.delta3;
  d["n_pixels"] = r.n_pixels;
  return d;
}

}  // namespace

PYBIND11_MODULE(_pnpdepth, m) {
  m.doc() = "Inference-time feature refinement for sparse-to-dense depth networks";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<GraphError>(m, "GraphError", PyExc_RuntimeError);

  m.def(
      "generate_scene",
      [](std::uint64_t seed, std::size_t height, std::size_t width) {
        SceneParams p;
        p.height = height;
        p.width = width;
        const Scene s = generate_scene(seed, p);
        return py::make_tuple(to_numpy(s.rgb), to_numpy(s.depth));
      },
      py::arg("seed"), py::arg("height") = 48, py::arg("width") = 64,
      "Returns (rgb, depth) as 1xCxHxW float64 arrays.");

  m.def(
      "sample_uniform",
      [](const py::array_t<double>& depth, std::size_t n, std::uint64_t seed) {
        const SparseDepth sd = sample_uniform(from_numpy(depth), n, seed);
        return py::make_tuple(to_numpy(sd.values), to_numpy(sd.mask));
      },
      py::arg("depth"), py::arg("n"), py::arg("seed"), "Returns (values, mask).");

  m.def(
      "sample_lidar",
      [](const py::array_t<double>& depth, const std::string& preset, std::uint64_t seed) {
        const Tensor d = from_numpy(depth);
        const LidarSample s =
            sample_lidar(d, lidar_preset(preset), Intrinsics::defaults(d.height(), d.width()), seed);
        return py::make_tuple(to_numpy(s.sparse.values), to_numpy(s.sparse.mask), s.scanlines);
      },
      py::arg("depth"), py::arg("preset"), py::arg("seed"),
      "Returns (values, mask, scanlines).");

  m.def("lidar_presets", [] {
    std::vector<std::string> names;
    for (const LidarSpec& s : lidar_presets()) names.push_back(s.name);
    return names;
  });

  py::class_<Model>(m, "Model")
      .def_property_readonly("arch", [](const Model& mo) { return std::string(arch_name(mo.arch())); })
      .def_property_readonly("input_mode",
                             [](const Model& mo) { return std::string(input_mode_name(mo.input_mode())); })
      .def_property_readonly("taps", &Model::taps)
      .def("run", [](const Model& mo, const py::array_t<double>& x) { return to_numpy(mo.run(from_numpy(x))); })
      .def("to_bytes", [](const Model& mo) {
        const Bytes b = serialize_model(mo);
        return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
      });

  m.def(
      "build_model",
      [](const std::string& arch, const std::string& mode, std::uint64_t seed) {
        return build_model(parse_arch(arch), parse_input_mode(mode), seed);
      },
      py::arg("arch") = "plain_cnn", py::arg("input_mode") = "sd", py::arg("seed") = 1);
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));
  m.def("save_checkpoint", &save_checkpoint, py::arg("path"), py::arg("model"));

  m.def(
      "make_input",
      [](const std::string& mode, const py::array_t<double>& rgb, const py::array_t<double>& values,
         const py::array_t<double>& mask) {
        return to_numpy(make_input(parse_input_mode(mode), from_numpy(rgb),
                                   SparseDepth{from_numpy(values), from_numpy(mask)}));
      },
      py::arg("input_mode"), py::arg("rgb"), py::arg("values"), py::arg("mask"));

  m.def(
      "refine",
      [](const Model& model, const py::array_t<double>& x, const py::array_t<double>& values,
         const py::array_t<double>& mask, const std::string& tap, double alpha,
         std::size_t iterations, const std::string& loss, const std::string& rule) {
        PnPConfig cfg;
        cfg.tap = tap;
        cfg.alpha = alpha;
        cfg.iterations = iterations;
        cfg.loss = parse_loss(loss);
        cfg.rule = parse_update_rule(rule);
        RefineResult r;
        {
          py::gil_scoped_release release;
          r = refine(model, from_numpy(x), SparseDepth{from_numpy(values), from_numpy(mask)}, cfg);
        }
        std::vector<double> losses;
        for (const RefineStep& s : r.trace.steps) losses.push_back(s.sparse_loss);
        py::dict out;
        out["depth"] = to_numpy(r.depth);
        out["base"] = to_numpy(r.base);
        out["sparse_loss"] = losses;
        out["status"] = std::string(refine_status_name(r.status));
        return out;
      },
      py::arg("model"), py::arg("x"), py::arg("values"), py::arg("mask"), py::arg("tap") = "",
      py::arg("alpha") = 0.01, py::arg("iterations") = 5, py::arg("loss") = "l1",
      py::arg("rule") = "sign");

  m.def(
      "evaluate",
      [](const py::array_t<double>& pred, const py::array_t<double>& gt) {
        return metrics_dict(evaluate(from_numpy(pred), from_numpy(gt)));
      },
      py::arg("pred"), py::arg("gt"));

  m.def(
      "format_improvement",
      [](double before, double after) { return format_improvement(improvement_percent(before, after)); },
      py::arg("before"), py::arg("after"), "Signed relative error reduction, e.g. \"+43.8%\".");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a pnpdepth subcommand in-process; returns (code, stdout, stderr).");
}
