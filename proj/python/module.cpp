/* Copyright 2026 The pixda Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "pixda/commands.hpp"
#include "pixda/losses.hpp"
#include "pixda/sample_selection.hpp"
#include "pixda/style_transfer.hpp"
#include "pixda/trainer.hpp"

namespace py = pybind11;
using namespace py::literals;

namespace pixda {
namespace {

template <typename T>
using CArray = py::array_t<T, py::array::c_style | py::array::forcecast>;

template <typename T>
Array<T> from_numpy(const CArray<T>& a, int ndim, const char* what) {
  if (a.ndim() != ndim) {
    throw InvalidArgument(std::string(what) + ": expected " + std::to_string(ndim) + " dimensions");
  }
  std::vector<int> shape(a.shape(), a.shape() + a.ndim());
  return Array<T>(shape, std::vector<T>(a.data(), a.data() + a.size()));
}

template <typename T>
py::array_t<T> to_numpy(const Array<T>& a) {
  py::array_t<T> out(std::vector<py::ssize_t>(a.shape().begin(), a.shape().end()));
  std::copy_n(a.data(), a.size(), out.mutable_data());
  return out;
}

LabelMap labels_from(const CArray<std::int32_t>& a) {
  LabelMap l;
  l.values = from_numpy(a, 2, "labels");
  return l;
}

py::dict metrics_dict(const MetricsReport& r) {
  return py::module_::import("json").attr("loads")(to_json(r).dump());
}

py::list images_list(const std::vector<LabeledImage>& images) {
  py::list out;
  for (const auto& item : images) {
    out.append(py::dict("id"_a = item.id, "city"_a = item.city, "image"_a = to_numpy(item.image),
                        "labels"_a = to_numpy(item.labels.values)));
  }
  return out;
}

}  // namespace
}  // namespace pixda

PYBIND11_MODULE(_pixda, m) {
  using namespace pixda;
  m.doc() = "Few-shot cross-domain segmentation core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);

  m.def("version", &version_string);

  m.def(
      "focal_loss",
      [](const CArray<double>& probs, const CArray<std::int32_t>& labels, double alpha, double gamma) {
        return focal_loss(ProbMap{from_numpy(probs, 3, "probs")}, labels_from(labels), {alpha, gamma});
      },
      "probs"_a, "labels"_a, "alpha"_a = 1.0, "gamma"_a = 2.0,
      "Mean focal loss over non-ignored pixels of a (C, H, W) probability map.");

  m.def(
      "kd_loss",
      [](const CArray<double>& teacher, const CArray<double>& student, double tau) {
        return kd_loss(from_numpy(teacher, 3, "teacher"), from_numpy(student, 3, "student"), tau);
      },
      "teacher_logits"_a, "student_logits"_a, "tau"_a = 0.5);

  m.def(
      "fda_translate",
      [](const CArray<float>& src, const CArray<float>& style, double beta) {
        return to_numpy(fda_translate(from_numpy(src, 3, "src"), from_numpy(style, 3, "style"), {beta}));
      },
      "src"_a, "style"_a, "beta"_a = 0.01,
      "Swaps the low-frequency amplitude of src for that of style; (3, H, W) in [0, 1].");

  m.def(
      "confusion_matrix",
      [](const CArray<std::int32_t>& pred, const CArray<std::int32_t>& truth, int classes) {
        ConfusionMatrix cm(classes);
        cm.accumulate(labels_from(pred), labels_from(truth));
        py::array_t<std::int64_t> out({classes, classes});
        auto v = out.mutable_unchecked<2>();
        for (int t = 0; t < classes; ++t) {
          for (int p = 0; p < classes; ++p) v(t, p) = cm.at(t, p);
        }
        return out;
      },
      "pred"_a, "truth"_a, "classes"_a);

  m.def(
      "metrics",
      [](const CArray<std::int64_t>& confusion, std::vector<int> well, std::vector<int> under,
         const std::string& zero_union) {
        if (confusion.ndim() != 2 || confusion.shape(0) != confusion.shape(1)) {
          throw InvalidArgument("confusion: expected a square matrix");
        }
        const int c = static_cast<int>(confusion.shape(0));
        ConfusionMatrix cm(c);
        auto v = confusion.unchecked<2>();
        for (int t = 0; t < c; ++t) {
          for (int p = 0; p < c; ++p) cm.at(t, p) = v(t, p);
        }
        return metrics_dict(report(cm, {std::move(well), std::move(under)}, parse_policy(zero_union)));
      },
      "confusion"_a, "well"_a = std::vector<int>{}, "under"_a = std::vector<int>{},
      "zero_union"_a = "exclude");

  m.def(
      "select_epoch",
      [](std::vector<std::string> retained, const std::map<std::string, double>& scores, int epoch,
         double delta0, double delta_max) {
        SelectionState state = SelectionState::initial(std::move(retained), delta0, delta_max);
        state.epoch = epoch;
        state.delta = threshold_at(epoch, delta0, delta_max);
        return select_epoch(state, scores).retained_ids;
      },
      "retained"_a, "scores"_a, "epoch"_a = 0, "delta0"_a = 0.4, "delta_max"_a = 1.0 - 1e-6,
      "Ids whose score is below the epoch threshold, in input order.");

  m.def("threshold_at", &threshold_at, "epoch"_a, "delta0"_a = 0.4, "delta_max"_a = 1.0 - 1e-6);

  m.def(
      "generate_toy",
      [](const std::string& settings_json) {
        const GenerateSettings g = generate_settings_from_json(nlohmann::json::parse(settings_json));
        const ToyPair pair = generate_toy_pair(g.spec, g.n_source, g.n_target, g.n_cities);
        return py::make_tuple(images_list(pair.source), images_list(pair.target));
      },
      "settings_json"_a, "(source, target) lists of {id, city, image, labels} from generate settings.");

  m.def(
      "cmd_generate",
      [](const std::filesystem::path& spec, const std::filesystem::path& out) {
        std::ostringstream log;
        cmd_generate(spec, out, log);
        return log.str();
      },
      "spec"_a, "out"_a);

  m.def(
      "cmd_train",
      [](const std::filesystem::path& config, const std::filesystem::path& out, std::optional<std::uint64_t> seed,
         bool dry_run, bool check_invariants) {
        std::ostringstream log;
        py::gil_scoped_release release;
        cmd_train({config, out, seed, dry_run, check_invariants}, log);
        return log.str();
      },
      "config"_a, "out"_a, "seed"_a = py::none(), "dry_run"_a = false, "check_invariants"_a = false);

  m.def(
      "cmd_eval",
      [](const std::filesystem::path& checkpoint, const std::filesystem::path& dataset,
         std::optional<std::filesystem::path> partition, const std::string& split, const std::string& zero_union) {
        EvalArgs args;
        args.checkpoint = checkpoint;
        args.dataset = dataset;
        args.partition = std::move(partition);
        args.split = split;
        args.zero_union = parse_policy(zero_union);
        std::ostringstream log;
        return metrics_dict(cmd_eval(args, log));
      },
      "checkpoint"_a, "dataset"_a, "partition"_a = py::none(), "split"_a = "target", "zero_union"_a = "exclude");
}
