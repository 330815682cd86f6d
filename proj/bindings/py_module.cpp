#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "sohklstm/activations.hpp"
#include "sohklstm/config.hpp"
#include "sohklstm/data.hpp"
#include "sohklstm/errors.hpp"
#include "sohklstm/metrics.hpp"
#include "sohklstm/model.hpp"
#include "sohklstm/splines.hpp"
#include "sohklstm/trainer.hpp"

namespace py = pybind11;

namespace {

using namespace sohklstm;

RunConfig config_from_kwargs(const py::kwargs& kwargs) {
  RunConfig cfg;
  for (auto item : kwargs) {
    std::string key = py::cast<std::string>(item.first);
    std::string value = py::cast<std::string>(py::str(item.second));
    config_set(cfg, key, value);
  }
  return cfg;
}

ModelShape shape_from_args(const std::string& kind, int hidden_size, int degree, int grid_inner,
                           int grid_outer, int channels) {
  if (kind != "lstm" && kind != "klstm") {
    throw ConfigError("model must be lstm or klstm, got '" + kind + "'");
  }
  ModelShape shape;
  shape.klstm = kind == "klstm";
  shape.hidden = hidden_size;
  shape.degree = degree;
  shape.grid_inner = grid_inner;
  shape.grid_outer = grid_outer;
  shape.channels = channels;
  return shape;
}

py::dict eval_to_dict(const EvalReport& r) {
  py::dict d;
  d["rmse"] = r.rmse;
  d["mape"] = r.mape;
  if (r.has_baseline) d["error_reduction"] = r.error_reduction;
  d["execution_time"] = r.execution_time;
  d["n_samples"] = r.n_samples;
  return d;
}

py::dict report_to_dict(const TrainReport& r) {
  py::dict d;
  d["train_loss"] = r.train_loss;
  d["val_loss"] = r.val_loss;
  d["lr_trace"] = r.lr_trace;
  d["stop_reason"] = r.stop_reason;
  d["best_epoch"] = r.best_epoch;
  d["best_val"] = r.best_val;
  d["wall_seconds"] = r.wall_seconds;
  d["test"] = eval_to_dict(r.test_eval);
  return d;
}

const SequenceDataset& pick_partition(const SplitDatasets& splits, const std::string& name) {
  if (name == "train") return splits.train;
  if (name == "val") return splits.val;
  if (name == "test") return splits.test;
  throw ConfigError("partition must be train, val, or test, got '" + name + "'");
}

py::list predict_rows(const SOHModel& m, const std::string& csv_path, int window,
                      const std::string& partition) {
  CycleData data = load_csv(csv_path, m.nominal_capacity);
  SplitDatasets splits = transform_split(m.scaler, data.records, window);
  const SequenceDataset& ds = pick_partition(splits, partition);
  py::list rows;
  for (const Sample& s : ds.samples) {
    Prediction p = m.predict(s.window);
    py::dict row;
    row["cycle_index"] = s.cycle_index;
    row["soh_actual"] = m.scaler.inverse(col::kSoh, s.target_soh);
    row["soh_pred"] = p.soh_hat;
    row["cap_actual"] = m.scaler.inverse(col::kCapacity, s.target_cap);
    row["cap_pred"] = p.cap_hat;
    rows.append(row);
  }
  return rows;
}

py::dict evaluate_file(const SOHModel& m, const std::string& csv_path, int window,
                       const std::string& partition) {
  CycleData data = load_csv(csv_path, m.nominal_capacity);
  SplitDatasets splits = transform_split(m.scaler, data.records, window);
  return eval_to_dict(evaluate(m, pick_partition(splits, partition)));
}

py::tuple train_file(const std::string& data_path, const py::kwargs& kwargs) {
  RunConfig cfg = config_from_kwargs(kwargs);
  cfg.data = data_path;
  validate(cfg);
  CycleData data = load_csv(data_path, cfg.nominal_capacity);
  TrainOutcome outcome = train_model(cfg, data);
  if (!cfg.out.empty()) save_model(outcome.model, cfg.out);
  return py::make_tuple(outcome.model, report_to_dict(outcome.report));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  using namespace sohklstm;

  m.doc() = "Battery state-of-health prediction with a spline-augmented LSTM";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

  py::enum_<Activation>(m, "Activation")
      .value("Sigmoid", Activation::Sigmoid)
      .value("Tanh", Activation::Tanh)
      .value("Silu", Activation::Silu);

  m.def("sigmoid", &sigmoid, py::arg("x"));
  m.def("silu", &silu, py::arg("x"));
  m.def("activation_apply", &apply, py::arg("activation"), py::arg("x"));
  m.def("activation_derivative", &derivative, py::arg("activation"), py::arg("x"));

  py::class_<SplineBasis>(m, "SplineBasis")
      .def(py::init([](std::vector<double> knots, int degree) {
             return SplineBasis(KnotVector(std::move(knots), degree));
           }),
           py::arg("knots"), py::arg("degree"))
      .def_static("uniform_clamped", &SplineBasis::uniform_clamped, py::arg("num_basis"),
                  py::arg("degree"), py::arg("lo") = 0.0, py::arg("hi") = 1.0)
      .def_property_readonly("num_basis", &SplineBasis::num_basis)
      .def_property_readonly("degree", &SplineBasis::degree)
      .def_property_readonly("domain_min", &SplineBasis::domain_min)
      .def_property_readonly("domain_max", &SplineBasis::domain_max)
      .def("eval", &SplineBasis::eval, py::arg("x"))
      .def("eval_derivative", &SplineBasis::eval_derivative, py::arg("x"));

  m.def("rmse", &rmse, py::arg("pred"), py::arg("target"));
  m.def("mape", &mape, py::arg("pred"), py::arg("target"));
  m.def("error_reduction", &error_reduction, py::arg("new_rmse"), py::arg("base_rmse"));
  m.def("soh_from_capacity", &soh_from_capacity, py::arg("c_t"), py::arg("c_nominal"));

  py::class_<CycleRecord>(m, "CycleRecord")
      .def_readonly("cycle_index", &CycleRecord::cycle_index)
      .def_readonly("capacity_ah", &CycleRecord::capacity_ah)
      .def_readonly("voltage_v", &CycleRecord::voltage_v)
      .def_readonly("current_a", &CycleRecord::current_a)
      .def_readonly("temperature_c", &CycleRecord::temperature_c)
      .def_readonly("soh", &CycleRecord::soh)
      .def("__repr__", [](const CycleRecord& r) {
        return "CycleRecord(cycle_index=" + std::to_string(r.cycle_index) +
               ", soh=" + std::to_string(r.soh) + ")";
      });

  m.def(
      "load_records",
      [](const std::string& path, double nominal_capacity) {
        return load_csv(path, nominal_capacity).records;
      },
      py::arg("path"), py::arg("nominal_capacity") = 0.0);

  m.def(
      "generate",
      [](const std::string& path, const std::string& profile, int cycles, std::uint64_t seed,
         double nominal) {
        std::vector<CycleRecord> records =
            synth_generate(seed, cycles, parse_profile(profile), nominal);
        write_csv(path, records, nominal);
      },
      py::arg("path"), py::arg("profile"), py::arg("cycles") = 170, py::arg("seed") = 42,
      py::arg("nominal") = 2.0);

  py::class_<SOHModel>(m, "Model")
      .def_property_readonly("hidden_size", &SOHModel::hidden_size)
      .def_property_readonly("input_size", &SOHModel::input_size)
      .def_property_readonly("is_klstm", &SOHModel::is_klstm)
      .def_property_readonly("nominal_capacity",
                             [](const SOHModel& m_) { return m_.nominal_capacity; })
      .def(
          "predict",
          [](const SOHModel& m_, const std::vector<Vector>& window) {
            Prediction p = m_.predict(window);
            return py::make_tuple(p.soh_hat, p.cap_hat);
          },
          py::arg("window"), "Prediction (soh, capacity_ah) from normalized feature rows.")
      .def("predict_rows", &predict_rows, py::arg("csv_path"), py::arg("window") = 8,
           py::arg("partition") = "test")
      .def("evaluate", &evaluate_file, py::arg("csv_path"), py::arg("window") = 8,
           py::arg("partition") = "test")
      .def("save", &save_model, py::arg("path"));

  m.def(
      "load",
      [](const std::string& path, const std::string& model, int hidden_size, int degree,
         int grid_inner, int grid_outer, int channels) {
        return load_model(path,
                          shape_from_args(model, hidden_size, degree, grid_inner, grid_outer,
                                          channels));
      },
      py::arg("path"), py::arg("model") = "klstm", py::arg("hidden_size") = 32,
      py::arg("degree") = 3, py::arg("grid_inner") = 8, py::arg("grid_outer") = 8,
      py::arg("channels") = 1);

  m.def("train", &train_file, py::arg("data"),
        "Full training protocol on one CSV; extra keyword arguments are config keys. "
        "Returns (model, report). A checkpoint is written when out= is given.");
}
