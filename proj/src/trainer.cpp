#include "sohklstm/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "sohklstm/errors.hpp"
#include "sohklstm/optim.hpp"

namespace sohklstm {
namespace {

std::string fmt_full(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string join_trace(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) out += ',';
    out += fmt_full(xs[i]);
  }
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <typename P>
void accumulate_cell_grads(const P& cell, BatchLoss& bl, int window, P& acc) {
  std::vector<Vector> upstream(static_cast<std::size_t>(window));
  for (std::size_t k = 0; k < bl.tapes.size(); ++k) {
    upstream.back() = std::move(bl.grad_h_final[k]);
    BackwardResult<P> res = backward_sequence(cell, bl.tapes[k], upstream);
    std::vector<TensorRef> src = res.grads.tensors();
    std::vector<TensorRef> dst = acc.tensors();
    for (std::size_t i = 0; i < src.size(); ++i) {
      for (std::size_t e = 0; e < src[i].size(); ++e) dst[i].data[e] += src[i].data[e];
    }
  }
}

void clip_gradients(std::vector<TensorRef>& grads, double clip) {
  double sq = 0.0;
  for (const TensorRef& g : grads) {
    for (std::size_t e = 0; e < g.size(); ++e) sq += g.data[e] * g.data[e];
  }
  const double norm = std::sqrt(sq);
  if (norm <= clip || norm == 0.0) return;
  const double s = clip / norm;
  for (const TensorRef& g : grads) {
    for (std::size_t e = 0; e < g.size(); ++e) g.data[e] *= s;
  }
}

}  // namespace

std::string TrainReport::to_text() const {
  std::string out;
  out += "stop_reason=" + stop_reason + "\n";
  out += "epochs=" + std::to_string(train_loss.size()) + "\n";
  out += "best_epoch=" + std::to_string(best_epoch) + "\n";
  out += "best_val=" + fmt_full(best_val) + "\n";
  out += "wall_seconds=" + fmt_full(wall_seconds) + "\n";
  out += "train_loss=" + join_trace(train_loss) + "\n";
  out += "val_loss=" + join_trace(val_loss) + "\n";
  out += "lr_trace=" + join_trace(lr_trace) + "\n";
  out += "test_rmse=" + fmt_full(test_eval.rmse) + "\n";
  out += "test_mape=" + fmt_full(test_eval.mape) + "\n";
  out += "test_samples=" + std::to_string(test_eval.n_samples) + "\n";
  out += "test_seconds=" + fmt_full(test_eval.execution_time) + "\n";
  return out;
}

EvalReport evaluate(const SOHModel& m, const SequenceDataset& ds) {
  if (ds.samples.empty()) throw ShapeError("evaluate: empty dataset");
  const auto t0 = std::chrono::steady_clock::now();
  Vector pred, actual;
  pred.reserve(ds.samples.size());
  actual.reserve(ds.samples.size());
  for (const Sample& s : ds.samples) {
    pred.push_back(m.predict(s.window).soh_hat);
    actual.push_back(m.scaler.inverse(col::kSoh, s.target_soh));
  }
  EvalReport r;
  r.rmse = rmse(pred, actual);
  r.mape = mape(pred, actual);
  r.execution_time = seconds_since(t0);
  r.n_samples = static_cast<long>(ds.samples.size());
  return r;
}

TrainOutcome train_model(const RunConfig& cfg, const CycleData& data) {
  validate(cfg);
  const auto t0 = std::chrono::steady_clock::now();

  MinMaxScaler scaler;
  SplitDatasets split = fit_transform(scaler, data.records, cfg.window);

  std::mt19937_64 rng(cfg.seed);
  SOHModel model = build_model(shape_from(cfg), rng);
  model.scaler = scaler;
  model.nominal_capacity =
      data.nominal_capacity > 0.0 ? data.nominal_capacity : cfg.nominal_capacity;

  AdamState adam = AdamState::create(model.tensors(), cfg.lr);
  TrainController controller;
  controller.patience = cfg.patience;
  controller.lr_patience = cfg.lr_patience;
  controller.lr_factor = cfg.lr_factor;
  controller.min_lr = cfg.min_lr;

  TrainOutcome out{model, {}};
  TrainReport& report = out.report;
  SOHModel best = model;
  bool diverged = false;

  std::vector<std::size_t> order(split.train.samples.size());
  std::iota(order.begin(), order.end(), 0u);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const double epoch_lr = adam.lr;
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_sq = 0.0;
    double val_loss = 0.0;
    try {
      for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
        const std::vector<std::size_t> batch(order.begin() + start, order.begin() + stop);
        BatchLoss bl = batch_loss(model, split.train.samples, batch);
        epoch_sq += bl.value * static_cast<double>(batch.size());

        if (model.is_klstm()) {
          auto& cell = std::get<KLSTMCellParams>(model.cell);
          KLSTMCellParams acc = KLSTMCellParams::zeros_like(cell);
          accumulate_cell_grads(cell, bl, cfg.window, acc);
          std::vector<TensorRef> grads = acc.tensors();
          grads.push_back({"w_out", bl.grad_w_out.data.data(),
                           {bl.grad_w_out.rows, bl.grad_w_out.cols}});
          grads.push_back({"b_out", bl.grad_b_out.data(), {bl.grad_b_out.size()}});
          if (cfg.grad_clip > 0.0) clip_gradients(grads, cfg.grad_clip);
          adam_step(adam, model.tensors(), grads);
        } else {
          auto& cell = std::get<LSTMCellParams>(model.cell);
          LSTMCellParams acc = LSTMCellParams::zeros_like(cell);
          accumulate_cell_grads(cell, bl, cfg.window, acc);
          std::vector<TensorRef> grads = acc.tensors();
          grads.push_back({"w_out", bl.grad_w_out.data.data(),
                           {bl.grad_w_out.rows, bl.grad_w_out.cols}});
          grads.push_back({"b_out", bl.grad_b_out.data(), {bl.grad_b_out.size()}});
          if (cfg.grad_clip > 0.0) clip_gradients(grads, cfg.grad_clip);
          adam_step(adam, model.tensors(), grads);
        }
      }
      val_loss = dataset_loss(model, split.val.samples);
    } catch (const DivergenceError&) {
      diverged = true;
    }

    if (diverged) {
      report.stop_reason = "divergence";
      break;
    }

    const double train_loss = epoch_sq / static_cast<double>(order.size());
    report.train_loss.push_back(train_loss);
    report.val_loss.push_back(val_loss);
    report.lr_trace.push_back(epoch_lr);

    const double prev_best = controller.best_val;
    const TrainDecision decision = controller.update(val_loss, adam);
    if (controller.best_val < prev_best) {
      best = model;
      report.best_epoch = epoch;
    }
    if (decision == TrainDecision::Stop) {
      report.stop_reason = controller.diverged ? "divergence" : "early_stop";
      diverged = controller.diverged;
      break;
    }
  }
  if (report.stop_reason.empty()) report.stop_reason = "max_epochs";

  if (report.best_epoch > 0) out.model = best;
  else out.model = model;
  report.best_val = controller.best_val;
  if (!diverged) report.test_eval = evaluate(out.model, split.test);
  report.wall_seconds = seconds_since(t0);
  return out;
}

}  // namespace sohklstm
