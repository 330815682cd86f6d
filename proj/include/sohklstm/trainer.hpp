#pragma once

#include <string>
#include <vector>

#include "sohklstm/config.hpp"
#include "sohklstm/data.hpp"
#include "sohklstm/metrics.hpp"
#include "sohklstm/model.hpp"

namespace sohklstm {

struct TrainReport {
  std::vector<double> train_loss;  // one entry per completed epoch
  std::vector<double> val_loss;
  std::vector<double> lr_trace;    // learning rate used during each epoch
  std::string stop_reason;         // early_stop, max_epochs, or divergence
  int best_epoch = 0;              // 1-based
  double best_val = 0.0;
  double wall_seconds = 0.0;
  EvalReport test_eval;

  /// Flat key-value block; traces are comma-joined with full precision.
  std::string to_text() const;
};

struct TrainOutcome {
  SOHModel model;  // best-validation parameters
  TrainReport report;
};

/// Full training protocol: chronological split, Adam, plateau LR reduction,
/// early stopping, best-checkpoint restore, test evaluation.
TrainOutcome train_model(const RunConfig& cfg, const CycleData& data);

/// RMSE and MAPE of denormalized SOH predictions over one dataset; the
/// execution time covers the prediction loop.
EvalReport evaluate(const SOHModel& m, const SequenceDataset& ds);

}  // namespace sohklstm
