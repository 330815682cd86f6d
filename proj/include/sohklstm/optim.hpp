#pragma once

#include <limits>
#include <string>
#include <vector>

#include "sohklstm/linalg.hpp"
#include "sohklstm/tensor.hpp"

namespace sohklstm {

/// Adam with bias correction; one state owns the moments for a fixed,
/// ordered tensor list.
struct AdamState {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step_count = 0;
  std::vector<std::string> names;
  std::vector<std::size_t> sizes;
  std::vector<Vector> moment1, moment2;

  static AdamState create(const std::vector<TensorRef>& params, double lr = 0.001);
};

/// In-place bias-corrected update. `params` and `grads` must match the state's
/// registered tensor list element for element.
void adam_step(AdamState& state, const std::vector<TensorRef>& params,
               const std::vector<TensorRef>& grads);

enum class TrainDecision { Continue, ReduceLr, Stop };

/// Early stopping on best-ever validation loss plus plateau LR reduction.
/// patience or lr_patience of 0 disables the respective mechanism.
struct TrainController {
  int patience = 10;
  int lr_patience = 5;
  double lr_factor = 0.5;
  double min_lr = 1e-5;

  double best_val = std::numeric_limits<double>::infinity();
  int epochs_since_improve = 0;
  int epochs_since_lr_event = 0;
  bool diverged = false;
  bool stopped = false;

  /// Improvement means val_loss is below best_val by at least 1e-12.
  /// A non-finite loss stops immediately with the divergence flag set.
  TrainDecision update(double val_loss, AdamState& adam);
};

}  // namespace sohklstm
