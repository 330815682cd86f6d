#pragma once

#include <random>
#include <string>
#include <variant>
#include <vector>

#include "sohklstm/data.hpp"
#include "sohklstm/recurrent.hpp"

namespace sohklstm {

struct Prediction {
  double soh_hat = 0.0;  // fraction, clamped into [0, 1.2]
  double cap_hat = 0.0;  // ampere-hours, clamped nonnegative
};

/// Cell geometry needed to rebuild a model before loading a checkpoint into it.
struct ModelShape {
  bool klstm = true;
  int hidden = 32;
  int input = 4;
  int grid_inner = 8;   // inner basis size G
  int grid_outer = 8;   // outer basis size G_out
  int degree = 3;       // spline degree k
  int channels = 1;     // aggregation channels Q
};

struct SOHModel {
  std::variant<LSTMCellParams, KLSTMCellParams> cell;
  Matrix w_out;  // 2 x H, rows [soh, capacity]
  Vector b_out;  // 2
  MinMaxScaler scaler;
  double nominal_capacity = 0.0;

  int hidden_size() const;
  int input_size() const;
  bool is_klstm() const { return cell.index() == 1; }

  /// Trainable tensors only; scaler state is serialized separately.
  std::vector<TensorRef> tensors();

  /// Runs the cell from a zero state; returns the final hidden state.
  Vector hidden_final(const std::vector<Vector>& window, ForwardTape* tape = nullptr) const;

  /// Normalized head outputs [soh, capacity].
  Vector output(const std::vector<Vector>& window, ForwardTape* tape = nullptr) const;

  /// Denormalized prediction. Requires a fitted scaler.
  Prediction predict(const std::vector<Vector>& window) const;
};

/// Head weights uniform in [-1/sqrt(H), 1/sqrt(H)], head bias zero.
SOHModel build_model(const ModelShape& shape, std::mt19937_64& rng);
SOHModel build_model_zeros(const ModelShape& shape);

struct BatchLoss {
  double value = 0.0;
  Matrix grad_w_out;
  Vector grad_b_out;
  std::vector<Vector> grad_h_final;  // dL/dh_T per window, feeds backward_sequence
  std::vector<ForwardTape> tapes;
};

/// Squared error averaged over the batch and over the two outputs, with exact
/// gradients for the head and the final hidden states.
BatchLoss batch_loss(const SOHModel& m, const std::vector<Sample>& samples,
                     const std::vector<std::size_t>& indices);

/// Loss only, over a whole dataset; no tapes kept.
double dataset_loss(const SOHModel& m, const std::vector<Sample>& samples);

/// Named-tensor binary checkpoint; see README for the byte layout.
void save_model(const SOHModel& m, const std::string& path);
SOHModel load_model(const std::string& path, const ModelShape& shape);

}  // namespace sohklstm
