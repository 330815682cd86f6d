#pragma once

#include <random>
#include <vector>

#include "sohklstm/activations.hpp"
#include "sohklstm/linalg.hpp"
#include "sohklstm/splines.hpp"
#include "sohklstm/tensor.hpp"

namespace sohklstm {

struct CellState {
  Vector h;  // hidden state, length H
  Vector c;  // cell state, length H

  static CellState zeros(int hidden);
};

/// Everything one backward step needs, cached during the forward pass.
struct StepTape {
  Vector a;       // [h_prev, x], length H+n
  Vector c_prev;  // H
  Vector gate_i, gate_f, gate_o;  // post-sigmoid gate values
  Vector z_cand;  // candidate pre-activation
  Vector cand;    // full candidate (activation plus spline term when present)
  Vector c;       // updated cell state
  Vector h;       // updated hidden state
  Vector tanh_c;  // tanh of updated cell state
  // spline branch only; empty for the plain cell
  Vector x_spline;  // inputs clamped into the inner basis domain, length n
  Vector s;         // aggregated channel values, length Q
  Vector u;         // squashed channel values inside the outer domain, length Q
};

struct ForwardTape {
  CellState initial;
  std::vector<StepTape> steps;  // one per timestep, in order
};

struct LSTMCellParams {
  int hidden_size = 0;
  int input_size = 0;
  Matrix w_input, w_forget, w_output, w_candidate;  // each H x (H+n)
  Vector b_input, b_forget, b_output, b_candidate;  // each H
  Activation candidate_activation = Activation::Tanh;

  static LSTMCellParams zeros(int hidden, int input,
                              Activation candidate = Activation::Tanh);
  static LSTMCellParams zeros_like(const LSTMCellParams& p);

  /// Gate weights uniform in [-1/sqrt(H+n), 1/sqrt(H+n)], biases zero
  /// except the forget bias, which starts at 1.
  static LSTMCellParams init(int hidden, int input, std::mt19937_64& rng,
                             Activation candidate = Activation::Tanh);

  std::vector<TensorRef> tensors();
};

struct KLSTMCellParams {
  LSTMCellParams base;   // candidate_activation is Silu
  PsiTransform psi;      // inner expansion over the n raw inputs
  SplineBasis outer_basis;
  Vector outer_weights;  // [H x Q x G_out], index (h*Q + q)*G_out + j

  int hidden_size() const { return base.hidden_size; }
  int input_size() const { return base.input_size; }
  int channels() const { return psi.channels; }
  int grid_outer() const { return outer_basis.num_basis(); }

  std::size_t outer_index(int h, int q, int j) const {
    return (static_cast<std::size_t>(h) * psi.channels + q) * outer_basis.num_basis() + j;
  }

  static KLSTMCellParams zeros(int hidden, int input, int grid_inner, int grid_outer,
                               int degree, int channels);
  static KLSTMCellParams zeros_like(const KLSTMCellParams& p);

  /// Gate branch as LSTMCellParams::init; spline coefficients and outer
  /// weights start at zero, so a fresh cell coincides with the SiLU-candidate
  /// plain cell.
  static KLSTMCellParams init(int hidden, int input, int grid_inner, int grid_outer,
                              int degree, int channels, std::mt19937_64& rng);

  std::vector<TensorRef> tensors();
};

/// One gate-and-update step. Writes the cache into *tape when given.
/// Throws DivergenceError naming `timestep` if a pre-activation or the new
/// state is non-finite.
CellState lstm_step(const LSTMCellParams& p, const Vector& x, const CellState& prev,
                    StepTape* tape = nullptr, int timestep = 0);

/// KAN-enhanced step: the candidate gains a spline term built from the raw
/// inputs. Inputs are clamped into the inner basis domain before the spline
/// branch; the gates see them unclamped.
CellState klstm_step(const KLSTMCellParams& p, const Vector& x_raw, const CellState& prev,
                     StepTape* tape = nullptr, int timestep = 0);

struct SequenceResult {
  std::vector<CellState> states;  // state after each timestep, in order
  ForwardTape tape;
};

SequenceResult forward_sequence(const LSTMCellParams& p, const std::vector<Vector>& inputs,
                                const CellState& initial);
SequenceResult forward_sequence(const KLSTMCellParams& p, const std::vector<Vector>& inputs,
                                const CellState& initial);

template <typename Params>
struct BackwardResult {
  Params grads;                     // same shapes as the cell parameters
  std::vector<Vector> grad_inputs;  // dL/dx_t per timestep
  CellState grad_initial;           // dL/dh_0, dL/dc_0
};

/// Reverse-mode sweep over a recorded forward pass. `upstream_h[t]` is the
/// loss gradient w.r.t. h_t; entries may be empty vectors, meaning zero.
BackwardResult<LSTMCellParams> backward_sequence(const LSTMCellParams& p,
                                                 const ForwardTape& tape,
                                                 const std::vector<Vector>& upstream_h);
BackwardResult<KLSTMCellParams> backward_sequence(const KLSTMCellParams& p,
                                                  const ForwardTape& tape,
                                                  const std::vector<Vector>& upstream_h);

}  // namespace sohklstm
