#include "sohklstm/recurrent.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>

#include "sohklstm/errors.hpp"

namespace sohklstm {
namespace {

void require_finite(const Vector& v, const char* what, int timestep) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw DivergenceError(std::string("non-finite ") + what + " at timestep " +
                            std::to_string(timestep));
    }
  }
}

void check_step_shapes(int hidden, int input, const Vector& x, const CellState& prev,
                       const char* op) {
  if (static_cast<int>(x.size()) != input) {
    throw ShapeError(std::string(op) + ": input has length " + std::to_string(x.size()) +
                     " but cell expects " + std::to_string(input));
  }
  if (static_cast<int>(prev.h.size()) != hidden || static_cast<int>(prev.c.size()) != hidden) {
    throw ShapeError(std::string(op) + ": state shapes (" + std::to_string(prev.h.size()) + ", " +
                     std::to_string(prev.c.size()) + ") do not match hidden size " +
                     std::to_string(hidden));
  }
}

struct GateForward {
  Vector a;                    // [h_prev, x]
  Vector z_cand;               // candidate pre-activation
  Vector gate_i, gate_f, gate_o;
};

GateForward run_gates(const LSTMCellParams& p, const Vector& x, const CellState& prev,
                      int timestep) {
  GateForward g;
  g.a = concat(prev.h, x);
  Vector z_i = add(matvec(p.w_input, g.a), p.b_input);
  Vector z_f = add(matvec(p.w_forget, g.a), p.b_forget);
  Vector z_o = add(matvec(p.w_output, g.a), p.b_output);
  g.z_cand = add(matvec(p.w_candidate, g.a), p.b_candidate);
  require_finite(z_i, "input-gate pre-activation", timestep);
  require_finite(z_f, "forget-gate pre-activation", timestep);
  require_finite(z_o, "output-gate pre-activation", timestep);
  require_finite(g.z_cand, "candidate pre-activation", timestep);
  g.gate_i = sohklstm::apply(Activation::Sigmoid, z_i);
  g.gate_f = sohklstm::apply(Activation::Sigmoid, z_f);
  g.gate_o = sohklstm::apply(Activation::Sigmoid, z_o);
  return g;
}

CellState finish_step(const GateForward& g, const Vector& cand, const CellState& prev,
                      StepTape* tape, int timestep) {
  const std::size_t hidden = prev.h.size();
  CellState next;
  next.c.resize(hidden);
  next.h.resize(hidden);
  Vector tanh_c(hidden);
  for (std::size_t h = 0; h < hidden; ++h) {
    next.c[h] = g.gate_f[h] * prev.c[h] + g.gate_i[h] * cand[h];
    tanh_c[h] = std::tanh(next.c[h]);
    next.h[h] = g.gate_o[h] * tanh_c[h];
  }
  require_finite(next.c, "cell state", timestep);
  if (tape != nullptr) {
    tape->a = g.a;
    tape->c_prev = prev.c;
    tape->gate_i = g.gate_i;
    tape->gate_f = g.gate_f;
    tape->gate_o = g.gate_o;
    tape->z_cand = g.z_cand;
    tape->cand = cand;
    tape->c = next.c;
    tape->h = next.h;
    tape->tanh_c = std::move(tanh_c);
  }
  return next;
}

const LSTMCellParams& base_of(const LSTMCellParams& p) { return p; }
const LSTMCellParams& base_of(const KLSTMCellParams& p) { return p.base; }

LSTMCellParams& base_grads_of(LSTMCellParams& g) { return g; }
LSTMCellParams& base_grads_of(KLSTMCellParams& g) { return g.base; }

}  // namespace

CellState CellState::zeros(int hidden) {
  CellState s;
  s.h.assign(hidden, 0.0);
  s.c.assign(hidden, 0.0);
  return s;
}

LSTMCellParams LSTMCellParams::zeros(int hidden, int input, Activation candidate) {
  if (hidden < 1 || input < 1) {
    throw ShapeError("LSTMCellParams: hidden and input sizes must be positive");
  }
  LSTMCellParams p;
  p.hidden_size = hidden;
  p.input_size = input;
  const std::size_t h = static_cast<std::size_t>(hidden);
  const std::size_t a = static_cast<std::size_t>(hidden + input);
  p.w_input = Matrix(h, a);
  p.w_forget = Matrix(h, a);
  p.w_output = Matrix(h, a);
  p.w_candidate = Matrix(h, a);
  p.b_input.assign(h, 0.0);
  p.b_forget.assign(h, 0.0);
  p.b_output.assign(h, 0.0);
  p.b_candidate.assign(h, 0.0);
  p.candidate_activation = candidate;
  return p;
}

LSTMCellParams LSTMCellParams::zeros_like(const LSTMCellParams& p) {
  return zeros(p.hidden_size, p.input_size, p.candidate_activation);
}

LSTMCellParams LSTMCellParams::init(int hidden, int input, std::mt19937_64& rng,
                                    Activation candidate) {
  LSTMCellParams p = zeros(hidden, input, candidate);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden + input));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Matrix* w : {&p.w_input, &p.w_forget, &p.w_output, &p.w_candidate}) {
    for (double& e : w->data) e = dist(rng);
  }
  std::fill(p.b_forget.begin(), p.b_forget.end(), 1.0);
  return p;
}

std::vector<TensorRef> LSTMCellParams::tensors() {
  const std::size_t h = static_cast<std::size_t>(hidden_size);
  const std::size_t a = static_cast<std::size_t>(hidden_size + input_size);
  return {
      {"w_input", w_input.data.data(), {h, a}},
      {"w_forget", w_forget.data.data(), {h, a}},
      {"w_output", w_output.data.data(), {h, a}},
      {"w_candidate", w_candidate.data.data(), {h, a}},
      {"b_input", b_input.data(), {h}},
      {"b_forget", b_forget.data(), {h}},
      {"b_output", b_output.data(), {h}},
      {"b_candidate", b_candidate.data(), {h}},
  };
}

KLSTMCellParams KLSTMCellParams::zeros(int hidden, int input, int grid_inner, int grid_outer,
                                       int degree, int channels) {
  return KLSTMCellParams{
      LSTMCellParams::zeros(hidden, input, Activation::Silu),
      PsiTransform(SplineBasis::uniform_clamped(grid_inner, degree), channels, input),
      SplineBasis::uniform_clamped(grid_outer, degree),
      Vector(static_cast<std::size_t>(hidden) * channels * grid_outer, 0.0)};
}

KLSTMCellParams KLSTMCellParams::zeros_like(const KLSTMCellParams& p) {
  return KLSTMCellParams{LSTMCellParams::zeros_like(p.base),
                         PsiTransform(p.psi.basis, p.psi.channels, p.psi.features),
                         p.outer_basis, Vector(p.outer_weights.size(), 0.0)};
}

KLSTMCellParams KLSTMCellParams::init(int hidden, int input, int grid_inner, int grid_outer,
                                      int degree, int channels, std::mt19937_64& rng) {
  KLSTMCellParams p = zeros(hidden, input, grid_inner, grid_outer, degree, channels);
  p.base = LSTMCellParams::init(hidden, input, rng, Activation::Silu);
  return p;
}

std::vector<TensorRef> KLSTMCellParams::tensors() {
  std::vector<TensorRef> out = base.tensors();
  out.push_back({"psi_coeffs", psi.coeffs.data(),
                 {static_cast<std::size_t>(psi.basis.num_basis()),
                  static_cast<std::size_t>(psi.channels),
                  static_cast<std::size_t>(psi.features)}});
  out.push_back({"outer_weights", outer_weights.data(),
                 {static_cast<std::size_t>(base.hidden_size),
                  static_cast<std::size_t>(psi.channels),
                  static_cast<std::size_t>(outer_basis.num_basis())}});
  return out;
}

CellState lstm_step(const LSTMCellParams& p, const Vector& x, const CellState& prev,
                    StepTape* tape, int timestep) {
  check_step_shapes(p.hidden_size, p.input_size, x, prev, "lstm_step");
  GateForward g = run_gates(p, x, prev, timestep);
  Vector cand = sohklstm::apply(p.candidate_activation, g.z_cand);
  return finish_step(g, cand, prev, tape, timestep);
}

CellState klstm_step(const KLSTMCellParams& p, const Vector& x_raw, const CellState& prev,
                     StepTape* tape, int timestep) {
  check_step_shapes(p.base.hidden_size, p.base.input_size, x_raw, prev, "klstm_step");
  GateForward g = run_gates(p.base, x_raw, prev, timestep);
  Vector cand = sohklstm::apply(p.base.candidate_activation, g.z_cand);

  const int n = p.base.input_size;
  const int hidden = p.base.hidden_size;
  const int q_channels = p.psi.channels;
  const int g_out = p.outer_basis.num_basis();
  const double lo_in = p.psi.basis.domain_min();
  const double hi_in = p.psi.basis.domain_max();

  Vector xc(n);
  for (int j = 0; j < n; ++j) xc[j] = std::clamp(x_raw[j], lo_in, hi_in);
  Vector s = p.psi.apply(xc);
  require_finite(s, "spline aggregate", timestep);

  const double lo_out = p.outer_basis.domain_min();
  const double width = p.outer_basis.domain_max() - lo_out;
  Vector u(q_channels);
  for (int q = 0; q < q_channels; ++q) u[q] = lo_out + width * 0.5 * (std::tanh(s[q]) + 1.0);

  for (int q = 0; q < q_channels; ++q) {
    const Vector b = p.outer_basis.eval(u[q]);
    for (int h = 0; h < hidden; ++h) {
      double acc = 0.0;
      for (int j = 0; j < g_out; ++j) acc += p.outer_weights[p.outer_index(h, q, j)] * b[j];
      cand[h] += acc;
    }
  }

  CellState next = finish_step(g, cand, prev, tape, timestep);
  if (tape != nullptr) {
    tape->x_spline = std::move(xc);
    tape->s = std::move(s);
    tape->u = std::move(u);
  }
  return next;
}

namespace {

template <typename Params, typename StepFn>
SequenceResult run_forward(const Params& p, const std::vector<Vector>& inputs,
                           const CellState& initial, StepFn step) {
  if (inputs.empty()) throw ShapeError("forward_sequence: empty input sequence");
  SequenceResult r;
  r.tape.initial = initial;
  r.tape.steps.resize(inputs.size());
  r.states.reserve(inputs.size());
  CellState s = initial;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    s = step(p, inputs[t], s, &r.tape.steps[t], static_cast<int>(t));
    r.states.push_back(s);
  }
  return r;
}

template <typename Params>
BackwardResult<Params> backward_impl(const Params& p, const ForwardTape& tape,
                                     const std::vector<Vector>& upstream_h) {
  constexpr bool kSpline = std::is_same_v<Params, KLSTMCellParams>;
  const LSTMCellParams& base = base_of(p);
  const int hidden = base.hidden_size;
  const int n = base.input_size;
  const int len = static_cast<int>(tape.steps.size());
  if (static_cast<int>(upstream_h.size()) != len) {
    throw ShapeError("backward_sequence: upstream has " + std::to_string(upstream_h.size()) +
                     " entries for " + std::to_string(len) + " timesteps");
  }
  for (const Vector& u : upstream_h) {
    if (!u.empty() && static_cast<int>(u.size()) != hidden) {
      throw ShapeError("backward_sequence: upstream entry length " + std::to_string(u.size()) +
                       " does not match hidden size " + std::to_string(hidden));
    }
  }

  BackwardResult<Params> r{Params::zeros_like(p), std::vector<Vector>(len, Vector(n, 0.0)),
                           CellState::zeros(hidden)};
  LSTMCellParams& gb = base_grads_of(r.grads);

  Vector dh_carry(hidden, 0.0);
  Vector dc_carry(hidden, 0.0);
  Vector dz_i(hidden), dz_f(hidden), dz_o(hidden), dcand(hidden), dc(hidden);

  for (int t = len - 1; t >= 0; --t) {
    const StepTape& st = tape.steps[t];

    Vector dh = dh_carry;
    if (!upstream_h[t].empty()) axpy(1.0, upstream_h[t], dh);

    for (int h = 0; h < hidden; ++h) {
      const double tc = st.tanh_c[h];
      dz_o[h] = dh[h] * tc * st.gate_o[h] * (1.0 - st.gate_o[h]);
      dc[h] = dh[h] * st.gate_o[h] * (1.0 - tc * tc) + dc_carry[h];
      dcand[h] = dc[h] * st.gate_i[h];
      dz_i[h] = dc[h] * st.cand[h] * st.gate_i[h] * (1.0 - st.gate_i[h]);
      dz_f[h] = dc[h] * st.c_prev[h] * st.gate_f[h] * (1.0 - st.gate_f[h]);
    }
    Vector dz_c = mul(dcand, derivative(base.candidate_activation, st.z_cand));

    if constexpr (kSpline) {
      const int q_channels = p.psi.channels;
      const double lo_out = p.outer_basis.domain_min();
      const double width = p.outer_basis.domain_max() - lo_out;
      const int g_out = p.outer_basis.num_basis();
      Vector ds(q_channels);
      for (int q = 0; q < q_channels; ++q) {
        const Vector b = p.outer_basis.eval(st.u[q]);
        const Vector db = p.outer_basis.eval_derivative(st.u[q]);
        double du = 0.0;
        for (int h = 0; h < hidden; ++h) {
          const double dch = dcand[h];
          if (dch == 0.0) continue;
          double inner = 0.0;
          for (int j = 0; j < g_out; ++j) {
            const std::size_t idx = p.outer_index(h, q, j);
            r.grads.outer_weights[idx] += dch * b[j];
            inner += p.outer_weights[idx] * db[j];
          }
          du += dch * inner;
        }
        const double v = std::tanh(st.s[q]);
        ds[q] = du * width * 0.5 * (1.0 - v * v);
      }
      Vector grad_xc(n, 0.0);
      p.psi.backward_into(st.x_spline, ds, r.grads.psi.coeffs.data(), &grad_xc);
      // clamp passes gradient only where it was inactive
      for (int j = 0; j < n; ++j) {
        if (st.a[hidden + j] == st.x_spline[j]) r.grad_inputs[t][j] += grad_xc[j];
      }
    }

    add_outer(gb.w_input, dz_i, st.a);
    add_outer(gb.w_forget, dz_f, st.a);
    add_outer(gb.w_output, dz_o, st.a);
    add_outer(gb.w_candidate, dz_c, st.a);
    axpy(1.0, dz_i, gb.b_input);
    axpy(1.0, dz_f, gb.b_forget);
    axpy(1.0, dz_o, gb.b_output);
    axpy(1.0, dz_c, gb.b_candidate);

    Vector da = matvec_transposed(base.w_input, dz_i);
    axpy(1.0, matvec_transposed(base.w_forget, dz_f), da);
    axpy(1.0, matvec_transposed(base.w_output, dz_o), da);
    axpy(1.0, matvec_transposed(base.w_candidate, dz_c), da);

    for (int h = 0; h < hidden; ++h) dh_carry[h] = da[h];
    for (int j = 0; j < n; ++j) r.grad_inputs[t][j] += da[hidden + j];
    for (int h = 0; h < hidden; ++h) dc_carry[h] = dc[h] * st.gate_f[h];
  }

  r.grad_initial.h = std::move(dh_carry);
  r.grad_initial.c = std::move(dc_carry);
  return r;
}

}  // namespace

SequenceResult forward_sequence(const LSTMCellParams& p, const std::vector<Vector>& inputs,
                                const CellState& initial) {
  return run_forward(p, inputs, initial,
                     [](const LSTMCellParams& cp, const Vector& x, const CellState& s,
                        StepTape* tape, int t) { return lstm_step(cp, x, s, tape, t); });
}

SequenceResult forward_sequence(const KLSTMCellParams& p, const std::vector<Vector>& inputs,
                                const CellState& initial) {
  return run_forward(p, inputs, initial,
                     [](const KLSTMCellParams& cp, const Vector& x, const CellState& s,
                        StepTape* tape, int t) { return klstm_step(cp, x, s, tape, t); });
}

BackwardResult<LSTMCellParams> backward_sequence(const LSTMCellParams& p, const ForwardTape& tape,
                                                 const std::vector<Vector>& upstream_h) {
  return backward_impl(p, tape, upstream_h);
}

BackwardResult<KLSTMCellParams> backward_sequence(const KLSTMCellParams& p,
                                                  const ForwardTape& tape,
                                                  const std::vector<Vector>& upstream_h) {
  return backward_impl(p, tape, upstream_h);
}

}  // namespace sohklstm
