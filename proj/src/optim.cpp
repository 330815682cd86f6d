#include "sohklstm/optim.hpp"

#include <algorithm>
#include <cmath>

#include "sohklstm/errors.hpp"

namespace sohklstm {

AdamState AdamState::create(const std::vector<TensorRef>& params, double lr_) {
  AdamState s;
  s.lr = lr_;
  for (const TensorRef& p : params) {
    s.names.push_back(p.name);
    s.sizes.push_back(p.size());
    s.moment1.emplace_back(p.size(), 0.0);
    s.moment2.emplace_back(p.size(), 0.0);
  }
  return s;
}

void adam_step(AdamState& state, const std::vector<TensorRef>& params,
               const std::vector<TensorRef>& grads) {
  if (params.size() != state.names.size() || grads.size() != state.names.size()) {
    throw ShapeError("adam_step: got " + std::to_string(params.size()) + " parameter and " +
                     std::to_string(grads.size()) + " gradient tensors for a state of " +
                     std::to_string(state.names.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != state.sizes[i] || grads[i].size() != state.sizes[i]) {
      throw ShapeError("adam_step: tensor '" + state.names[i] + "' size mismatch");
    }
    const double* g = grads[i].data;
    for (std::size_t k = 0; k < state.sizes[i]; ++k) {
      if (!std::isfinite(g[k])) {
        throw DivergenceError("non-finite gradient in tensor '" + state.names[i] + "'");
      }
    }
  }

  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params[i].data;
    const double* g = grads[i].data;
    Vector& m = state.moment1[i];
    Vector& v = state.moment2[i];
    for (std::size_t k = 0; k < state.sizes[i]; ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      p[k] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

TrainDecision TrainController::update(double val_loss, AdamState& adam) {
  if (stopped) return TrainDecision::Stop;
  if (!std::isfinite(val_loss)) {
    diverged = true;
    stopped = true;
    return TrainDecision::Stop;
  }
  if (best_val - val_loss >= 1e-12) {
    best_val = val_loss;
    epochs_since_improve = 0;
    epochs_since_lr_event = 0;
    return TrainDecision::Continue;
  }
  ++epochs_since_improve;
  ++epochs_since_lr_event;
  if (patience > 0 && epochs_since_improve >= patience) {
    stopped = true;
    return TrainDecision::Stop;
  }
  if (lr_patience > 0 && epochs_since_lr_event >= lr_patience) {
    epochs_since_lr_event = 0;
    adam.lr = std::max(adam.lr * lr_factor, min_lr);
    return TrainDecision::ReduceLr;
  }
  return TrainDecision::Continue;
}

}  // namespace sohklstm
