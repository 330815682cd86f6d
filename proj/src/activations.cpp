#include "sohklstm/activations.hpp"

#include <cmath>
#include <limits>

namespace sohklstm {

double sigmoid(double x) {
  // branch on sign so exp never overflows; nudge saturated results off the
  // endpoints so the output is strictly inside (0,1) for every finite input
  if (x >= 0.0) {
    const double s = 1.0 / (1.0 + std::exp(-x));
    return s < 1.0 ? s : std::nextafter(1.0, 0.0);
  }
  const double e = std::exp(x);
  const double s = e / (1.0 + e);
  return s > 0.0 ? s : std::numeric_limits<double>::min();
}

double silu(double x) { return x * sigmoid(x); }

double sigmoid_derivative(double x) {
  const double s = sigmoid(x);
  return s * (1.0 - s);
}

double tanh_derivative(double x) {
  const double t = std::tanh(x);
  return 1.0 - t * t;
}

double silu_derivative(double x) {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

Vector apply(Activation a, const Vector& x) {
  Vector out(x.size());
  switch (a) {
    case Activation::Sigmoid:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = sigmoid(x[i]);
      break;
    case Activation::Tanh:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::tanh(x[i]);
      break;
    case Activation::Silu:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = silu(x[i]);
      break;
  }
  return out;
}

Vector derivative(Activation a, const Vector& x) {
  Vector out(x.size());
  switch (a) {
    case Activation::Sigmoid:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = sigmoid_derivative(x[i]);
      break;
    case Activation::Tanh:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = tanh_derivative(x[i]);
      break;
    case Activation::Silu:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = silu_derivative(x[i]);
      break;
  }
  return out;
}

}  // namespace sohklstm
