#pragma once

#include "sohklstm/linalg.hpp"

namespace sohklstm {

enum class Activation { Sigmoid, Tanh, Silu };

/// Overflow-safe logistic function. Strictly inside (0,1) for finite input.
double sigmoid(double x);

/// x * sigmoid(x). Bounded below by about -0.2785, unbounded above.
double silu(double x);

double sigmoid_derivative(double x);
double tanh_derivative(double x);
double silu_derivative(double x);

Vector apply(Activation a, const Vector& x);
Vector derivative(Activation a, const Vector& x);

}  // namespace sohklstm
