#pragma once

#include <cstddef>
#include <vector>

#include "sohklstm/linalg.hpp"

namespace sohklstm {

/// Clamped knot grid for degree-k B-splines. The first and last k+1 knots
/// are repeated, so the basis spans [knots[k], knots[size-k-1]] and forms a
/// partition of unity there.
struct KnotVector {
  std::vector<double> knots;  // nondecreasing
  int degree = 0;

  KnotVector(std::vector<double> knots_, int degree_);

  /// Uniform interior knots over [lo, hi] producing num_basis functions.
  static KnotVector uniform_clamped(int num_basis, int degree, double lo = 0.0, double hi = 1.0);

  double domain_min() const { return knots[degree]; }
  double domain_max() const { return knots[knots.size() - degree - 1]; }
  int num_basis() const { return static_cast<int>(knots.size()) - degree - 1; }

  /// Index i with knots[i] <= x < knots[i+1]. The final nonempty span is
  /// treated as closed on the right so the domain maximum is evaluable.
  int find_span(double x) const;
};

/// All num_basis() B-spline basis values (and first derivatives) at a point,
/// computed by the Cox-de Boor recursion in its localized triangular form.
struct SplineBasis {
  KnotVector knot_vector;

  explicit SplineBasis(KnotVector kv) : knot_vector(std::move(kv)) {}

  static SplineBasis uniform_clamped(int num_basis, int degree, double lo = 0.0, double hi = 1.0) {
    return SplineBasis(KnotVector::uniform_clamped(num_basis, degree, lo, hi));
  }

  int num_basis() const { return knot_vector.num_basis(); }
  int degree() const { return knot_vector.degree; }
  double domain_min() const { return knot_vector.domain_min(); }
  double domain_max() const { return knot_vector.domain_max(); }

  /// Basis values N_{i,k}(x) for every i. x must lie in the closed domain.
  Vector eval(double x) const;

  /// dN_{i,k}/dx for every i. Requires degree >= 1.
  Vector eval_derivative(double x) const;
};

/// Per-feature spline expansions summed into aggregation channels:
/// apply(x)[q] = sum_p sum_i coeffs[i,q,p] * N_i(x[p]).
struct PsiTransform {
  SplineBasis basis;
  int channels;  // Q
  int features;  // n
  Vector coeffs;  // [num_basis x channels x features], index (i*Q + q)*n + p

  PsiTransform(SplineBasis basis_, int channels_, int features_);

  std::size_t coeff_index(int i, int q, int p) const {
    return (static_cast<std::size_t>(i) * channels + q) * features + p;
  }

  /// x must have length `features`, each component inside the basis domain.
  Vector apply(const Vector& x) const;

  struct Backward {
    Vector grad_coeffs;  // same layout as coeffs
    Vector grad_x;       // length features
  };

  /// Chain rule through apply: grad_coeffs[i,q,p] = upstream[q]*N_i(x[p]),
  /// grad_x[p] = sum_q upstream[q] * sum_i coeffs[i,q,p]*N_i'(x[p]).
  Backward backward(const Vector& x, const Vector& upstream) const;

  /// Accumulating form used inside sequence backprop. grad_coeffs must have
  /// coeffs.size() entries; grad_x may be null when input gradients are not needed.
  void backward_into(const Vector& x, const Vector& upstream, double* grad_coeffs,
                     Vector* grad_x) const;
};

}  // namespace sohklstm
