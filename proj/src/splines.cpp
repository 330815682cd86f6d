#include "sohklstm/splines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sohklstm/errors.hpp"

namespace sohklstm {
namespace {

void check_in_domain(const KnotVector& kv, double x, const char* op) {
  if (!(x >= kv.domain_min() && x <= kv.domain_max())) {
    throw ShapeError(std::string(op) + ": x=" + std::to_string(x) + " outside knot domain [" +
                     std::to_string(kv.domain_min()) + ", " + std::to_string(kv.domain_max()) +
                     "]");
  }
}

// Nonzero basis values of the given degree at x, written to N[0..deg].
// N[j] corresponds to basis index span - deg + j. Denominators in this
// triangle are bounded below by the span width, so no 0/0 guard is needed.
void basis_triangle(const std::vector<double>& knots, int deg, int span, double x, double* N) {
  std::vector<double> left(deg + 1), right(deg + 1);
  N[0] = 1.0;
  for (int j = 1; j <= deg; ++j) {
    left[j] = x - knots[span + 1 - j];
    right[j] = knots[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double tmp = N[r] / (right[r + 1] + left[j - r]);
      N[r] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    N[j] = saved;
  }
}

}  // namespace

KnotVector::KnotVector(std::vector<double> knots_, int degree_)
    : knots(std::move(knots_)), degree(degree_) {
  if (degree < 0) throw ShapeError("KnotVector: degree must be nonnegative");
  const std::size_t k = static_cast<std::size_t>(degree);
  if (knots.size() < 2 * (k + 1)) {
    throw ShapeError("KnotVector: need at least " + std::to_string(2 * (k + 1)) +
                     " knots for degree " + std::to_string(degree) + ", got " +
                     std::to_string(knots.size()));
  }
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (knots[i] < knots[i - 1]) throw ShapeError("KnotVector: knots must be nondecreasing");
  }
  for (std::size_t i = 0; i <= k; ++i) {
    if (knots[i] != knots[0] || knots[knots.size() - 1 - i] != knots.back()) {
      throw ShapeError("KnotVector: grid must be clamped (first and last " +
                       std::to_string(k + 1) + " knots equal)");
    }
  }
  if (!(domain_min() < domain_max())) {
    throw ShapeError("KnotVector: empty domain");
  }
}

KnotVector KnotVector::uniform_clamped(int num_basis, int degree, double lo, double hi) {
  if (num_basis < degree + 1) {
    throw ShapeError("KnotVector: num_basis=" + std::to_string(num_basis) +
                     " must be at least degree+1=" + std::to_string(degree + 1));
  }
  if (!(lo < hi)) throw ShapeError("KnotVector: domain must satisfy lo < hi");
  std::vector<double> knots;
  knots.reserve(static_cast<std::size_t>(num_basis) + degree + 1);
  const int interior = num_basis - degree - 1;
  for (int i = 0; i <= degree; ++i) knots.push_back(lo);
  for (int i = 1; i <= interior; ++i) {
    knots.push_back(lo + (hi - lo) * static_cast<double>(i) / (interior + 1));
  }
  for (int i = 0; i <= degree; ++i) knots.push_back(hi);
  return KnotVector(std::move(knots), degree);
}

int KnotVector::find_span(double x) const {
  const int k = degree;
  const int g = num_basis();
  if (x >= knots[g]) {
    int i = g - 1;
    while (i > k && knots[i] == knots[i + 1]) --i;
    return i;
  }
  int lo = k;
  int hi = g;
  int mid = (lo + hi) / 2;
  while (x < knots[mid] || x >= knots[mid + 1]) {
    if (x < knots[mid]) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
    mid = (lo + hi) / 2;
  }
  return mid;
}

Vector SplineBasis::eval(double x) const {
  check_in_domain(knot_vector, x, "basis_eval");
  const int k = knot_vector.degree;
  const int span = knot_vector.find_span(x);
  std::vector<double> N(k + 1);
  basis_triangle(knot_vector.knots, k, span, x, N.data());
  Vector out(num_basis(), 0.0);
  for (int j = 0; j <= k; ++j) out[span - k + j] = N[j];
  return out;
}

Vector SplineBasis::eval_derivative(double x) const {
  const int k = knot_vector.degree;
  if (k < 1) throw ShapeError("basis_derivative: unsupported for degree 0");
  check_in_domain(knot_vector, x, "basis_derivative");
  const int span = knot_vector.find_span(x);
  const auto& t = knot_vector.knots;

  // degree k-1 values on the same knot vector; lower[j] is basis index span-(k-1)+j
  std::vector<double> lower(k);
  basis_triangle(t, k - 1, span, x, lower.data());
  auto low = [&](int i) -> double {
    const int j = i - (span - (k - 1));
    return (j >= 0 && j < k) ? lower[j] : 0.0;
  };

  Vector out(num_basis(), 0.0);
  for (int i = std::max(0, span - k); i <= span; ++i) {
    double v = 0.0;
    const double d1 = t[i + k] - t[i];
    if (d1 > 0.0) v += k / d1 * low(i);
    const double d2 = t[i + k + 1] - t[i + 1];
    if (d2 > 0.0) v -= k / d2 * low(i + 1);
    out[i] = v;
  }
  return out;
}

PsiTransform::PsiTransform(SplineBasis basis_, int channels_, int features_)
    : basis(std::move(basis_)), channels(channels_), features(features_) {
  if (channels < 1 || features < 1) {
    throw ShapeError("PsiTransform: channels and features must be positive");
  }
  coeffs.assign(static_cast<std::size_t>(basis.num_basis()) * channels * features, 0.0);
}

Vector PsiTransform::apply(const Vector& x) const {
  if (static_cast<int>(x.size()) != features) {
    throw ShapeError("psi_apply: expected " + std::to_string(features) + " features, got " +
                     std::to_string(x.size()));
  }
  Vector out(channels, 0.0);
  for (int p = 0; p < features; ++p) {
    const Vector b = basis.eval(x[p]);
    for (int q = 0; q < channels; ++q) {
      double acc = 0.0;
      for (int i = 0; i < basis.num_basis(); ++i) acc += coeffs[coeff_index(i, q, p)] * b[i];
      out[q] += acc;
    }
  }
  return out;
}

PsiTransform::Backward PsiTransform::backward(const Vector& x, const Vector& upstream) const {
  Backward result;
  result.grad_coeffs.assign(coeffs.size(), 0.0);
  result.grad_x.assign(features, 0.0);
  backward_into(x, upstream, result.grad_coeffs.data(), &result.grad_x);
  return result;
}

void PsiTransform::backward_into(const Vector& x, const Vector& upstream, double* grad_coeffs,
                                 Vector* grad_x) const {
  if (static_cast<int>(x.size()) != features || static_cast<int>(upstream.size()) != channels) {
    throw ShapeError("psi_backward: expected x of length " + std::to_string(features) +
                     " and upstream of length " + std::to_string(channels) + ", got " +
                     std::to_string(x.size()) + " and " + std::to_string(upstream.size()));
  }
  for (int p = 0; p < features; ++p) {
    const Vector b = basis.eval(x[p]);
    for (int q = 0; q < channels; ++q) {
      const double u = upstream[q];
      if (u == 0.0) continue;
      for (int i = 0; i < basis.num_basis(); ++i) {
        grad_coeffs[coeff_index(i, q, p)] += u * b[i];
      }
    }
    if (grad_x != nullptr) {
      const Vector db = basis.eval_derivative(x[p]);
      double acc = 0.0;
      for (int q = 0; q < channels; ++q) {
        double inner = 0.0;
        for (int i = 0; i < basis.num_basis(); ++i) {
          inner += coeffs[coeff_index(i, q, p)] * db[i];
        }
        acc += upstream[q] * inner;
      }
      (*grad_x)[p] += acc;
    }
  }
}

}  // namespace sohklstm
