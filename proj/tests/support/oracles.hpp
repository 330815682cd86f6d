#pragma once

// Independent reference implementations used to pin expected values.
// Nothing here calls into the library's spline or backprop internals; the
// basis oracle is the naive recursion, the gradient oracle is forward-mode
// differentiation over an explicitly unrolled graph.

#include <cmath>
#include <cstddef>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace testsupport {

// ---------------------------------------------------------------------------
// Naive Cox-de Boor recursion. The final nonempty span is right-closed so the
// domain maximum is evaluable, matching the library convention.

inline bool naive_span_hit(const std::vector<double>& t, std::size_t i, double x, double dmax) {
  if (t[i] <= x && x < t[i + 1]) return true;
  return x == dmax && t[i] < t[i + 1] && t[i + 1] == dmax;
}

inline double naive_basis(const std::vector<double>& t, std::size_t i, int k, double x,
                          double dmax) {
  if (k == 0) return naive_span_hit(t, i, x, dmax) ? 1.0 : 0.0;
  double acc = 0.0;
  double d1 = t[i + k] - t[i];
  if (d1 > 0.0) acc += (x - t[i]) / d1 * naive_basis(t, i, k - 1, x, dmax);
  double d2 = t[i + k + 1] - t[i + 1];
  if (d2 > 0.0) acc += (t[i + k + 1] - x) / d2 * naive_basis(t, i + 1, k - 1, x, dmax);
  return acc;
}

inline double naive_basis_derivative(const std::vector<double>& t, std::size_t i, int k, double x,
                                     double dmax) {
  double acc = 0.0;
  double d1 = t[i + k] - t[i];
  if (d1 > 0.0) acc += k / d1 * naive_basis(t, i, k - 1, x, dmax);
  double d2 = t[i + k + 1] - t[i + 1];
  if (d2 > 0.0) acc -= k / d2 * naive_basis(t, i + 1, k - 1, x, dmax);
  return acc;
}

// ---------------------------------------------------------------------------
// Finite differences.

template <typename F>
double central_diff(F f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double rel_err(double a, double b, double floor_ = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor_});
}

// ---------------------------------------------------------------------------
// Forward-mode dual numbers.

struct Dual {
  double v = 0.0;
  double d = 0.0;

  Dual() = default;
  Dual(double value) : v(value) {}
  Dual(double value, double tangent) : v(value), d(tangent) {}
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator*(double a, Dual b) { return {a * b.v, a * b.d}; }
inline Dual operator/(Dual a, double b) { return {a.v / b, a.d / b}; }
inline Dual& operator+=(Dual& a, Dual b) { a = a + b; return a; }

inline Dual dual_tanh(Dual x) {
  double t = std::tanh(x.v);
  return {t, x.d * (1.0 - t * t)};
}

inline double scalar_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline Dual dual_sigmoid(Dual x) {
  double s = scalar_sigmoid(x.v);
  return {s, x.d * s * (1.0 - s)};
}

inline Dual dual_silu(Dual x) {
  double s = scalar_sigmoid(x.v);
  return {x.v * s, x.d * s * (1.0 + x.v * (1.0 - s))};
}

inline Dual naive_basis_dual(const std::vector<double>& t, std::size_t i, int k, Dual x,
                             double dmax) {
  if (k == 0) return naive_span_hit(t, i, x.v, dmax) ? Dual{1.0} : Dual{0.0};
  Dual acc{0.0};
  double d1 = t[i + k] - t[i];
  if (d1 > 0.0) acc += (x - Dual{t[i]}) / d1 * naive_basis_dual(t, i, k - 1, x, dmax);
  double d2 = t[i + k + 1] - t[i + 1];
  if (d2 > 0.0) acc += (Dual{t[i + k + 1]} - x) / d2 * naive_basis_dual(t, i + 1, k - 1, x, dmax);
  return acc;
}

// ---------------------------------------------------------------------------
// Unrolled-graph gradient oracle. One scalar among the parameters, inputs, or
// initial state is seeded with tangent 1; the returned tangent of
// L = sum_t <upstream[t], h_t> is the exact derivative along that scalar.

enum class CandidateKind { Tanh, Silu };

struct UnrolledSpec {
  int hidden = 0;
  int input = 0;
  CandidateKind candidate = CandidateKind::Tanh;

  // spline branch; empty knot vectors mean a plain cell
  std::vector<double> inner_knots;
  int inner_degree = 0;
  std::vector<double> outer_knots;
  int outer_degree = 0;
  int channels = 0;

  // flattened tensors, library layouts
  std::map<std::string, std::vector<double>> tensors;  // w_*, b_*, psi_coeffs, outer_weights
  std::vector<std::vector<double>> inputs;
  std::vector<double> h0, c0;
  std::vector<std::vector<double>> upstream;  // empty entry means zero
};

// Seed names: a tensor name from `tensors`, or "input:<t>", "h0", "c0".
inline double unrolled_gradient(const UnrolledSpec& spec, const std::string& seed_name,
                                std::size_t seed_pos) {
  const int H = spec.hidden;
  const int n = spec.input;
  const bool spline = !spec.inner_knots.empty();

  std::map<std::string, std::vector<Dual>> par;
  for (const auto& [name, values] : spec.tensors) {
    std::vector<Dual> dv(values.begin(), values.end());
    if (name == seed_name) dv.at(seed_pos).d = 1.0;
    par.emplace(name, std::move(dv));
  }
  std::vector<std::vector<Dual>> xs;
  for (std::size_t t = 0; t < spec.inputs.size(); ++t) {
    std::vector<Dual> x(spec.inputs[t].begin(), spec.inputs[t].end());
    if (seed_name == "input:" + std::to_string(t)) x.at(seed_pos).d = 1.0;
    xs.push_back(std::move(x));
  }
  std::vector<Dual> h(spec.h0.begin(), spec.h0.end());
  std::vector<Dual> c(spec.c0.begin(), spec.c0.end());
  if (seed_name == "h0") h.at(seed_pos).d = 1.0;
  if (seed_name == "c0") c.at(seed_pos).d = 1.0;

  auto matvec_cat = [&](const std::vector<Dual>& w, const std::vector<Dual>& b,
                        const std::vector<Dual>& hh, const std::vector<Dual>& xx) {
    std::vector<Dual> out(H);
    for (int i = 0; i < H; ++i) {
      Dual acc = b[i];
      for (int j = 0; j < H; ++j) acc += w[i * (H + n) + j] * hh[j];
      for (int j = 0; j < n; ++j) acc += w[i * (H + n) + H + j] * xx[j];
      out[i] = acc;
    }
    return out;
  };

  double inner_lo = 0.0, inner_hi = 0.0, outer_lo = 0.0, outer_hi = 0.0;
  int inner_g = 0, outer_g = 0;
  if (spline) {
    inner_lo = spec.inner_knots[spec.inner_degree];
    inner_hi = spec.inner_knots[spec.inner_knots.size() - spec.inner_degree - 1];
    outer_lo = spec.outer_knots[spec.outer_degree];
    outer_hi = spec.outer_knots[spec.outer_knots.size() - spec.outer_degree - 1];
    inner_g = static_cast<int>(spec.inner_knots.size()) - spec.inner_degree - 1;
    outer_g = static_cast<int>(spec.outer_knots.size()) - spec.outer_degree - 1;
  }

  Dual loss{0.0};
  for (std::size_t t = 0; t < xs.size(); ++t) {
    const std::vector<Dual>& x = xs[t];
    std::vector<Dual> zi = matvec_cat(par.at("w_input"), par.at("b_input"), h, x);
    std::vector<Dual> zf = matvec_cat(par.at("w_forget"), par.at("b_forget"), h, x);
    std::vector<Dual> zo = matvec_cat(par.at("w_output"), par.at("b_output"), h, x);
    std::vector<Dual> zc = matvec_cat(par.at("w_candidate"), par.at("b_candidate"), h, x);

    std::vector<Dual> cand(H);
    for (int i = 0; i < H; ++i) {
      cand[i] = spec.candidate == CandidateKind::Tanh ? dual_tanh(zc[i]) : dual_silu(zc[i]);
    }

    if (spline) {
      const int Q = spec.channels;
      const std::vector<Dual>& coeffs = par.at("psi_coeffs");
      const std::vector<Dual>& outer_w = par.at("outer_weights");
      std::vector<Dual> s(Q, Dual{0.0});
      for (int p = 0; p < n; ++p) {
        Dual xc = x[p];
        if (xc.v < inner_lo) xc = Dual{inner_lo};
        if (xc.v > inner_hi) xc = Dual{inner_hi};
        for (int i = 0; i < inner_g; ++i) {
          Dual basis = naive_basis_dual(spec.inner_knots, i, spec.inner_degree, xc, inner_hi);
          for (int q = 0; q < Q; ++q) {
            s[q] += coeffs[(static_cast<std::size_t>(i) * Q + q) * n + p] * basis;
          }
        }
      }
      for (int q = 0; q < Q; ++q) {
        Dual u = Dual{outer_lo} + (outer_hi - outer_lo) * (0.5 * (dual_tanh(s[q]) + Dual{1.0}));
        for (int j = 0; j < outer_g; ++j) {
          Dual basis = naive_basis_dual(spec.outer_knots, j, spec.outer_degree, u, outer_hi);
          for (int hh = 0; hh < H; ++hh) {
            cand[hh] += outer_w[(static_cast<std::size_t>(hh) * Q + q) * outer_g + j] * basis;
          }
        }
      }
    }

    std::vector<Dual> c_next(H), h_next(H);
    for (int i = 0; i < H; ++i) {
      Dual gi = dual_sigmoid(zi[i]);
      Dual gf = dual_sigmoid(zf[i]);
      Dual go = dual_sigmoid(zo[i]);
      c_next[i] = gf * c[i] + gi * cand[i];
      h_next[i] = go * dual_tanh(c_next[i]);
    }
    c = std::move(c_next);
    h = std::move(h_next);

    if (t < spec.upstream.size() && !spec.upstream[t].empty()) {
      for (int i = 0; i < H; ++i) loss += Dual{spec.upstream[t][i]} * h[i];
    }
  }
  return loss.d;
}

// ---------------------------------------------------------------------------
// Dense least squares via normal equations, for fitting spline coefficients.

inline std::vector<double> solve_least_squares(const std::vector<std::vector<double>>& rows,
                                               const std::vector<double>& rhs) {
  const std::size_t m = rows.size();
  const std::size_t n = rows.at(0).size();
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) a[i][j] += rows[r][i] * rows[r][j];
      a[i][n] += rows[r][i] * rhs[r];
    }
  }
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    if (std::abs(a[col][col]) < 1e-14) throw std::runtime_error("singular normal equations");
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      double f = a[r][col] / a[col][col];
      for (std::size_t j = col; j <= n; ++j) a[r][j] -= f * a[col][j];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = a[i][n] / a[i][i];
  return x;
}

// Uniform draw helper shared by the randomized suites.
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace testsupport
