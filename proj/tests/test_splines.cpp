#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "sohklstm/splines.hpp"

#include "support/oracles.hpp"

using namespace sohklstm;

namespace {

// Random clamped grid with `interior` strictly increasing interior knots.
KnotVector random_clamped(std::mt19937_64& rng, int degree, int interior) {
  std::vector<double> inner(interior);
  for (double& x : inner) x = testsupport::uniform(rng, 0.05, 0.95);
  std::sort(inner.begin(), inner.end());
  for (int i = 1; i < interior; ++i) {
    if (inner[i] - inner[i - 1] < 1e-3) inner[i] = inner[i - 1] + 1e-3;
  }
  std::vector<double> knots;
  for (int i = 0; i <= degree; ++i) knots.push_back(0.0);
  for (double x : inner) knots.push_back(x);
  for (int i = 0; i <= degree; ++i) knots.push_back(1.0);
  return KnotVector(knots, degree);
}

}  // namespace

TEST_SUITE("splines") {

TEST_CASE("degree zero single span") {
  SplineBasis basis(KnotVector({0.0, 1.0}, 0));
  CHECK(basis.num_basis() == 1);
  CHECK(basis.eval(0.5) == Vector{1.0});
  CHECK(basis.eval(0.0) == Vector{1.0});
  CHECK(basis.eval(1.0) == Vector{1.0});
}

TEST_CASE("knot vector validation") {
  CHECK_THROWS_AS(KnotVector({1.0, 0.0}, 0), ShapeError);
  CHECK_THROWS_AS(KnotVector({0.0, 0.5, 1.0, 1.0}, 1), ShapeError);   // unclamped left
  CHECK_THROWS_AS(KnotVector({0.0, 0.0, 0.5, 1.0}, 1), ShapeError);   // unclamped right
  CHECK_THROWS_AS(KnotVector({0.0, 0.0, 1.0}, 1), ShapeError);        // too few knots
  CHECK_THROWS_AS(KnotVector({0.0, 0.0, 0.0, 0.0}, 1), ShapeError);   // empty domain
  KnotVector kv({0.0, 0.0, 0.5, 1.0, 1.0}, 1);
  CHECK(kv.num_basis() == 3);
  CHECK(kv.domain_min() == 0.0);
  CHECK(kv.domain_max() == 1.0);
}

TEST_CASE("uniform clamped grid layout") {
  KnotVector kv = KnotVector::uniform_clamped(8, 3);
  CHECK(kv.num_basis() == 8);
  CHECK(kv.knots.size() == 12);
  for (int i = 0; i <= 3; ++i) {
    CHECK(kv.knots[i] == 0.0);
    CHECK(kv.knots[kv.knots.size() - 1 - i] == 1.0);
  }
  CHECK(kv.knots[4] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(kv.knots[7] == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("partition of unity on clamped grids") {
  for (int degree : {1, 2, 3}) {
    SplineBasis basis = SplineBasis::uniform_clamped(8, degree);
    for (int i = 0; i < 1000; ++i) {
      double x = static_cast<double>(i) / 999.0;
      Vector v = basis.eval(x);
      double sum = 0.0;
      for (double b : v) {
        sum += b;
        CHECK(b >= 0.0);
      }
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("local support is exact") {
  std::mt19937_64 rng(31);
  KnotVector kv = random_clamped(rng, 3, 4);
  SplineBasis basis(kv);
  for (int trial = 0; trial < 200; ++trial) {
    double x = testsupport::uniform(rng, 0.0, 1.0);
    Vector v = basis.eval(x);
    for (int i = 0; i < basis.num_basis(); ++i) {
      double lo = kv.knots[i];
      double hi = kv.knots[i + kv.degree + 1];
      bool inside = lo <= x && x < hi;
      if (x == kv.domain_max() && hi == kv.domain_max()) inside = lo < hi;
      if (!inside) CHECK(v[i] == 0.0);
    }
  }
}

TEST_CASE("cardinal cubic value and stationary point") {
  // Interior basis 3 of this grid lives on consecutive knots 0,1,2,3,4, the
  // cardinal cubic: value 2/3 and slope 0 at its central knot.
  std::vector<double> knots{0, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 7, 7, 7};
  SplineBasis basis{KnotVector(knots, 3)};
  CHECK(basis.eval(2.0)[3] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(std::abs(basis.eval_derivative(2.0)[3]) < 1e-14);
  // Same function straight from the naive recursion on the raw knot run.
  std::vector<double> raw{0, 1, 2, 3, 4};
  CHECK(testsupport::naive_basis(raw, 0, 3, 2.0, 4.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(std::abs(testsupport::naive_basis_derivative(raw, 0, 3, 2.0, 4.0)) < 1e-14);
}

TEST_CASE("agreement with the naive recursion on random grids") {
  std::mt19937_64 rng(32);
  for (int grid = 0; grid < 20; ++grid) {
    int degree = 1 + static_cast<int>(rng() % 3);
    int interior = 1 + static_cast<int>(rng() % 5);
    KnotVector kv = random_clamped(rng, degree, interior);
    SplineBasis basis(kv);
    for (int trial = 0; trial < 25; ++trial) {
      double x = trial == 0 ? kv.domain_min()
               : trial == 1 ? kv.domain_max()
                            : testsupport::uniform(rng, 0.0, 1.0);
      Vector v = basis.eval(x);
      for (int i = 0; i < basis.num_basis(); ++i) {
        double want = testsupport::naive_basis(kv.knots, i, degree, x, kv.domain_max());
        CHECK(std::abs(v[i] - want) < 1e-14);
      }
    }
  }
}

TEST_CASE("derivative matches finite differences and the naive identity") {
  std::mt19937_64 rng(33);
  SplineBasis basis = SplineBasis::uniform_clamped(8, 3);
  for (int trial = 0; trial < 100; ++trial) {
    double x = testsupport::uniform(rng, 0.01, 0.99);
    Vector d = basis.eval_derivative(x);
    double sum = 0.0;
    for (int i = 0; i < basis.num_basis(); ++i) {
      auto f = [&](double z) { return basis.eval(z)[i]; };
      CHECK(std::abs(d[i] - testsupport::central_diff(f, x, 1e-6)) < 1e-6);
      double want = testsupport::naive_basis_derivative(basis.knot_vector.knots, i, 3, x, 1.0);
      CHECK(std::abs(d[i] - want) < 1e-12);
      sum += d[i];
    }
    CHECK(std::abs(sum) < 1e-11);
  }
}

TEST_CASE("degree zero has no derivative") {
  SplineBasis basis(KnotVector({0.0, 1.0}, 0));
  CHECK_THROWS_AS(basis.eval_derivative(0.5), ShapeError);
}

TEST_CASE("evaluation outside the domain is rejected") {
  SplineBasis basis = SplineBasis::uniform_clamped(6, 2);
  CHECK_THROWS_AS(basis.eval(-0.1), ShapeError);
  CHECK_THROWS_AS(basis.eval(1.1), ShapeError);
  CHECK_THROWS_AS(basis.eval_derivative(2.0), ShapeError);
}

TEST_CASE("psi zero coefficients give the zero vector") {
  PsiTransform psi(SplineBasis::uniform_clamped(6, 3), 2, 3);
  Vector s = psi.apply(Vector{0.2, 0.5, 0.9});
  CHECK(s == Vector{0.0, 0.0});
}

TEST_CASE("psi all-one coefficients recover the partition of unity") {
  PsiTransform psi(SplineBasis::uniform_clamped(6, 3), 1, 1);
  for (double& c : psi.coeffs) c = 1.0;
  for (double x : {0.0, 0.31, 0.77, 1.0}) {
    Vector s = psi.apply(Vector{x});
    CHECK(s[0] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("psi least-squares identity fit sums the features") {
  PsiTransform psi(SplineBasis::uniform_clamped(8, 3), 1, 2);
  const int grid_points = 200;
  std::vector<std::vector<double>> rows;
  std::vector<double> rhs;
  for (int i = 0; i < grid_points; ++i) {
    double x = static_cast<double>(i) / (grid_points - 1);
    std::vector<double> basis = psi.basis.eval(x);
    rows.push_back(basis);
    rhs.push_back(x);
  }
  std::vector<double> c = testsupport::solve_least_squares(rows, rhs);
  for (int i = 0; i < 8; ++i) {
    for (int p = 0; p < 2; ++p) psi.coeffs[psi.coeff_index(i, 0, p)] = c[i];
  }
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 50; ++trial) {
    double x1 = testsupport::uniform(rng, 0.0, 1.0);
    double x2 = testsupport::uniform(rng, 0.0, 1.0);
    Vector s = psi.apply(Vector{x1, x2});
    CHECK(std::abs(s[0] - (x1 + x2)) < 1e-3);
  }
}

TEST_CASE("psi backward matches finite differences") {
  std::mt19937_64 rng(35);
  PsiTransform psi(SplineBasis::uniform_clamped(6, 3), 2, 3);
  for (double& c : psi.coeffs) c = testsupport::uniform(rng, -1.0, 1.0);
  Vector x{0.15, 0.52, 0.88};
  Vector upstream{0.7, -1.3};

  PsiTransform::Backward got = psi.backward(x, upstream);
  auto loss = [&](const PsiTransform& p, const Vector& xx) {
    Vector s = p.apply(xx);
    return upstream[0] * s[0] + upstream[1] * s[1];
  };

  const double h = 1e-6;
  for (std::size_t i = 0; i < psi.coeffs.size(); ++i) {
    PsiTransform plus = psi, minus = psi;
    plus.coeffs[i] += h;
    minus.coeffs[i] -= h;
    double fd = (loss(plus, x) - loss(minus, x)) / (2.0 * h);
    CHECK(testsupport::rel_err(got.grad_coeffs[i], fd, 1e-6) < 1e-6);
  }
  for (std::size_t p = 0; p < x.size(); ++p) {
    Vector plus = x, minus = x;
    plus[p] += h;
    minus[p] -= h;
    double fd = (loss(psi, plus) - loss(psi, minus)) / (2.0 * h);
    CHECK(testsupport::rel_err(got.grad_x[p], fd, 1e-6) < 1e-6);
  }
}

TEST_CASE("psi backward with zero upstream is zero") {
  std::mt19937_64 rng(36);
  PsiTransform psi(SplineBasis::uniform_clamped(5, 2), 1, 2);
  for (double& c : psi.coeffs) c = testsupport::uniform(rng, -1.0, 1.0);
  PsiTransform::Backward got = psi.backward(Vector{0.3, 0.6}, Vector{0.0});
  for (double g : got.grad_coeffs) CHECK(g == 0.0);
  for (double g : got.grad_x) CHECK(g == 0.0);
}

TEST_CASE("psi backward_into accumulates") {
  std::mt19937_64 rng(37);
  PsiTransform psi(SplineBasis::uniform_clamped(5, 2), 1, 2);
  for (double& c : psi.coeffs) c = testsupport::uniform(rng, -1.0, 1.0);
  Vector x{0.3, 0.6};
  Vector upstream{1.5};
  PsiTransform::Backward once = psi.backward(x, upstream);
  Vector acc(psi.coeffs.size(), 0.0);
  Vector grad_x(2, 0.0);
  psi.backward_into(x, upstream, acc.data(), &grad_x);
  psi.backward_into(x, upstream, acc.data(), &grad_x);
  for (std::size_t i = 0; i < acc.size(); ++i) {
    CHECK(acc[i] == doctest::Approx(2.0 * once.grad_coeffs[i]).epsilon(1e-14));
  }
  for (std::size_t p = 0; p < grad_x.size(); ++p) {
    CHECK(grad_x[p] == doctest::Approx(2.0 * once.grad_x[p]).epsilon(1e-14));
  }
}

TEST_CASE("psi shape errors") {
  PsiTransform psi(SplineBasis::uniform_clamped(5, 2), 1, 2);
  CHECK_THROWS_AS(psi.apply(Vector{0.5}), ShapeError);
  CHECK_THROWS_AS(psi.backward(Vector{0.5, 0.5}, Vector{1.0, 1.0}), ShapeError);
}

}
