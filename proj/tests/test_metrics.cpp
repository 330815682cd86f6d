#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "sohklstm/metrics.hpp"

#include "support/oracles.hpp"

using namespace sohklstm;

TEST_SUITE("metrics") {

TEST_CASE("rmse examples") {
  CHECK(rmse(Vector{0.7, 0.8}, Vector{0.7, 0.8}) == 0.0);
  CHECK(rmse(Vector{0.0, 0.0}, Vector{3.0, 4.0}) ==
        doctest::Approx(3.5355339059327378).epsilon(1e-12));
  CHECK_THROWS_AS(rmse(Vector{1.0}, Vector{1.0, 2.0}), ShapeError);
  CHECK_THROWS_AS(rmse(Vector{}, Vector{}), ShapeError);
}

TEST_CASE("rmse scale equivariance and permutation invariance") {
  std::mt19937_64 rng(61);
  Vector p(10), t(10);
  for (int i = 0; i < 10; ++i) {
    p[i] = testsupport::uniform(rng, -2.0, 2.0);
    t[i] = testsupport::uniform(rng, -2.0, 2.0);
  }
  double base = rmse(p, t);
  for (double a : {-3.0, 0.5, 7.0}) {
    CHECK(rmse(scale(p, a), scale(t, a)) == doctest::Approx(std::abs(a) * base).epsilon(1e-12));
  }
  Vector p2 = p, t2 = t;
  std::reverse(p2.begin(), p2.end());
  std::reverse(t2.begin(), t2.end());
  CHECK(rmse(p2, t2) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("mape examples") {
  CHECK(mape(Vector{0.9, 0.8}, Vector{0.9, 0.8}) == 0.0);
  CHECK(mape(Vector{1.1}, Vector{1.0}) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK_THROWS_AS(mape(Vector{1.0}, Vector{0.0}), DomainError);
  CHECK_THROWS_AS(mape(Vector{1.0, 2.0}, Vector{1.0}), ShapeError);
}

TEST_CASE("mape scale invariance") {
  std::mt19937_64 rng(62);
  Vector p(8), t(8);
  for (int i = 0; i < 8; ++i) {
    p[i] = testsupport::uniform(rng, 0.5, 2.0);
    t[i] = testsupport::uniform(rng, 0.5, 2.0);
  }
  double base = mape(p, t);
  for (double a : {-4.0, 0.25, 9.0}) {
    CHECK(mape(scale(p, a), scale(t, a)) == doctest::Approx(base).epsilon(1e-10));
  }
}

TEST_CASE("error reduction reproduces the reported reductions") {
  CHECK(std::abs(error_reduction(0.001682, 0.058334) - 97.12) <= 0.01);
  CHECK(std::abs(error_reduction(0.002112, 0.041061) - 94.85) <= 0.01);
  CHECK(error_reduction(0.3, 0.3) == 0.0);
  CHECK(error_reduction(0.0, 0.7) == 100.0);
  CHECK_THROWS_AS(error_reduction(0.1, 0.0), DomainError);
  CHECK_THROWS_AS(error_reduction(0.1, -1.0), DomainError);
}

TEST_CASE("soh ratios") {
  CHECK(soh_from_capacity(2.0, 2.0) == 1.0);
  CHECK(soh_from_capacity(1.4, 2.0) == 0.70);
  CHECK(soh_from_capacity(1.6, 2.0) == 0.80);
  CHECK(soh_from_throughput(1.0, 4.0) == 0.25);
  CHECK_THROWS_AS(soh_from_capacity(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(soh_from_throughput(1.0, -2.0), DomainError);
}

TEST_CASE("eval report serialization") {
  EvalReport r;
  r.rmse = 0.003;
  r.mape = 0.21;
  r.error_reduction = 97.12;
  r.has_baseline = true;
  r.execution_time = 0.125;
  r.n_samples = 17;
  std::string text = r.to_text();
  CHECK(text.find("rmse=0.003") != std::string::npos);
  CHECK(text.find("mape=0.21") != std::string::npos);
  CHECK(text.find("error_reduction=97.12") != std::string::npos);
  CHECK(text.find("n_samples=17") != std::string::npos);
  CHECK(EvalReport::csv_header() == "rmse,mape,error_reduction,execution_time,n_samples");
  std::string row = r.to_csv_row();
  CHECK(row.find("0.003") == 0);
  CHECK(std::count(row.begin(), row.end(), ',') == 4);

  EvalReport plain;
  plain.rmse = 0.1;
  plain.mape = 1.0;
  plain.n_samples = 3;
  CHECK(plain.to_text().find("error_reduction") == std::string::npos);
}

}
