#pragma once

#include <string>

#include "sohklstm/linalg.hpp"

namespace sohklstm {

/// sqrt(mean squared error) over paired samples.
double rmse(const Vector& pred, const Vector& target);

/// Mean absolute percentage error, in percent. Targets must be nonzero.
double mape(const Vector& pred, const Vector& target);

/// 100 * (1 - new_rmse / base_rmse). Positive when the new model is better.
double error_reduction(double new_rmse, double base_rmse);

/// Capacity-ratio SOH as a fraction of nominal.
double soh_from_capacity(double c_t, double c_nominal);

/// Discharge-throughput ratio as a fraction.
double soh_from_throughput(double q_out, double q_in);

struct EvalReport {
  double rmse = 0.0;
  double mape = 0.0;            // percent
  double error_reduction = 0.0; // percent vs a baseline; meaningful iff has_baseline
  bool has_baseline = false;
  double execution_time = 0.0;  // seconds
  long n_samples = 0;

  /// Flat key-value block, one `key=value` per line.
  std::string to_text() const;

  static std::string csv_header();
  std::string to_csv_row() const;
};

}  // namespace sohklstm
