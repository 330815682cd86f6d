#include "sohklstm/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "sohklstm/errors.hpp"

namespace sohklstm {
namespace {

void check_pair(const Vector& pred, const Vector& target, const char* op) {
  if (pred.size() != target.size()) {
    throw ShapeError(std::string(op) + ": " + std::to_string(pred.size()) + " predictions vs " +
                     std::to_string(target.size()) + " targets");
  }
  if (pred.empty()) throw ShapeError(std::string(op) + ": empty input");
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

}  // namespace

double rmse(const Vector& pred, const Vector& target) {
  check_pair(pred, target, "rmse");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(pred.size()));
}

double mape(const Vector& pred, const Vector& target) {
  check_pair(pred, target, "mape");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (target[i] == 0.0) {
      throw DomainError("mape: target[" + std::to_string(i) + "] is zero");
    }
    acc += std::abs(pred[i] - target[i]) / std::abs(target[i]);
  }
  return 100.0 * acc / static_cast<double>(pred.size());
}

double error_reduction(double new_rmse, double base_rmse) {
  if (!(base_rmse > 0.0)) {
    throw DomainError("error_reduction: baseline rmse must be positive, got " + fmt(base_rmse));
  }
  return 100.0 * (1.0 - new_rmse / base_rmse);
}

double soh_from_capacity(double c_t, double c_nominal) {
  if (!(c_nominal > 0.0)) {
    throw DomainError("soh_from_capacity: nominal capacity must be positive, got " +
                      fmt(c_nominal));
  }
  return c_t / c_nominal;
}

double soh_from_throughput(double q_out, double q_in) {
  if (!(q_in > 0.0)) {
    throw DomainError("soh_from_throughput: charge throughput must be positive, got " + fmt(q_in));
  }
  return q_out / q_in;
}

std::string EvalReport::to_text() const {
  std::string out;
  out += "rmse=" + fmt(rmse) + "\n";
  out += "mape=" + fmt(mape) + "\n";
  if (has_baseline) out += "error_reduction=" + fmt(error_reduction) + "\n";
  out += "execution_time=" + fmt(execution_time) + "\n";
  out += "n_samples=" + std::to_string(n_samples) + "\n";
  return out;
}

std::string EvalReport::csv_header() {
  return "rmse,mape,error_reduction,execution_time,n_samples";
}

std::string EvalReport::to_csv_row() const {
  std::string out = fmt(rmse);
  out += ',';
  out += fmt(mape);
  out += ',';
  out += has_baseline ? fmt(error_reduction) : "";
  out += ',';
  out += fmt(execution_time);
  out += ',';
  out += std::to_string(n_samples);
  return out;
}

}  // namespace sohklstm
