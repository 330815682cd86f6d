#pragma once

#include <cstddef>
#include <vector>

#include "sohklstm/errors.hpp"

namespace sohklstm {

using Vector = std::vector<double>;

/// Dense row-major matrix of 64-bit floats.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vector data;  // rows * cols, row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  static Matrix identity(std::size_t n);
};

/// result[i] = sum_j m(i,j) * v[j]
Vector matvec(const Matrix& m, const Vector& v);

/// result[j] = sum_i m(i,j) * v[i]
Vector matvec_transposed(const Matrix& m, const Vector& v);

/// a's elements followed by b's.
Vector concat(const Vector& a, const Vector& b);

Vector add(const Vector& a, const Vector& b);
Vector sub(const Vector& a, const Vector& b);
Vector mul(const Vector& a, const Vector& b);  // Hadamard
Vector scale(const Vector& a, double s);

double dot(const Vector& a, const Vector& b);

/// y += alpha * x
void axpy(double alpha, const Vector& x, Vector& y);

/// m += u * v^T
void add_outer(Matrix& m, const Vector& u, const Vector& v);

}  // namespace sohklstm
