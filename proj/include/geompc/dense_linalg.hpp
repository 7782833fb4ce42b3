#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "geompc/errors.hpp"

namespace geompc {

/// Dense real vector. Used for every stacked quantity: states, costates,
/// decision vectors and residuals.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n, double value = 0.0) : data_(n, value) {}
  Vector(std::initializer_list<double> values) : data_(values) {}
  explicit Vector(std::vector<double> values) : data_(std::move(values)) {}

  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }

  const std::vector<double>& values() const { return data_; }

  Vector& operator+=(const Vector& other);
  Vector& operator-=(const Vector& other);
  Vector& operator*=(double factor);

  bool operator==(const Vector&) const = default;

 private:
  std::vector<double> data_;
};

Vector operator+(Vector a, const Vector& b);
Vector operator-(Vector a, const Vector& b);
Vector operator-(Vector a);
Vector operator*(double factor, Vector a);
Vector operator*(Vector a, double factor);

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double value = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, value) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  Vector column(std::size_t j) const;
  void set_column(std::size_t j, const Vector& v);

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& v);
double norm_inf(const Vector& v);
/// y += alpha * x
void axpy(double alpha, const Vector& x, Vector& y);
void scale(double alpha, Vector& v);

Vector matvec(const Matrix& a, const Vector& v);
/// a^T v
Vector matvec_transposed(const Matrix& a, const Vector& v);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
double max_abs(const Matrix& a);

/// LU factors with partial pivoting: row `pivots[k]` of the original matrix
/// is row k of P*A. L (unit diagonal) is stored below the diagonal of `lu`,
/// U on and above it.
struct LuFactors {
  Matrix lu;
  std::vector<std::size_t> pivots;
  std::size_t dim = 0;

  Matrix lower() const;
  Matrix upper() const;
  /// P*A for a matrix with the same row count.
  Matrix permute_rows(const Matrix& a) const;
};

inline constexpr double kSingularPivotThreshold = 1e-14;

/// Throws SingularMatrix when the largest candidate pivot of a column is
/// below kSingularPivotThreshold in magnitude.
LuFactors lu_factor(const Matrix& a);
Vector lu_solve(const LuFactors& f, const Vector& b);

}  // namespace geompc
