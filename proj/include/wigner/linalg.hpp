#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace wigner {

using Complex = std::complex<double>;

/// Dense row-major matrix.
template <class T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{}) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }

  T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  [[nodiscard]] std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  T* data() noexcept { return data_.data(); }
  [[nodiscard]] const T* data() const noexcept { return data_.data(); }
  [[nodiscard]] const std::vector<T>& storage() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using RealMatrix = Matrix<double>;
using ComplexMatrix = Matrix<Complex>;

inline double conj_of(double x) noexcept { return x; }
inline Complex conj_of(const Complex& z) noexcept { return std::conj(z); }
inline double abs2(double x) noexcept { return x * x; }
inline double abs2(const Complex& z) noexcept { return z.real() * z.real() + z.imag() * z.imag(); }

/// Real symmetric tridiagonal matrix: diagonal d, sub-diagonal e (e.size() == d.size()-1).
struct Tridiagonal {
  std::vector<double> diagonal;
  std::vector<double> offdiagonal;
};

/// Result of a self-adjoint eigendecomposition. Eigenvalues ascending; when
/// vectors were requested, row a of `vectors` is the unit eigenvector for
/// eigenvalue a, normalized so its largest-magnitude component is real positive.
template <class T>
struct EigenSystem {
  std::vector<double> values;
  Matrix<T> vectors;
  bool has_vectors = false;
};

/// Householder reduction A = Q T Q^H of a self-adjoint matrix (only the upper
/// triangle is read). When `q` is non-null it receives Q transposed: row j of
/// *q is column j of Q.
template <class T>
Tridiagonal householder_tridiagonalize(const Matrix<T>& a, Matrix<T>* q_transposed);

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix. Eigenvalues
/// are returned unsorted in `t.diagonal`. If `rows` is non-null, the plane
/// rotations are applied to pairs of its rows (the transposed basis).
/// Throws NumericalError after too many sweeps.
template <class T>
void tridiagonal_ql(Tridiagonal& t, Matrix<T>* rows);

/// Full pipeline: tridiagonalize, QL, sort, fix eigenvector phases.
template <class T>
EigenSystem<T> self_adjoint_eigen(const Matrix<T>& a, bool want_vectors);

/// Eigenvalues (ascending) of a symmetric tridiagonal matrix; with vectors if requested.
EigenSystem<double> tridiagonal_eigen(Tridiagonal t, bool want_vectors);

/// Solves A x = b by LU with partial pivoting. Throws NumericalError if singular.
template <class T>
std::vector<T> lu_solve(Matrix<T> a, std::vector<T> b);

/// Determinant by LU with partial pivoting.
double determinant(RealMatrix a);

/// 64-bit FNV-1a fingerprint of the matrix bytes, used in error reports.
template <class T>
std::uint64_t fingerprint(const Matrix<T>& a) noexcept;

}  // namespace wigner
