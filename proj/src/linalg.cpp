#include "wigner/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "wigner/errors.hpp"

namespace wigner {

namespace {

// Plain-arithmetic products; std::complex operator* carries a NaN-recovery
// branch that blocks vectorization of the inner loops.
inline double mul(double a, double b) noexcept { return a * b; }
inline Complex mul(const Complex& a, const Complex& b) noexcept {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}
inline double mul_conj(double a, double b) noexcept { return a * b; }
// a * conj(b)
inline Complex mul_conj(const Complex& a, const Complex& b) noexcept {
  return {a.real() * b.real() + a.imag() * b.imag(), a.imag() * b.real() - a.real() * b.imag()};
}
inline double real_of(double x) noexcept { return x; }
inline double real_of(const Complex& z) noexcept { return z.real(); }
inline double imag_of(double) noexcept { return 0.0; }
inline double imag_of(const Complex& z) noexcept { return z.imag(); }

constexpr int kMaxQlIterations = 60;

template <class T>
constexpr std::size_t doubles_per_scalar() {
  return sizeof(T) / sizeof(double);
}

}  // namespace

template <class T>
Tridiagonal householder_tridiagonalize(const Matrix<T>& a, Matrix<T>* q_transposed) {
  const std::size_t n = a.rows();
  Tridiagonal t;
  t.diagonal.assign(n, 0.0);
  t.offdiagonal.assign(n > 0 ? n - 1 : 0, 0.0);
  if (n == 0) {
    if (q_transposed) *q_transposed = Matrix<T>();
    return t;
  }

  Matrix<T> w = a;
  std::vector<T> tau(n, T{});
  std::vector<T> p(n), wv(n);

  for (std::size_t k = 0; k + 1 < n; ++k) {
    T* rowk = w.row(k).data();
    t.diagonal[k] = real_of(rowk[k]);

    // x_i = conj(rowk[k+1+i]) is column k below the diagonal.
    const T alpha = conj_of(rowk[k + 1]);
    double xnorm2 = 0.0;
    for (std::size_t c = k + 2; c < n; ++c) xnorm2 += abs2(rowk[c]);

    if (xnorm2 == 0.0 && imag_of(alpha) == 0.0) {
      tau[k] = T{};
      t.offdiagonal[k] = real_of(alpha);
      continue;
    }

    const double beta = -std::copysign(std::sqrt(abs2(alpha) + xnorm2), real_of(alpha));
    const T tk = (T(beta) - alpha) / T(beta);
    const T scale = T(1) / (alpha - T(beta));
    tau[k] = tk;
    t.offdiagonal[k] = beta;

    // Reflector v (v_0 = 1) overwrites row k to the right of the diagonal.
    rowk[k + 1] = T(1);
    for (std::size_t c = k + 2; c < n; ++c) rowk[c] = mul(conj_of(rowk[c]), scale);
    const T* v = rowk;

    // p = A v on the trailing block, reading only its upper triangle.
    std::fill(p.begin() + static_cast<std::ptrdiff_t>(k + 1), p.end(), T{});
    for (std::size_t r = k + 1; r < n; ++r) {
      const T* ar = w.row(r).data();
      const T vr = v[r];
      T acc = mul(ar[r], vr);
      for (std::size_t c = r + 1; c < n; ++c) {
        acc += mul(ar[c], v[c]);
        p[c] += mul(conj_of(ar[c]), vr);
      }
      p[r] += acc;
    }

    double s = 0.0;
    for (std::size_t r = k + 1; r < n; ++r) s += real_of(mul_conj(p[r], v[r]));
    const T coef = T(abs2(tk) * s / 2.0);
    for (std::size_t r = k + 1; r < n; ++r) wv[r] = mul(tk, p[r]) - mul(coef, v[r]);

    // A <- A - w v^H - v w^H on the upper triangle.
    for (std::size_t r = k + 1; r < n; ++r) {
      T* ar = w.row(r).data();
      const T wr = wv[r];
      const T vr = v[r];
      for (std::size_t c = r; c < n; ++c) ar[c] -= mul_conj(wr, v[c]) + mul_conj(vr, wv[c]);
    }
  }
  t.diagonal[n - 1] = real_of(w(n - 1, n - 1));

  if (q_transposed) {
    Matrix<T> q = Matrix<T>::identity(n);
    std::vector<T> u(n);
    for (std::size_t kk = n - 1; kk-- > 0;) {
      if (tau[kk] == T{}) continue;
      const T* v = w.row(kk).data();
      std::fill(u.begin(), u.end(), T{});
      for (std::size_t r = kk + 1; r < n; ++r) {
        const T cv = conj_of(v[r]);
        const T* qr = q.row(r).data();
        for (std::size_t c = kk + 1; c < n; ++c) u[c] += mul(cv, qr[c]);
      }
      for (std::size_t r = kk + 1; r < n; ++r) {
        const T f = mul(tau[kk], v[r]);
        T* qr = q.row(r).data();
        for (std::size_t c = kk + 1; c < n; ++c) qr[c] -= mul(f, u[c]);
      }
    }
    Matrix<T> qt(n, n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) qt(c, r) = q(r, c);
    *q_transposed = std::move(qt);
  }
  return t;
}

template <class T>
void tridiagonal_ql(Tridiagonal& t, Matrix<T>* rows) {
  auto& d = t.diagonal;
  const std::size_t n = d.size();
  if (n <= 1) return;
  std::vector<double> e(n, 0.0);
  std::copy(t.offdiagonal.begin(), t.offdiagonal.end(), e.begin());

  const std::size_t width = rows ? rows->cols() * doubles_per_scalar<T>() : 0;
  auto row_ptr = [&](std::size_t i) { return reinterpret_cast<double*>(rows->row(i).data()); };

  constexpr double eps = 0x1.0p-52;
  double shift_total = 0.0;
  double tst1 = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n - 1 && std::abs(e[m]) > eps * tst1) ++m;

    if (m > l) {
      int iter = 0;
      do {
        if (++iter > kMaxQlIterations) {
          std::ostringstream msg;
          msg << "tridiagonal QL failed to converge at index " << l << " of " << n;
          throw NumericalError(msg.str());
        }
        // Wilkinson-type shift from the leading 2x2 block.
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        shift_total += h;

        p = d[m];
        double c = 1.0, c2 = 1.0, c3 = 1.0;
        const double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (std::size_t i = m; i-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[i];
          h = c * p;
          r = std::hypot(p, e[i]);
          e[i + 1] = s * r;
          s = e[i] / r;
          c = p / r;
          p = c * d[i] - s * g;
          d[i + 1] = h + s * (c * g + s * d[i]);
          if (rows) {
            double* zi = row_ptr(i);
            double* zi1 = row_ptr(i + 1);
            for (std::size_t k = 0; k < width; ++k) {
              const double hk = zi1[k];
              zi1[k] = s * zi[k] + c * hk;
              zi[k] = c * zi[k] - s * hk;
            }
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += shift_total;
    e[l] = 0.0;
  }
}

namespace {

template <class T>
void normalize_phase(std::span<T> v) {
  std::size_t best = 0;
  double best_mag = -1.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double m = abs2(v[i]);
    if (m > best_mag) {
      best_mag = m;
      best = i;
    }
  }
  if (best_mag <= 0.0) return;
  if constexpr (std::is_same_v<T, double>) {
    if (v[best] < 0.0)
      for (auto& x : v) x = -x;
  } else {
    const T phase = std::conj(v[best]) / std::sqrt(best_mag);
    for (auto& x : v) x = mul(x, phase);
    v[best] = T(std::abs(v[best]), 0.0);
  }
}

template <class T>
EigenSystem<T> sort_and_finish(Tridiagonal& t, Matrix<T>* basis) {
  const std::size_t n = t.diagonal.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return t.diagonal[i] < t.diagonal[j]; });
  EigenSystem<T> out;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = t.diagonal[order[i]];
  if (basis) {
    out.vectors = Matrix<T>(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      auto src = basis->row(order[i]);
      std::copy(src.begin(), src.end(), out.vectors.row(i).begin());
      normalize_phase(out.vectors.row(i));
    }
    out.has_vectors = true;
  }
  return out;
}

}  // namespace

template <class T>
EigenSystem<T> self_adjoint_eigen(const Matrix<T>& a, bool want_vectors) {
  Matrix<T> basis;
  Tridiagonal t = householder_tridiagonalize(a, want_vectors ? &basis : nullptr);
  try {
    tridiagonal_ql(t, want_vectors ? &basis : nullptr);
  } catch (const NumericalError& err) {
    std::ostringstream msg;
    msg << err.what() << " (matrix " << a.rows() << "x" << a.cols() << ", fingerprint " << std::hex
        << fingerprint(a) << ")";
    throw NumericalError(msg.str());
  }
  return sort_and_finish(t, want_vectors ? &basis : nullptr);
}

EigenSystem<double> tridiagonal_eigen(Tridiagonal t, bool want_vectors) {
  RealMatrix basis;
  if (want_vectors) basis = RealMatrix::identity(t.diagonal.size());
  tridiagonal_ql(t, want_vectors ? &basis : nullptr);
  return sort_and_finish(t, want_vectors ? &basis : nullptr);
}

template <class T>
std::vector<T> lu_solve(Matrix<T> a, std::vector<T> b) {
  const std::size_t n = a.rows();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    double best = std::abs(a(col, col));
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col)) > best) {
        best = std::abs(a(r, col));
        pivot = r;
      }
    }
    if (best == 0.0) throw NumericalError("lu_solve: singular matrix");
    if (pivot != col) {
      std::swap_ranges(a.row(col).begin(), a.row(col).end(), a.row(pivot).begin());
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const T f = a(r, col) / a(col, col);
      if (f == T{}) continue;
      for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
      b[r] -= f * b[col];
    }
  }
  std::vector<T> x(n);
  for (std::size_t i = n; i-- > 0;) {
    T acc = b[i];
    for (std::size_t c = i + 1; c < n; ++c) acc -= a(i, c) * x[c];
    x[i] = acc / a(i, i);
  }
  return x;
}

double determinant(RealMatrix a) {
  const std::size_t n = a.rows();
  double det = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    if (a(pivot, col) == 0.0) return 0.0;
    if (pivot != col) {
      std::swap_ranges(a.row(col).begin(), a.row(col).end(), a.row(pivot).begin());
      det = -det;
    }
    det *= a(col, col);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
    }
  }
  return det;
}

template <class T>
std::uint64_t fingerprint(const Matrix<T>& a) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(a.data());
  const std::size_t count = a.rows() * a.cols() * sizeof(T);
  for (std::size_t i = 0; i < count; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

template Tridiagonal householder_tridiagonalize(const RealMatrix&, RealMatrix*);
template Tridiagonal householder_tridiagonalize(const ComplexMatrix&, ComplexMatrix*);
template void tridiagonal_ql(Tridiagonal&, RealMatrix*);
template void tridiagonal_ql(Tridiagonal&, ComplexMatrix*);
template EigenSystem<double> self_adjoint_eigen(const RealMatrix&, bool);
template EigenSystem<Complex> self_adjoint_eigen(const ComplexMatrix&, bool);
template std::vector<double> lu_solve(RealMatrix, std::vector<double>);
template std::vector<Complex> lu_solve(ComplexMatrix, std::vector<Complex>);
template std::uint64_t fingerprint(const RealMatrix&) noexcept;
template std::uint64_t fingerprint(const ComplexMatrix&) noexcept;

}  // namespace wigner
