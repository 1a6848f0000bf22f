#pragma once

// Small dense linear algebra for planar and spatial parallel mechanisms.
// Everything here is sized for n in {2, 3}: fixed-capacity vectors and
// matrices, closed-form adjugate inversion, and a cyclic Jacobi
// eigensolver for symmetric matrices.

#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <optional>

namespace pkm {

inline constexpr std::size_t kMaxDim = 3;

inline constexpr double kPi = 3.14159265358979323846;

/// Normalizes an angle to (-pi, pi].
inline double normalize_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

// Fixed-capacity vector with runtime size (2 or 3 in practice).
class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t n) : n_(n) { assert(n <= kMaxDim); }
  Vec(std::initializer_list<double> xs) : n_(xs.size()) {
    assert(n_ <= kMaxDim);
    std::size_t i = 0;
    for (double x : xs) v_[i++] = x;
  }

  std::size_t size() const { return n_; }
  double& operator[](std::size_t i) {
    assert(i < n_);
    return v_[i];
  }
  double operator[](std::size_t i) const {
    assert(i < n_);
    return v_[i];
  }

  const double* begin() const { return v_.data(); }
  const double* end() const { return v_.data() + n_; }

 private:
  std::array<double, kMaxDim> v_{};
  std::size_t n_ = 0;
};

inline double dot(const Vec& a, const Vec& b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double max_abs(const Vec& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

inline Vec operator-(const Vec& a, const Vec& b) {
  assert(a.size() == b.size());
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vec operator+(const Vec& a, const Vec& b) {
  assert(a.size() == b.size());
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vec operator*(double s, const Vec& a) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
  return r;
}

// Square matrix with runtime dimension (2 or 3), row-major fixed storage.
class Mat {
 public:
  Mat() = default;
  explicit Mat(std::size_t n) : n_(n) { assert(n <= kMaxDim); }

  static Mat identity(std::size_t n) {
    Mat m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Mat diagonal(const Vec& d) {
    Mat m(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t dim() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) {
    assert(i < n_ && j < n_);
    return m_[i * kMaxDim + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    assert(i < n_ && j < n_);
    return m_[i * kMaxDim + j];
  }

 private:
  std::array<double, kMaxDim * kMaxDim> m_{};
  std::size_t n_ = 0;
};

inline Vec column(const Mat& m, std::size_t j) {
  Vec c(m.dim());
  for (std::size_t i = 0; i < m.dim(); ++i) c[i] = m(i, j);
  return c;
}

inline Mat transpose(const Mat& m) {
  Mat t(m.dim());
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = 0; j < m.dim(); ++j) t(j, i) = m(i, j);
  return t;
}

inline Mat operator*(const Mat& a, const Mat& b) {
  assert(a.dim() == b.dim());
  const std::size_t n = a.dim();
  Mat r(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += a(i, k) * b(k, j);
      r(i, j) = s;
    }
  return r;
}

inline Vec operator*(const Mat& a, const Vec& x) {
  assert(a.dim() == x.size());
  const std::size_t n = a.dim();
  Vec r(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += a(i, j) * x[j];
    r[i] = s;
  }
  return r;
}

inline double max_abs(const Mat& m) {
  double r = 0.0;
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = 0; j < m.dim(); ++j) r = std::max(r, std::abs(m(i, j)));
  return r;
}

inline double determinant(const Mat& m) {
  switch (m.dim()) {
    case 1:
      return m(0, 0);
    case 2:
      return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    case 3:
      return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
             m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
             m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    default:
      assert(false);
      return 0.0;
  }
}

/// Adjugate inverse. Refuses when |det| < 1e-12 * max(1, max|entry|)^n,
/// which is the library-wide near-singularity threshold.
inline std::optional<Mat> try_inverse(const Mat& m) {
  const std::size_t n = m.dim();
  const double det = determinant(m);
  const double scale = std::max(1.0, max_abs(m));
  double thresh = 1e-12;
  for (std::size_t i = 0; i < n; ++i) thresh *= scale;
  if (std::abs(det) < thresh) return std::nullopt;

  Mat inv(n);
  if (n == 1) {
    inv(0, 0) = 1.0 / det;
  } else if (n == 2) {
    inv(0, 0) = m(1, 1) / det;
    inv(0, 1) = -m(0, 1) / det;
    inv(1, 0) = -m(1, 0) / det;
    inv(1, 1) = m(0, 0) / det;
  } else {
    inv(0, 0) = (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) / det;
    inv(0, 1) = (m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2)) / det;
    inv(0, 2) = (m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1)) / det;
    inv(1, 0) = (m(1, 2) * m(2, 0) - m(1, 0) * m(2, 2)) / det;
    inv(1, 1) = (m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0)) / det;
    inv(1, 2) = (m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2)) / det;
    inv(2, 0) = (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0)) / det;
    inv(2, 1) = (m(0, 1) * m(2, 0) - m(0, 0) * m(2, 1)) / det;
    inv(2, 2) = (m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0)) / det;
  }
  return inv;
}

struct SymmetricEigen {
  Vec values;   // ascending
  Mat vectors;  // column j pairs with values[j]; columns orthonormal
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Eigenvalues come
/// back ascending; eigenvector signs are canonicalized so the largest-
/// magnitude component of each column is positive.
inline SymmetricEigen symmetric_eigen(const Mat& m) {
  const std::size_t n = m.dim();
  Mat a = m;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = a(j, i) = s;
    }
  Mat v = Mat::identity(n);

  for (int sweep = 1; sweep <= 50; ++sweep) {
    double sm = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) sm += std::abs(a(p, q));
    if (sm == 0.0) break;
    const double tresh = (sweep < 4) ? 0.2 * sm / double(n * n) : 0.0;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double g = 100.0 * std::abs(a(p, q));
        if (sweep > 4 && std::abs(a(p, p)) + g == std::abs(a(p, p)) &&
            std::abs(a(q, q)) + g == std::abs(a(q, q))) {
          a(p, q) = 0.0;
          continue;
        }
        if (std::abs(a(p, q)) <= tresh) continue;

        const double h = a(q, q) - a(p, p);
        double t;
        if (std::abs(h) + g == std::abs(h)) {
          t = a(p, q) / h;
        } else {
          const double theta = 0.5 * h / a(p, q);
          t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
          if (theta < 0.0) t = -t;
        }
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const double tau = s / (1.0 + c);
        const double apq = a(p, q);

        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          if (k != p && k != q) {
            // rotate the (k,p)/(k,q) pair, reading the symmetric half
            const double akp = (k < p) ? a(k, p) : a(p, k);
            const double akq = (k < q) ? a(k, q) : a(q, k);
            const double np = akp - s * (akq + tau * akp);
            const double nq = akq + s * (akp - tau * akq);
            if (k < p) a(k, p) = np; else a(p, k) = np;
            if (k < q) a(k, q) = nq; else a(q, k) = nq;
          }
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = vkp - s * (vkq + tau * vkp);
          v(k, q) = vkq + s * (vkp - tau * vkq);
        }
      }
    }
  }

  // sort ascending, carry columns along
  std::array<std::size_t, kMaxDim> order{};
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (a(order[j], order[j]) < a(order[i], order[i])) std::swap(order[i], order[j]);

  SymmetricEigen out;
  out.values = Vec(n);
  out.vectors = Mat(n);
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
  }
  // canonical sign: largest-|component| entry positive
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t imax = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(out.vectors(i, j)) > std::abs(out.vectors(imax, j))) imax = i;
    if (out.vectors(imax, j) < 0.0)
      for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = -out.vectors(i, j);
  }
  return out;
}

/// Singular values, descending, via the eigenvalues of J*J^T.
inline Vec singular_values(const Mat& j) {
  const std::size_t n = j.dim();
  const SymmetricEigen eig = symmetric_eigen(j * transpose(j));
  Vec s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = std::sqrt(std::max(0.0, eig.values[n - 1 - i]));
  return s;
}

inline double min_singular_value(const Mat& m) {
  const Vec s = singular_values(m);
  return s[m.dim() - 1];
}

// Planar point/vector helpers used by the mechanism geometry.
struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline Point2 operator-(const Point2& a, const Point2& b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator+(const Point2& a, const Point2& b) { return {a.x + b.x, a.y + b.y}; }
inline double dot(const Point2& a, const Point2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Point2& a, const Point2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Point2& a) { return std::hypot(a.x, a.y); }
inline Point2 rotated(const Point2& p, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

}  // namespace pkm
