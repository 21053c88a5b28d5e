#pragma once

// Orientation and power (in-orthosphere) predicates.
//
// Two-stage evaluation: a floating-point determinant with a running bound on
// the magnitude of its terms, and an exact rational re-evaluation (GMP) when
// the floating result is within the guard band. Exact zeros of the power test
// are resolved by symbolic perturbation of the weights: the site with the
// smallest key receives the largest infinitesimal weight increase.

#include <gmpxx.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

#include "polarballs/geometry.hpp"

namespace polarballs::predicates {

namespace detail {

// The floating-point determinant errs by at most ~40 ulp of `magnitude` for
// the 4x4 power test (entries carry <= 7 ulp each); 1e-13 leaves a wide margin.
inline constexpr double kGuard = 1e-13;

template <int N>
using Mat = std::array<std::array<double, N>, N>;

template <int N>
struct Det {
  double value;
  double magnitude;  // sum of |products| over the expansion
};

template <int N>
Det<N> det_bounded(const Mat<N>& m, const Mat<N>& mag) {
  if constexpr (N == 1) {
    return {m[0][0], mag[0][0]};
  } else if constexpr (N == 2) {
    return {m[0][0] * m[1][1] - m[0][1] * m[1][0], mag[0][0] * mag[1][1] + mag[0][1] * mag[1][0]};
  } else if constexpr (N == 3 || N == 4) {
    // 2x2 minors of the last two rows, then cofactor expansion upwards.
    constexpr int a = N - 2;
    constexpr int b = N - 1;
    double v2[N][N] = {};
    double g2[N][N] = {};
    for (int i = 0; i < N; ++i) {
      for (int j = i + 1; j < N; ++j) {
        v2[i][j] = m[a][i] * m[b][j] - m[a][j] * m[b][i];
        g2[i][j] = mag[a][i] * mag[b][j] + mag[a][j] * mag[b][i];
      }
    }
    auto minor3 = [&](int r, int c0, int c1, int c2, double& value, double& magnitude) {
      value = m[r][c0] * v2[c1][c2] - m[r][c1] * v2[c0][c2] + m[r][c2] * v2[c0][c1];
      magnitude = mag[r][c0] * g2[c1][c2] + mag[r][c1] * g2[c0][c2] + mag[r][c2] * g2[c0][c1];
    };
    if constexpr (N == 3) {
      Det<N> d{};
      minor3(0, 0, 1, 2, d.value, d.magnitude);
      return d;
    } else {
      double c[4];
      double g[4];
      minor3(1, 1, 2, 3, c[0], g[0]);
      minor3(1, 0, 2, 3, c[1], g[1]);
      minor3(1, 0, 1, 3, c[2], g[2]);
      minor3(1, 0, 1, 2, c[3], g[3]);
      return {m[0][0] * c[0] - m[0][1] * c[1] + m[0][2] * c[2] - m[0][3] * c[3],
              mag[0][0] * g[0] + mag[0][1] * g[1] + mag[0][2] * g[2] + mag[0][3] * g[3]};
    }
  } else {
    double value = 0.0;
    double magnitude = 0.0;
    for (int col = 0; col < N; ++col) {
      Mat<N - 1> minor{};
      Mat<N - 1> minor_mag{};
      for (int r = 1; r < N; ++r) {
        int cc = 0;
        for (int c = 0; c < N; ++c) {
          if (c == col) continue;
          minor[r - 1][cc] = m[r][c];
          minor_mag[r - 1][cc] = mag[r][c];
          ++cc;
        }
      }
      const Det<N - 1> sub = det_bounded<N - 1>(minor, minor_mag);
      const double sign = (col % 2 == 0) ? 1.0 : -1.0;
      value += sign * m[0][col] * sub.value;
      magnitude += mag[0][col] * sub.magnitude;
    }
    return {value, magnitude};
  }
}

template <int N>
using ZMat = std::array<std::array<mpz_class, N>, N>;

/// Sign of an integer determinant by fraction-free (Bareiss) elimination.
template <int N>
int exact_det_sign(ZMat<N> m) {
  int sign = 1;
  mpz_class prev = 1;
  for (int k = 0; k < N; ++k) {
    int pivot = -1;
    for (int r = k; r < N; ++r) {
      if (sgn(m[r][k]) != 0) {
        pivot = r;
        break;
      }
    }
    if (pivot < 0) return 0;
    if (pivot != k) {
      std::swap(m[pivot], m[k]);
      sign = -sign;
    }
    for (int i = k + 1; i < N; ++i) {
      for (int j = k + 1; j < N; ++j) {
        mpz_class t = m[i][j] * m[k][k] - m[i][k] * m[k][j];
        mpz_divexact(m[i][j].get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
      }
    }
    prev = m[k][k];
  }
  return sign * sgn(m[N - 1][N - 1]);
}

/// Exponent of the lowest possibly-set bit of x.
inline int low_exponent(double x) {
  if (x == 0.0) return std::numeric_limits<int>::max();
  int e = 0;
  std::frexp(x, &e);
  return e - 53;
}

/// x / 2^shift as an exact integer; requires shift <= low_exponent(x).
inline mpz_class scaled_int(double x, int shift) {
  if (x == 0.0) return 0;
  int e = 0;
  const double f = std::frexp(x, &e);
  mpz_class m(static_cast<long>(std::ldexp(f, 53)));
  mpz_mul_2exp(m.get_mpz_t(), m.get_mpz_t(), static_cast<mp_bitcnt_t>(e - 53 - shift));
  return m;
}

inline int floor_half(int e) { return e >= 0 ? e / 2 : -((-e + 1) / 2); }

inline int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

/// Statistics on how often the exact path is taken (process-wide, informational).
struct Counters {
  std::uint64_t filtered = 0;
  std::uint64_t exact = 0;
  std::uint64_t perturbed = 0;
};
inline Counters& counters() {
  thread_local Counters c;
  return c;
}

}  // namespace detail

/// Sign of det[p_1 - p_0, ..., p_Dim - p_0]. Positive for counter-clockwise
/// triangles (2D) and right-handed tetrahedra (3D). Exact.
template <int Dim>
int orient(std::span<const Point<Dim>* const, Dim + 1> p) {
  detail::Mat<Dim> m{};
  detail::Mat<Dim> mag{};
  for (int i = 0; i < Dim; ++i) {
    for (int c = 0; c < Dim; ++c) {
      m[i][c] = (*p[i + 1])[c] - (*p[0])[c];
      mag[i][c] = std::abs(m[i][c]);
    }
  }
  const auto d = detail::det_bounded<Dim>(m, mag);
  if (std::abs(d.value) > detail::kGuard * d.magnitude) {
    ++detail::counters().filtered;
    return detail::sign_of(d.value);
  }
  ++detail::counters().exact;
  int shift = std::numeric_limits<int>::max();
  for (int i = 0; i <= Dim; ++i)
    for (int c = 0; c < Dim; ++c) shift = std::min(shift, detail::low_exponent((*p[i])[c]));
  if (shift == std::numeric_limits<int>::max()) return 0;
  detail::ZMat<Dim> q;
  for (int i = 0; i < Dim; ++i)
    for (int c = 0; c < Dim; ++c) q[i][c] = detail::scaled_int((*p[i + 1])[c], shift) - detail::scaled_int((*p[0])[c], shift);
  return detail::exact_det_sign<Dim>(q);
}

template <int Dim>
int orient(const std::array<const Point<Dim>*, Dim + 1>& p) {
  return orient<Dim>(std::span<const Point<Dim>* const, Dim + 1>(p));
}

/// One input of the power test: position, weight and the perturbation key.
template <int Dim>
struct KeyedSite {
  const Point<Dim>* p;
  double w;
  std::int64_t key;
};

/// Sign of the perturbed determinant
///   T = det[ c_i - q , |c_i - q|^2 - w_i + w_q ]_{i = 0..Dim}.
/// Never returns zero as long as the cell is full-dimensional.
template <int Dim>
int power_test_raw(const std::array<KeyedSite<Dim>, Dim + 1>& cell, const KeyedSite<Dim>& q) {
  constexpr int N = Dim + 1;
  detail::Mat<N> m{};
  detail::Mat<N> mag{};
  for (int i = 0; i < N; ++i) {
    double sq = 0.0;
    double sq_mag = 0.0;
    for (int c = 0; c < Dim; ++c) {
      const double d = (*cell[i].p)[c] - (*q.p)[c];
      m[i][c] = d;
      mag[i][c] = std::abs(d);
      sq += d * d;
    }
    sq_mag = sq;
    m[i][Dim] = sq - cell[i].w + q.w;
    mag[i][Dim] = sq_mag + std::abs(cell[i].w) + std::abs(q.w);
  }
  const auto d = detail::det_bounded<N>(m, mag);
  if (std::abs(d.value) > detail::kGuard * d.magnitude) {
    ++detail::counters().filtered;
    return detail::sign_of(d.value);
  }

  ++detail::counters().exact;
  // Common integer grid: coordinates in units of 2^shift, weights in 2^(2 shift).
  int shift = 0;
  {
    int lo = std::numeric_limits<int>::max();
    auto coords = [&](const Point<Dim>& x) {
      for (int c = 0; c < Dim; ++c) lo = std::min(lo, detail::low_exponent(x[c]));
    };
    coords(*q.p);
    for (int i = 0; i < N; ++i) coords(*cell[i].p);
    auto weight = [&](double w) {
      if (w != 0.0) lo = std::min(lo, detail::floor_half(detail::low_exponent(w)));
    };
    weight(q.w);
    for (int i = 0; i < N; ++i) weight(cell[i].w);
    shift = lo == std::numeric_limits<int>::max() ? 0 : lo;
  }
  detail::ZMat<N> qm;
  const mpz_class wq = detail::scaled_int(q.w, 2 * shift);
  for (int i = 0; i < N; ++i) {
    mpz_class sq(0);
    for (int c = 0; c < Dim; ++c) {
      qm[i][c] = detail::scaled_int((*cell[i].p)[c], shift) - detail::scaled_int((*q.p)[c], shift);
      sq += qm[i][c] * qm[i][c];
    }
    qm[i][Dim] = sq - detail::scaled_int(cell[i].w, 2 * shift) + wq;
  }
  const int s = detail::exact_det_sign<N>(qm);
  if (s != 0) return s;

  // Degenerate: walk the perturbation terms from largest to smallest.
  ++detail::counters().perturbed;
  std::array<int, N + 1> order{};
  for (int i = 0; i <= N; ++i) order[i] = i;  // index N denotes q
  auto key_of = [&](int i) { return i == N ? q.key : cell[i].key; };
  std::sort(order.begin(), order.end(), [&](int a, int b) { return key_of(a) < key_of(b); });
  for (int idx : order) {
    int deriv = 0;
    if (idx == N) {
      // dT/dw_q = det[c_i - q, 1] = (-1)^Dim orient(c)
      std::array<const Point<Dim>*, Dim + 1> pts{};
      for (int i = 0; i < N; ++i) pts[i] = cell[i].p;
      deriv = orient<Dim>(pts) * ((Dim % 2 == 0) ? 1 : -1);
    } else {
      // dT/dw_k = -cofactor(k, Dim) = -(-1)^(k+Dim) minor(k, Dim)
      detail::ZMat<Dim> minor;
      int rr = 0;
      for (int r = 0; r < N; ++r) {
        if (r == idx) continue;
        for (int c = 0; c < Dim; ++c) minor[rr][c] = qm[r][c];
        ++rr;
      }
      const int ms = detail::exact_det_sign<Dim>(minor);
      deriv = -ms * (((idx + Dim) % 2 == 0) ? 1 : -1);
    }
    if (deriv != 0) return deriv;
  }
  return 0;
}

/// True when q lies strictly inside the orthosphere of a positively oriented
/// cell, i.e. q's lifted point is below the cell's lifted hyperplane.
template <int Dim>
bool in_conflict(const std::array<KeyedSite<Dim>, Dim + 1>& cell, const KeyedSite<Dim>& q) {
  const int t = power_test_raw<Dim>(cell, q);
  return ((Dim % 2 == 0) ? t : -t) > 0;
}

}  // namespace polarballs::predicates
