#pragma once

// Schrodinger transfer matrices
//
//   A_k(z) = [[E - lambda v(z + k omega) - v1(k), -1], [1, 0]],
//   M_N(z) = A_N(z) ... A_1(z),
//
// and overflow-free accumulation of their products.
//
// Products are carried in QR form M = Q R with Q unitary (det Q = 1) and
// R = e^{alpha} [[1, t], [0, d]]. Each step factors A_k Q = Q' R' with a 2x2
// Gram-Schmidt, so the growth lives in the scalar alpha while d records the
// contracting direction. Unlike a single rescaled matrix, this keeps the
// determinant of the represented product observable to rounding accuracy even
// when ||M_N|| is astronomically large.

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "qplyap/background.hpp"
#include "qplyap/errors.hpp"
#include "qplyap/potential.hpp"

namespace qplyap {

template <class T>
struct Mat2 {
  T a11{}, a12{}, a21{}, a22{};

  friend Mat2 operator*(const Mat2& x, const Mat2& y) {
    return {x.a11 * y.a11 + x.a12 * y.a21, x.a11 * y.a12 + x.a12 * y.a22,
            x.a21 * y.a11 + x.a22 * y.a21, x.a21 * y.a12 + x.a22 * y.a22};
  }
  friend Mat2 operator*(T s, const Mat2& m) { return {s * m.a11, s * m.a12, s * m.a21, s * m.a22}; }
  friend Mat2 operator-(const Mat2& x, const Mat2& y) {
    return {x.a11 - y.a11, x.a12 - y.a12, x.a21 - y.a21, x.a22 - y.a22};
  }
  T det() const { return a11 * a22 - a12 * a21; }
  bool operator==(const Mat2&) const = default;
};

using Mat2c = Mat2<cplx>;

namespace detail {
inline double abs2(double x) { return x * x; }
inline double abs2(cplx z) { return std::norm(z); }
inline double conj_if(double x) { return x; }
inline cplx conj_if(cplx z) { return std::conj(z); }
}  // namespace detail

template <class T>
double frobenius(const Mat2<T>& m) {
  using detail::abs2;
  return std::sqrt(abs2(m.a11) + abs2(m.a12) + abs2(m.a21) + abs2(m.a22));
}

/// Largest singular value of a 2x2 matrix, from its Frobenius norm and |det|.
template <class T>
double spectral_norm(const Mat2<T>& m) {
  const double f2 = frobenius(m) * frobenius(m);
  const double d = std::abs(m.det());
  const double disc = std::max(0.0, f2 * f2 - 4.0 * d * d);
  return std::sqrt(0.5 * (f2 + std::sqrt(disc)));
}

/// The represented matrix is mat * e^{log_scale}; det is carried separately.
struct NormalizedProduct {
  Mat2c mat{1.0, 0.0, 0.0, 1.0};
  double log_scale = 0.0;
  cplx det = 1.0;
  std::size_t steps = 0;

  /// ln ||M|| with the spectral norm.
  double log_norm() const { return log_scale + std::log(spectral_norm(mat)); }

  /// Represented matrix times e^{-ref}.
  Mat2c scaled_by(double ref) const { return std::exp(log_scale - ref) * mat; }
};

/// Streaming left-multiplication by one-step matrices [[a, -1], [1, 0]].
/// Scalar is double on the real axis and cplx off it.
template <class Scalar>
class ProductAccumulator {
 public:
  void push(Scalar a) {
    using detail::abs2;
    using detail::conj_if;
    // columns of A Q, where Q = [[qx, -conj(qy)], [qy, conj(qx)]]
    const Scalar c1x = a * qx_ - qy_;
    const Scalar c1y = qx_;
    const Scalar c2x = -a * conj_if(qy_) - conj_if(qx_);
    const Scalar c2y = -conj_if(qy_);

    const double r11 = std::sqrt(abs2(c1x) + abs2(c1y));
    const double inv = 1.0 / r11;
    qx_ = c1x * inv;
    qy_ = c1y * inv;
    const Scalar r12 = conj_if(qx_) * c2x + conj_if(qy_) * c2y;
    const Scalar r22 = qx_ * c2y - qy_ * c2x;

    t_ += r12 * inv * d_;
    d_ *= r22 * inv;
    if (abs2(d_) < 1e-300) d_ = Scalar{0.0};
    det_ *= r11 * r22;

    mant_ *= r11;
    if (mant_ > 0x1.0p+400 || mant_ < 0x1.0p-400) {
      int e = 0;
      mant_ = std::frexp(mant_, &e);
      exp2_ += e;
    }
    ++steps_;
  }

  std::size_t steps() const { return steps_; }

  /// ln ||M|| (spectral norm).
  double log_norm() const { return log_growth() + std::log(spectral_norm(triangular())); }

  NormalizedProduct snapshot() const {
    const Mat2c r = triangular();
    const cplx qx = qx_, qy = qy_;
    const Mat2c q{qx, -std::conj(qy), qy, std::conj(qx)};
    const Mat2c full = q * r;
    const double f = frobenius(full);
    NormalizedProduct out;
    out.mat = (1.0 / f) * full;
    out.log_scale = log_growth() + std::log(f);
    out.det = q.det() * cplx(det_);
    out.steps = steps_;
    return out;
  }

 private:
  double log_growth() const {
    return std::log(mant_) + static_cast<double>(exp2_) * std::numbers::ln2;
  }
  Mat2c triangular() const { return {1.0, cplx(t_), 0.0, cplx(d_)}; }

  Scalar qx_{1.0}, qy_{0.0};
  Scalar t_{0.0}, d_{1.0};
  Scalar det_{1.0};
  double mant_ = 1.0;
  std::int64_t exp2_ = 0;
  std::size_t steps_ = 0;
};

/// B independent real products advanced in lock step (same recurrence as
/// ProductAccumulator<double>, struct-of-arrays so the sqrt/div chains overlap).
template <std::size_t B>
class RealProductBatch {
 public:
  RealProductBatch() {
    for (std::size_t b = 0; b < B; ++b) {
      qx_[b] = 1.0;
      qy_[b] = 0.0;
      t_[b] = 0.0;
      d_[b] = 1.0;
      mant_[b] = 1.0;
      exp2_[b] = 0;
    }
  }

  /// Steps every lane with a_b = energy_b - offset.
  void push(const double* energy, double offset) {
    for (std::size_t b = 0; b < B; ++b) {
      const double a = energy[b] - offset;
      const double qx = qx_[b], qy = qy_[b];
      const double c1x = a * qx - qy;
      const double c2x = -a * qy - qx;
      const double r11 = std::sqrt(c1x * c1x + qx * qx);
      const double inv = 1.0 / r11;
      const double nqx = c1x * inv, nqy = qx * inv;
      const double r12 = nqx * c2x - nqy * qy;
      const double r22 = -nqx * qy - nqy * c2x;
      t_[b] += r12 * inv * d_[b];
      const double nd = d_[b] * r22 * inv;
      d_[b] = nd * nd < 1e-300 ? 0.0 : nd;
      qx_[b] = nqx;
      qy_[b] = nqy;
      mant_[b] *= r11;
    }
    if (++steps_ % 8 == 0) flush();
  }

  std::size_t steps() const { return steps_; }

  double log_norm(std::size_t b) const {
    const Mat2<double> r{1.0, t_[b], 0.0, d_[b]};
    return std::log(mant_[b]) + static_cast<double>(exp2_[b]) * std::numbers::ln2 +
           std::log(spectral_norm(r));
  }

 private:
  void flush() {
    for (std::size_t b = 0; b < B; ++b) {
      int e = 0;
      mant_[b] = std::frexp(mant_[b], &e);
      exp2_[b] += e;
    }
  }

  alignas(64) double qx_[B], qy_[B], t_[B], d_[B], mant_[B];
  std::int64_t exp2_[B];
  std::size_t steps_ = 0;
};

/// Everything defining the cocycle except the energy.
struct OperatorParams {
  double lambda = 1.0;
  double omega = 0.6180339887498949;
  FourierPotential potential = FourierPotential::cosine(0.5);
  BackgroundSpec background{};

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("cocycle: lambda must be >= 0 and finite");
    if (!(omega > 0.0 && omega < 1.0)) throw ConfigError("cocycle: omega must lie in (0,1)");
    background.validate();
  }

  std::string canonical() const {
    return "lambda=" + format_double(lambda) + ";omega=" + format_double(omega) + ";v{" +
           potential.canonical() + "};v1{" + background.canonical() + "}";
  }
};

struct CocycleParams : OperatorParams {
  double energy = 0.0;

  void validate() const {
    OperatorParams::validate();
    if (!std::isfinite(energy)) throw ConfigError("cocycle: energy must be finite");
  }

  std::string canonical() const { return OperatorParams::canonical() + ";E=" + format_double(energy); }
  std::string digest() const { return fnv1a_hex(canonical()); }
};

inline CocycleParams at_energy(const OperatorParams& op, double energy) {
  CocycleParams p;
  static_cast<OperatorParams&>(p) = op;
  p.energy = energy;
  return p;
}

/// Fills out[i] = lambda v(z + (first+i) omega) + v1(first+i). Phases advance
/// by one addition and a mod-1 wrap per step.
template <class Scalar>
void fill_offsets(const OperatorParams& op, StripPoint z, std::int64_t first, std::span<Scalar> out) {
  if (!(std::abs(z.y) < op.potential.rho())) throw DomainError("cocycle: height outside strip");
  double x = reduce_phase(std::fma(static_cast<double>(first), op.omega, z.x));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double bg = op.background.value_at(first + static_cast<std::int64_t>(i));
    if constexpr (std::is_same_v<Scalar, double>) {
      out[i] = op.lambda * op.potential.eval_real(x) + bg;
    } else {
      out[i] = op.lambda * op.potential.eval_unchecked(x, z.y) + bg;
    }
    x += op.omega;
    if (x >= 1.0) x -= 1.0;
  }
}

/// A_k(z) as a complex matrix.
inline Mat2c one_step(const CocycleParams& params, StripPoint z, std::int64_t k) {
  const double x = reduce_phase(std::fma(static_cast<double>(k), params.omega, z.x));
  const cplx v = params.potential.eval(StripPoint(x, z.y));
  const cplx a = params.energy - params.lambda * v - params.background.value_at(k);
  return {a, -1.0, 1.0, 0.0};
}

namespace detail {
template <class Scalar>
NormalizedProduct run_product(const CocycleParams& params, StripPoint z, std::size_t n, std::int64_t first) {
  std::vector<Scalar> offsets(n);
  fill_offsets<Scalar>(params, z, first, offsets);
  ProductAccumulator<Scalar> acc;
  for (const Scalar& o : offsets) acc.push(params.energy - o);
  return acc.snapshot();
}
}  // namespace detail

/// M_N(z) = A_{first+N-1} ... A_first. N = 0 gives the identity.
inline NormalizedProduct product(const CocycleParams& params, StripPoint z, std::size_t n,
                                 std::int64_t first = 1) {
  if (n == 0) return {};
  if (z.y == 0.0) return detail::run_product<double>(params, z, n, first);
  return detail::run_product<cplx>(params, z, n, first);
}

/// u_N(z) = (1/N) ln ||M_N(z)||.
inline double u_n(const CocycleParams& params, StripPoint z, std::size_t n) {
  if (n == 0) throw DomainError("cocycle: u_N needs N >= 1");
  return product(params, z, n).log_norm() / static_cast<double>(n);
}

/// ln(C_v lambda + |E| + max|v1| + 1), the a priori ceiling of u_N on the strip.
inline double u_n_ceiling(const CocycleParams& params) {
  return std::log(params.potential.strip_bound() * params.lambda + std::abs(params.energy) +
                  alphabet_stats(params.background).max_abs + 1.0);
}

struct EntryBound {
  bool holds = false;
  double lhs = 0.0;  // |(M_N)_11|
  double rhs = 0.0;  // prod (|a_n| - 1)
  double log_lhs = 0.0;
  double log_rhs = 0.0;
};

/// Checks |(M_N)_11| >= prod (|a_n| - 1) for the product of [[a_n, -1], [1, 0]],
/// valid when every |a_n| >= 2.
inline EntryBound entry_bound_check(std::span<const cplx> diagonal) {
  for (const cplx& a : diagonal)
    if (!(std::abs(a) >= 2.0)) throw DomainError("entry bound: requires |a_n| >= 2 for every step");
  // (M_n)_11 obeys p_n = a_n p_{n-1} - p_{n-2}; carry (p_n, p_{n-1}) with a shared scale.
  cplx p = 1.0, p_prev = 0.0;
  double log_scale = 0.0, log_rhs = 0.0;
  for (const cplx& a : diagonal) {
    const cplx next = a * p - p_prev;
    p_prev = p;
    p = next;
    const double m = std::max(std::abs(p), std::abs(p_prev));
    if (m > 1e100) {
      p /= m;
      p_prev /= m;
      log_scale += std::log(m);
    }
    log_rhs += std::log(std::abs(a) - 1.0);
  }
  EntryBound r;
  r.log_lhs = log_scale + std::log(std::abs(p));
  r.log_rhs = log_rhs;
  r.lhs = std::exp(r.log_lhs);
  r.rhs = std::exp(r.log_rhs);
  r.holds = r.log_lhs >= r.log_rhs - 1e-12 * (1.0 + std::abs(r.log_rhs));
  return r;
}

}  // namespace qplyap
