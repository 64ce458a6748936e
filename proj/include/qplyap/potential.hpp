#pragma once

// Analytic 1-periodic sampling functions given by finite Fourier series
//
//   v(z) = sum_{|k| <= K} c_k e^{2 pi i k z},   c_{-k} = conj(c_k),
//
// evaluated on the strip |Im z| < rho. Only the non-negative harmonics are
// stored; negative ones follow from conjugate symmetry, which makes v real on
// the real axis.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "qplyap/digest.hpp"
#include "qplyap/errors.hpp"

namespace qplyap {

using cplx = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Reduces a phase into [0, 1).
inline double reduce_phase(double x) {
  const double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

/// A point x + iy of the strip; x is stored reduced mod 1.
struct StripPoint {
  double x = 0.0;
  double y = 0.0;

  StripPoint() = default;
  StripPoint(double phase, double height) : x(reduce_phase(phase)), y(height) {}
};

/// One non-negative harmonic as supplied in a run config.
struct Harmonic {
  int k = 0;
  double re = 0.0;
  double im = 0.0;
};

class FourierPotential {
 public:
  FourierPotential(std::span<const Harmonic> harmonics, double rho) : rho_(rho) {
    if (!(rho > 0.0) || !std::isfinite(rho))
      throw ConfigError("potential: rho must be positive and finite");
    int order = 0;
    for (const auto& h : harmonics) {
      if (h.k < 0) throw ConfigError("potential: only k >= 0 may be given");
      if (!std::isfinite(h.re) || !std::isfinite(h.im))
        throw ConfigError("potential: non-finite coefficient");
      order = std::max(order, h.k);
    }
    coeffs_.assign(static_cast<std::size_t>(order) + 1, cplx{});
    std::vector<bool> seen(coeffs_.size(), false);
    for (const auto& h : harmonics) {
      const auto k = static_cast<std::size_t>(h.k);
      if (seen[k]) throw ConfigError("potential: harmonic " + std::to_string(h.k) + " given twice");
      seen[k] = true;
      if (h.k == 0 && h.im != 0.0)
        throw ConfigError("potential: c_0 must be real for a real-valued potential");
      coeffs_[k] = {h.re, h.im};
    }
    while (coeffs_.size() > 1 && coeffs_.back() == cplx{}) coeffs_.pop_back();
  }

  FourierPotential(std::initializer_list<Harmonic> harmonics, double rho)
      : FourierPotential(std::span<const Harmonic>(harmonics.begin(), harmonics.size()), rho) {}

  /// a * 2cos(2 pi x), the almost Mathieu sampling function for a = 1.
  static FourierPotential cosine(double rho, double a = 1.0) { return {{{1, a, 0.0}}, rho}; }

  double rho() const { return rho_; }
  int order() const { return static_cast<int>(coeffs_.size()) - 1; }

  cplx coeff(int k) const {
    const auto idx = static_cast<std::size_t>(std::abs(k));
    if (idx >= coeffs_.size()) return {};
    return k >= 0 ? coeffs_[idx] : std::conj(coeffs_[idx]);
  }

  bool is_constant() const {
    return std::all_of(coeffs_.begin() + 1, coeffs_.end(), [](cplx c) { return c == cplx{}; });
  }

  std::vector<Harmonic> harmonics() const {
    std::vector<Harmonic> out;
    for (std::size_t k = 0; k < coeffs_.size(); ++k)
      if (k == 0 || coeffs_[k] != cplx{})
        out.push_back({static_cast<int>(k), coeffs_[k].real(), coeffs_[k].imag()});
    return out;
  }

  /// v(z); throws DomainError when z lies outside the open strip.
  cplx eval(StripPoint z) const {
    if (!(std::abs(z.y) < rho_)) throw DomainError("potential: height outside strip |Im z| < rho");
    return eval_unchecked(z.x, z.y);
  }

  /// Same series without the strip check. Powers of e^{2 pi i z} come from a
  /// multiplicative recurrence; one sin/cos pair per call.
  cplx eval_unchecked(double x, double y) const {
    if (y == 0.0) return {eval_real(x), 0.0};
    const double angle = two_pi * x;
    const cplx e{std::cos(angle), std::sin(angle)};
    const double decay = std::exp(-two_pi * y);
    const cplx w = e * decay;
    const cplx w_inv = std::conj(e) / decay;
    cplx wk = 1.0, wik = 1.0;
    cplx sum = coeffs_[0];
    for (std::size_t k = 1; k < coeffs_.size(); ++k) {
      wk *= w;
      wik *= w_inv;
      sum += coeffs_[k] * wk + std::conj(coeffs_[k]) * wik;
    }
    return sum;
  }

  /// v(x) for real x.
  double eval_real(double x) const {
    const double angle = two_pi * x;
    const cplx e{std::cos(angle), std::sin(angle)};
    cplx ek = 1.0;
    double sum = coeffs_[0].real();
    for (std::size_t k = 1; k < coeffs_.size(); ++k) {
      ek *= e;
      sum += 2.0 * (coeffs_[k].real() * ek.real() - coeffs_[k].imag() * ek.imag());
    }
    return sum;
  }

  /// C_v = sum |c_k| e^{2 pi |k| rho}, an upper bound for |v| on the strip.
  double strip_bound() const { return line_bound(rho_); }

  /// sum |c_k| e^{2 pi |k| |y|}: bounds |v| on the horizontal line Im z = y.
  double line_bound(double y) const {
    const double h = std::abs(y);
    double s = std::abs(coeffs_[0]);
    for (std::size_t k = 1; k < coeffs_.size(); ++k)
      s += 2.0 * std::abs(coeffs_[k]) * std::exp(two_pi * static_cast<double>(k) * h);
    return s;
  }

  /// Upper bound on |v'| over |Im z| <= y_max.
  double lipschitz_bound(double y_max) const {
    const double h = std::abs(y_max);
    if (!(h < rho_)) throw DomainError("potential: lipschitz height must lie inside the strip");
    double s = 0.0;
    for (std::size_t k = 1; k < coeffs_.size(); ++k) {
      const double kk = static_cast<double>(k);
      s += 2.0 * std::abs(coeffs_[k]) * two_pi * kk * std::exp(two_pi * kk * h);
    }
    return s;
  }

  /// x -> v(x + theta).
  FourierPotential shifted(double theta) const {
    FourierPotential out = *this;
    for (std::size_t k = 1; k < out.coeffs_.size(); ++k)
      out.coeffs_[k] *= std::polar(1.0, two_pi * static_cast<double>(k) * theta);
    return out;
  }

  FourierPotential scaled(double factor) const {
    FourierPotential out = *this;
    for (auto& c : out.coeffs_) c *= factor;
    return out;
  }

  /// Canonical text form, used for digests.
  std::string canonical() const {
    std::string s = "rho=" + format_double(rho_);
    for (const auto& h : harmonics())
      s += ";" + std::to_string(h.k) + ":" + format_double(h.re) + "," + format_double(h.im);
    return s;
  }

 private:
  std::vector<cplx> coeffs_;  // c_0 .. c_K
  double rho_;
};

}  // namespace qplyap
