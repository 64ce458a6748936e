#pragma once

// Finite-N Lyapunov exponents
//
//   L_N(E) = int_0^1 u_N(x + iy) dx
//
// by the rectangle rule on a uniform phase grid. The integrand is 1-periodic
// and continuous, so the uniform grid is the natural quadrature. Potential
// and background values along each orbit do not depend on E: they are
// tabulated once per grid point and reused for every energy of a scan.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "qplyap/cocycle.hpp"
#include "qplyap/parallel.hpp"

namespace qplyap {

inline constexpr double golden_mean = 0.6180339887498949;

struct LyapunovEstimate {
  std::size_t N = 0;
  std::size_t grid_m = 0;
  double value = 0.0;         // rectangle rule, grid_m points, N steps
  double half_n_value = 0.0;  // same grid, max(N/2, 1) steps
  double quad_refined = 0.0;  // 2 grid_m points, N steps
  std::string params_digest;
};

struct ScanRow {
  double energy = 0.0;
  LyapunovEstimate estimate;
};

struct ConvergencePoint {
  std::size_t N = 0;
  double value = 0.0;
};

/// A warning when omega is numerically rational (within 1e-12 of p/q, q <= 100).
inline std::optional<std::string> frequency_warning(double omega) {
  for (int den = 1; den <= 100; ++den) {
    const double num = std::round(omega * den);
    if (std::abs(omega - num / den) <= 1e-12)
      return "omega is within 1e-12 of " + std::to_string(static_cast<long long>(num)) + "/" +
             std::to_string(den) + "; L_N is then periodic in structure, not a liminf proxy";
  }
  return std::nullopt;
}

namespace detail {

/// u = ln||M_n(x_p + iy)|| / n for every phase p, energy e and checkpoint n.
/// Layout: [p][e][c].
template <class Scalar>
std::vector<double> sample_log_norms(const OperatorParams& op, double y, std::span<const double> phases,
                                     std::span<const double> energies,
                                     std::span<const std::size_t> checkpoints) {
  const std::size_t n_max = checkpoints.empty() ? 0 : checkpoints.back();
  const std::size_t ne = energies.size(), nc = checkpoints.size();
  std::vector<double> out(phases.size() * ne * nc);
  parallel_for(phases.size(), [&](std::size_t p) {
    std::vector<Scalar> offsets(n_max);
    fill_offsets<Scalar>(op, StripPoint(phases[p], y), 1, offsets);
    std::size_t e = 0;
    if constexpr (std::is_same_v<Scalar, double>) {
      constexpr std::size_t lanes = 8;
      for (; e + lanes <= ne; e += lanes) {
        RealProductBatch<lanes> batch;
        std::size_t step = 0;
        for (std::size_t c = 0; c < nc; ++c) {
          const std::size_t stop = checkpoints[c];
          for (; step < stop; ++step) batch.push(&energies[e], offsets[step]);
          for (std::size_t b = 0; b < lanes; ++b)
            out[(p * ne + e + b) * nc + c] = batch.log_norm(b) / static_cast<double>(stop);
        }
      }
    }
    for (; e < ne; ++e) {
      ProductAccumulator<Scalar> acc;
      std::size_t c = 0, step = 0;
      const double energy = energies[e];
      double* slot = &out[(p * ne + e) * nc];
      while (c < nc) {
        const std::size_t stop = checkpoints[c];
        for (; step < stop; ++step) acc.push(energy - offsets[step]);
        slot[c] = acc.log_norm() / static_cast<double>(stop);
        ++c;
      }
    }
  });
  return out;
}

inline std::vector<double> sample_phases(std::size_t m) {
  std::vector<double> x(m);
  for (std::size_t j = 0; j < m; ++j) x[j] = static_cast<double>(j) / static_cast<double>(m);
  return x;
}

inline std::vector<double> sample(const OperatorParams& op, double y, std::span<const double> phases,
                                  std::span<const double> energies, std::span<const std::size_t> checkpoints) {
  if (!(std::abs(y) < op.potential.rho())) throw DomainError("lyapunov: height outside strip");
  if (y == 0.0) return sample_log_norms<double>(op, y, phases, energies, checkpoints);
  return sample_log_norms<cplx>(op, y, phases, energies, checkpoints);
}

/// Mean over phases p in [0, count) with the given stride, for energy e and checkpoint c.
inline double grid_mean(std::span<const double> u, std::size_t count, std::size_t stride, std::size_t ne,
                        std::size_t nc, std::size_t e, std::size_t c) {
  std::vector<double> vals(count);
  for (std::size_t j = 0; j < count; ++j) vals[j] = u[((j * stride) * ne + e) * nc + c];
  return pairwise_sum(vals) / static_cast<double>(count);
}

inline void check_sizes(std::size_t n, std::size_t grid_m) {
  if (n == 0) throw DomainError("lyapunov: N must be >= 1");
  if (grid_m < 16) throw DomainError("lyapunov: grid_m must be >= 16");
}

}  // namespace detail

/// L_N(E) at every energy, with the half-N and doubled-grid diagnostics.
inline std::vector<ScanRow> scan(const OperatorParams& op, std::span<const double> energies, std::size_t n,
                                 std::size_t grid_m) {
  detail::check_sizes(n, grid_m);
  if (energies.empty()) throw DomainError("lyapunov: empty energy list");
  op.validate();
  const std::size_t half = std::max<std::size_t>(1, n / 2);
  std::vector<std::size_t> checkpoints{half};
  if (n != half) checkpoints.push_back(n);
  const std::size_t nc = checkpoints.size(), ne = energies.size();
  const auto phases = detail::sample_phases(2 * grid_m);  // even indices form the grid_m grid
  const auto u = detail::sample(op, 0.0, phases, energies, checkpoints);

  std::vector<ScanRow> rows(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    auto& est = rows[e].estimate;
    rows[e].energy = energies[e];
    est.N = n;
    est.grid_m = grid_m;
    est.value = detail::grid_mean(u, grid_m, 2, ne, nc, e, nc - 1);
    est.half_n_value = detail::grid_mean(u, grid_m, 2, ne, nc, e, 0);
    est.quad_refined = detail::grid_mean(u, 2 * grid_m, 1, ne, nc, e, nc - 1);
    est.params_digest = at_energy(op, energies[e]).digest();
  }
  return rows;
}

inline LyapunovEstimate l_n(const CocycleParams& params, std::size_t n, std::size_t grid_m = 512) {
  const double e = params.energy;
  return scan(params, std::span<const double>(&e, 1), n, grid_m).front().estimate;
}

/// int_0^1 u_N(x + iy) dx on a grid_m-point rule.
inline double l_n_strip(const CocycleParams& params, double y, std::size_t n, std::size_t grid_m) {
  detail::check_sizes(n, grid_m);
  params.validate();
  const double e = params.energy;
  const auto phases = detail::sample_phases(grid_m);
  const auto u = detail::sample(params, y, phases, std::span<const double>(&e, 1), std::span(&n, 1));
  return detail::grid_mean(u, grid_m, 1, 1, 1, 0, 0);
}

/// The finite-N sequence L_N(E) along an increasing schedule, from one pass of
/// products per grid point.
inline std::vector<ConvergencePoint> convergence(const CocycleParams& params,
                                                 std::span<const std::size_t> schedule, std::size_t grid_m) {
  if (schedule.empty()) throw DomainError("lyapunov: empty N schedule");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    detail::check_sizes(schedule[i], grid_m);
    if (i > 0 && schedule[i] <= schedule[i - 1]) throw DomainError("lyapunov: N schedule must increase");
  }
  params.validate();
  const double e = params.energy;
  const auto phases = detail::sample_phases(grid_m);
  const auto u = detail::sample(params, 0.0, phases, std::span<const double>(&e, 1), schedule);
  std::vector<ConvergencePoint> out;
  for (std::size_t c = 0; c < schedule.size(); ++c)
    out.push_back({schedule[c], detail::grid_mean(u, grid_m, 1, 1, schedule.size(), 0, c)});
  return out;
}

}  // namespace qplyap
