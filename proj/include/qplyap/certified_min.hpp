#pragma once

// Branch-and-bound minimization of a Lipschitz function on the circle [0, 1).
// A cell with center c and half-width h certifies f >= f(c) - L h on the
// whole cell; cells whose bound is too weak are trisected (the middle child
// keeps the parent's center, so each split costs two evaluations).

#include <cstddef>
#include <limits>
#include <optional>
#include <queue>
#include <vector>

namespace qplyap {

struct CertifiedMin {
  double lower = 0.0;        // certified: f(x) >= lower for all x
  double best = 0.0;         // smallest sampled value (an upper bound on min f)
  double argmin = 0.0;
  double finest_step = 1.0;  // width of the smallest cell used
  std::size_t evals = 0;
  bool converged = false;    // stopping rule met before the evaluation budget ran out
};

struct MinSearchOptions {
  double rel_tol = 0.01;             // stop once lower >= (1 - rel_tol) best
  std::size_t initial_cells = 256;
  std::size_t max_evals = std::size_t{1} << 20;
  std::optional<double> threshold;   // also stop once lower >= threshold or best < threshold
};

template <class F>
CertifiedMin certified_periodic_min(F&& f, double lipschitz, const MinSearchOptions& opt = {}) {
  struct Cell {
    double center, half, value, bound;
    bool operator>(const Cell& o) const { return bound > o.bound; }
  };
  std::priority_queue<Cell, std::vector<Cell>, std::greater<>> heap;
  CertifiedMin r;
  r.best = std::numeric_limits<double>::infinity();
  double finest_half = 0.5 / static_cast<double>(opt.initial_cells);

  auto visit = [&](double c, double h, double v) {
    if (v < r.best) {
      r.best = v;
      r.argmin = c;
    }
    heap.push({c, h, v, v - lipschitz * h});
  };
  for (std::size_t i = 0; i < opt.initial_cells; ++i) {
    const double c = (static_cast<double>(i) + 0.5) / static_cast<double>(opt.initial_cells);
    visit(c, finest_half, f(c));
    ++r.evals;
  }

  while (true) {
    const Cell top = heap.top();
    r.lower = top.bound;
    if (top.bound >= (1.0 - opt.rel_tol) * r.best) {
      r.converged = true;
      break;
    }
    if (opt.threshold && (top.bound >= *opt.threshold || r.best < *opt.threshold)) {
      r.converged = true;
      break;
    }
    if (r.evals + 2 > opt.max_evals) break;
    heap.pop();
    const double h = top.half / 3.0;
    finest_half = std::min(finest_half, h);
    const double left = top.center - 2.0 * h, right = top.center + 2.0 * h;
    visit(left, h, f(left));
    visit(top.center, h, top.value);
    visit(right, h, f(right));
    r.evals += 2;
  }
  r.finest_step = 2.0 * finest_half;
  return r;
}

}  // namespace qplyap
