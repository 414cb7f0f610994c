#pragma once

// Dense helpers for small Markov-chain matrices: stationary laws, primitivity
// tests and a Collatz-Wielandt bracketed power iteration for Perron roots.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "qosrate/errors.hpp"

namespace qosrate {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

/// Boolean reachability closure: true iff the directed graph with an edge
/// i -> j whenever `pattern(i, j) > 0` is strongly connected.
inline bool is_irreducible(const Matrix& pattern) {
  const Eigen::Index n = pattern.rows();
  if (n == 1) return true;
  Matrix reach = (pattern.array() > 0.0).cast<double>().matrix();
  reach.diagonal().setOnes();
  // (I + P)^(2^k) with 2^k >= n-1 is positive iff P is irreducible.
  for (Eigen::Index span = 1; span < n - 1; span *= 2) {
    reach = (reach * reach).unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
  }
  return (reach.array() > 0.0).all();
}

/// Primitive (irreducible and aperiodic) nonnegative pattern. Uses Wielandt's
/// bound: P is primitive iff P^((n-1)^2 + 1) > 0.
inline bool is_primitive(const Matrix& pattern) {
  const Eigen::Index n = pattern.rows();
  Matrix power = (pattern.array() > 0.0).cast<double>().matrix();
  if (n == 1) return power(0, 0) > 0.0;
  const long long bound = static_cast<long long>(n - 1) * (n - 1) + 1;
  for (long long e = 1; e < bound; e *= 2) {
    power = (power * power).unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
  }
  return (power.array() > 0.0).all();
}

/// Solves pi * M = 0, sum(pi) = 1 for M = J - I (discrete chains) or M = G
/// (generators). Throws NoUniqueStationary when the null space of M^T has
/// dimension other than one.
inline Vector stationary_left_null(const Matrix& m) {
  const Eigen::Index n = m.rows();
  if (n == 1) return Vector::Ones(1);

  const Matrix mt = m.transpose();
  Eigen::FullPivLU<Matrix> rank_probe(mt);
  const double scale = std::max(1.0, mt.cwiseAbs().maxCoeff());
  rank_probe.setThreshold(1e-11 * scale);
  if (rank_probe.rank() != n - 1) {
    throw Error(ErrorCode::no_unique_stationary,
                "eigenvalue-1 eigenspace has dimension " + std::to_string(n - rank_probe.rank()));
  }

  // Replace the last balance equation with the normalisation row.
  Matrix system = mt;
  system.row(n - 1).setOnes();
  Vector rhs = Vector::Zero(n);
  rhs(n - 1) = 1.0;
  Vector pi = system.partialPivLu().solve(rhs);

  for (Eigen::Index i = 0; i < n; ++i) pi(i) = std::max(pi(i), 0.0);
  pi /= pi.sum();
  return pi;
}

struct PerronOptions {
  double rel_tol = 1e-13;
  long max_iterations = 100000;
};

struct PerronBracket {
  double lower = 0.0;
  double upper = 0.0;
  long iterations = 0;
  Vector vector;

  double value() const { return 0.5 * (lower + upper); }
};

/// Power iteration x <- B x / max(B x) on a nonnegative primitive B. After each
/// step, `ratios(x, out)` must write per-row estimates whose min and max
/// bracket the quantity of interest (the Collatz-Wielandt bounds of B, possibly
/// rewritten in a cancellation-free form and shifted). Iteration stops once the
/// bracket width is below `rel_tol * max(|mid|, floor)`.
template <class Apply, class Ratios>
PerronBracket perron_iterate(Eigen::Index n, Apply&& apply, Ratios&& ratios, double floor,
                             const PerronOptions& options = {}) {
  Vector x = Vector::Ones(n);
  Vector next(n);
  Vector r(n);
  PerronBracket best;
  double best_gap = std::numeric_limits<double>::infinity();
  long best_iter = 0;

  for (long it = 0; it < options.max_iterations; ++it) {
    ratios(x, r);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (x(i) <= 0.0 || !std::isfinite(r(i))) continue;
      lo = std::min(lo, r(i));
      hi = std::max(hi, r(i));
    }
    if (!(lo <= hi)) throw Error(ErrorCode::non_convergence, "power iteration lost positivity");

    const double gap = hi - lo;
    const double scale = std::max(std::abs(0.5 * (lo + hi)), floor);
    if (gap < best_gap) {
      best_gap = gap;
      best_iter = it;
      best.lower = lo;
      best.upper = hi;
      best.iterations = it;
      best.vector = x;
    }
    if (gap <= options.rel_tol * scale) return best;
    // Round-off floor: the bracket stopped shrinking but is already tight.
    if (it - best_iter > 2000 && best_gap <= 1e3 * options.rel_tol * scale) return best;

    apply(x, next);
    const double norm = next.maxCoeff();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw Error(ErrorCode::non_convergence, "power iteration degenerated");
    }
    x = next / norm;
  }
  throw Error(ErrorCode::non_convergence,
              "power iteration did not converge in " + std::to_string(options.max_iterations) +
                  " iterations (bracket width " + std::to_string(best_gap) + ")");
}

/// Perron root of a nonnegative primitive matrix.
inline PerronBracket perron_root(const Matrix& b, const PerronOptions& options = {}) {
  return perron_iterate(
      b.rows(), [&](const Vector& x, Vector& out) { out.noalias() = b * x; },
      [&](const Vector& x, Vector& out) { out = (b * x).cwiseQuotient(x); }, 0.0, options);
}

}  // namespace linalg
}  // namespace qosrate
