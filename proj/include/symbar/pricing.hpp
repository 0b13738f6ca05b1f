#pragma once

// Monte Carlo estimators for knock-out expectations E[f(X_t) 1{tau > t}].
//
// The symmetrized estimator simulates the symmetrized diffusion once and
// folds each terminal state into the fundamental chamber with the sign of
// the chamber's character. The oracle estimator simulates the original
// diffusion and kills paths that leave the chamber. All estimators return
// undiscounted expectations.

#include "symbar/group.hpp"
#include "symbar/sde.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>

namespace symbar {

inline constexpr double kDefaultPayoffCap = 1e6;

using PayoffFn = std::function<double(std::span<const double> x)>;

struct PayoffDiagnostics {
  std::size_t support_violations = 0;  // nonzero f outside the declared support
  std::size_t cap_hits = 0;            // |f| exceeded the bound and was clipped
};

// A payoff with declared support. Evaluation returns 0 outside the closed
// support chamber and clips to [-bound, bound].
class Payoff {
 public:
  Payoff(PayoffFn f, HyperplaneFamily support, double bound = kDefaultPayoffCap);

  const HyperplaneFamily& support() const { return support_; }
  double bound() const { return bound_; }

  double operator()(std::span<const double> x, PayoffDiagnostics& diagnostics) const;
  double operator()(const Vector& x) const;

 private:
  PayoffFn f_;
  HyperplaneFamily support_;
  double bound_;
};

namespace payoffs {
// All act on coordinate 0 (the asset).
PayoffFn call(double strike);
PayoffFn put(double strike);
PayoffFn digital(double strike);  // 1{x > strike}
PayoffFn indicator();             // 1
PayoffFn zero();
}  // namespace payoffs

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t paths = 0;  // paths that entered the average
  std::size_t gap_hits = 0;
  std::size_t excluded_paths = 0;
  std::size_t support_violations = 0;
  std::size_t cap_hits = 0;
  std::size_t steps = 0;
  std::uint64_t seed = 0;

  bool trusted() const { return gap_hits == 0; }
};

// Mean and standard error (sample standard deviation / sqrt(n)) of the
// non-excluded values, accumulated in index order.
Estimate summarize(std::span<const double> values, std::span<const unsigned char> excluded);

// E[f(X_t)].
Estimate price_plain(const Dynamics& model, const Vector& x0, const PayoffFn& f, const SimulationPlan& plan);

// sum_g eta(g) E[f(g^-1 X~_t)] with X~ the symmetrized diffusion. x0 must be
// strictly inside the chamber (DomainError otherwise).
Estimate price_barrier_symmetrized(const SymmetrizedModel& model, const Vector& x0, const Payoff& payoff,
                                   const SimulationPlan& plan);
Estimate price_barrier_symmetrized(const DiffusionModel& base, const ReflectionGroup& group, const Vector& x0,
                                   const Payoff& payoff, const SimulationPlan& plan,
                                   SignBranch branch = SignBranch::minus);

enum class Monitoring { discrete, bridge };
enum class OraclePart { survived, knocked_out };

// Knock-out walls for the path-dependent oracle. distance(j, t, x) is the
// signed Euclidean distance to wall j at time t (positive inside) and
// normal(j, t, n) writes the wall's inward unit normal.
struct KillWalls {
  std::size_t count = 0;
  std::function<double(std::size_t j, double t, std::span<const double> x)> distance;
  std::function<void(std::size_t j, double t, std::span<double> normal)> normal;
};

KillWalls static_walls(const HyperplaneFamily& family);

// Path-dependent reference. Paths are killed at the first grid time outside
// the chamber; in bridge mode each step additionally survives wall j with
// probability 1 - exp(-2 d_n d_{n+1} / (a dt)), a = n^T sigma sigma^T n at
// X_n, applied as a weight. knocked_out estimates E[f(X_t) 1{tau <= t}].
Estimate price_barrier_oracle(const Dynamics& base, const HyperplaneFamily& family, const Vector& x0,
                              const PayoffFn& f, const SimulationPlan& plan, Monitoring monitoring,
                              OraclePart part = OraclePart::survived);
Estimate price_barrier_oracle(const Dynamics& base, const KillWalls& walls, const Vector& x0,
                              const PayoffFn& f, const SimulationPlan& plan, Monitoring monitoring,
                              OraclePart part = OraclePart::survived);

// Knock-out outside (lower, lower + width) in the asset coordinate, priced
// through the affine group of the two walls truncated to words of length at
// most 2 * truncation + 1 (translates |n| <= truncation).
Estimate price_double_barrier(const DiffusionModel& base, double lower, double width, const Vector& x0,
                              const PayoffFn& f, const SimulationPlan& plan, std::size_t truncation,
                              double cap = kDefaultPayoffCap);

// Family {x_0 > lower, x_0 < lower + width} in dimension d with the given
// witness.
HyperplaneFamily double_barrier_family(std::size_t dimension, double lower, double width, const Vector& witness);
// Family {x_0 > barrier}.
HyperplaneFamily single_barrier_family(std::size_t dimension, double barrier, const Vector& witness);

// Black-Scholes present values.
double black_scholes_call(double s0, double strike, double sigma, double r, double t);
// Continuously monitored down-and-out call, barrier <= strike.
double closed_form_dao_call(double s0, double strike, double barrier, double sigma, double r, double t);

// P(min_{s<=t} x0 + sigma W_s > barrier).
double survival_probability_bm(double x0, double barrier, double sigma, double t);

}  // namespace symbar
