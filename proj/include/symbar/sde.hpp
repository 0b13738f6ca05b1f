#pragma once

// Diffusions dX = sigma(X) dW + mu(X) dt, their symmetrization over a
// reflection group, and an Euler-Maruyama engine whose output does not depend
// on the number of worker threads.

#include "symbar/errors.hpp"
#include "symbar/group.hpp"
#include "symbar/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace symbar {

// Diffusion matrices cross the evaluator boundary as row-major d*d spans.
using DriftFn = std::function<void(std::span<const double> x, std::span<double> mu)>;
using DiffusionFn = std::function<void(std::span<const double> x, std::span<double> sigma)>;

struct Workspace {
  explicit Workspace(std::size_t d) : y(d), sigma(d * d), mu(d), frame(d * d) {}
  std::vector<double> y, sigma, mu, frame;
};

// Anything the engine can step.
class Dynamics {
 public:
  virtual ~Dynamics() = default;
  virtual std::size_t dimension() const = 0;
  // Writes sigma (row-major) and mu at x. Returns false on a gap hit: x lies
  // outside every enumerated chamber and base coefficients were used.
  virtual bool coefficients(std::span<const double> x, std::span<double> sigma,
                            std::span<double> mu, Workspace& ws) const = 0;
  // Coordinate advanced as an exact clock (x0 + n dt) rather than by Euler.
  virtual std::optional<std::size_t> clock_index() const { return std::nullopt; }
};

class DiffusionModel final : public Dynamics {
 public:
  DiffusionModel(std::size_t dimension, DriftFn drift, DiffusionFn diffusion, std::string label,
                 std::optional<std::size_t> clock = std::nullopt);

  std::size_t dimension() const override { return dimension_; }
  const std::string& label() const { return label_; }
  std::optional<std::size_t> clock_index() const override { return clock_; }

  void drift(std::span<const double> x, std::span<double> mu) const { drift_(x, mu); }
  void diffusion(std::span<const double> x, std::span<double> sigma) const { diffusion_(x, sigma); }
  Vector drift(const Vector& x) const;
  Matrix diffusion(const Vector& x) const;

  bool coefficients(std::span<const double> x, std::span<double> sigma, std::span<double> mu,
                    Workspace& ws) const override;

 private:
  std::size_t dimension_;
  DriftFn drift_;
  DiffusionFn diffusion_;
  std::string label_;
  std::optional<std::size_t> clock_;
};

// Which square root of sigma sigma^T is used off the fundamental chamber.
// minus: T_g sigma(g^-1 x); plus: T_g sigma(g^-1 x) T_g^T. Both give the
// same law; minus reproduces the explicit -sigma(2K - x) form.
enum class SignBranch { minus, plus };

// Orthogonal frame U_x applied on the right of the symmetrized sigma.
using FrameMap = std::function<void(std::span<const double> x, std::span<double> u)>;

struct Coefficients {
  Matrix sigma;
  Vector mu;
  bool covered = true;
};

class SymmetrizedModel final : public Dynamics {
 public:
  SymmetrizedModel(DiffusionModel base, ReflectionGroup group, SignBranch branch = SignBranch::minus);
  SymmetrizedModel(DiffusionModel base, ReflectionGroup group, FrameMap frame);

  std::size_t dimension() const override { return base_.dimension(); }
  std::optional<std::size_t> clock_index() const override { return base_.clock_index(); }
  const DiffusionModel& base() const { return base_; }
  const ReflectionGroup& group() const { return group_; }
  SignBranch branch() const { return branch_; }

  bool coefficients(std::span<const double> x, std::span<double> sigma, std::span<double> mu,
                    Workspace& ws) const override;

 private:
  DiffusionModel base_;
  ReflectionGroup group_;
  SignBranch branch_ = SignBranch::minus;
  FrameMap frame_;
};

// sigma~(x) = T_g sigma(g^-1 x) U_x, mu~(x) = T_g mu(g^-1 x) for the chamber
// g holding x. Outside every chamber the base coefficients are returned with
// covered = false.
Coefficients symmetrized_coefficients(const SymmetrizedModel& model, const Vector& x);

struct StructureProbe {
  Vector center;       // probes are drawn from center +- (|center| + 1)
  std::size_t points = 64;
  std::uint64_t seed = 0x51A7E5ULL;
};

// Symmetrizes a stochastic-volatility model in its first (asset) coordinate
// across x = barrier. The remaining coordinates must form an autonomous
// block; this is checked by perturbing the asset at probe points and throws
// StructureError if any volatility-row coefficient moves.
SymmetrizedModel symmetrize_sv(const DiffusionModel& base, double barrier, const StructureProbe& probe,
                               SignBranch branch = SignBranch::minus);

struct SimulationPlan {
  std::size_t paths = 1;
  std::size_t steps = 1;
  double horizon = 1.0;
  std::uint64_t seed = 0;
  bool record_terminal_only = true;
  // Unit normal draws summed into each Euler increment. A run with
  // (steps / m, refinement m) sees the same Brownian path as (steps, 1).
  std::size_t brownian_refinement = 1;
  unsigned workers = 1;

  void validate() const;
  double dt() const { return horizon / static_cast<double>(steps); }
};

struct PathStatus {
  bool excluded = false;    // a state or coefficient became non-finite
  bool stopped = false;     // the visitor ended the path early
  std::size_t gap_hits = 0;
};

struct RunStats {
  std::size_t excluded_paths = 0;
  std::size_t gap_hits = 0;
};

// Fraction of excluded paths above which a run is rejected.
inline constexpr double kMaxExcludedFraction = 1e-3;

// Drives every path of the plan through the Euler scheme
//   X_{n+1} = X_n + sigma(X_n) dW_n + mu(X_n) dt
// with path p drawing from RandomStream(seed, p). The visitor must tolerate
// concurrent calls for distinct paths:
//   bool begin(path, x0)
//   bool step(path, n, x_prev, x_next, sigma_prev, dt)   n = 1..steps
//   void finish(path, x_terminal, status)
// Returning false from begin/step stops the path; finish is always called.
template <class Visitor>
RunStats run_paths(const Dynamics& dynamics, const Vector& x0, const SimulationPlan& plan, Visitor& visitor) {
  plan.validate();
  const std::size_t d = dynamics.dimension();
  if (static_cast<std::size_t>(x0.size()) != d) throw DomainError("initial state has wrong dimension");
  if (!x0.allFinite()) throw DomainError("initial state must be finite");

  const double dt = plan.dt();
  const std::size_t refine = plan.brownian_refinement;
  const double draw_scale = std::sqrt(dt / static_cast<double>(refine));
  const auto clock = dynamics.clock_index();

  auto worker = [&](std::size_t first, std::size_t last, RunStats& stats) {
    Workspace ws(d);
    std::vector<double> x(d), next(d), sigma(d * d), mu(d), dw(d);
    for (std::size_t p = first; p < last; ++p) {
      std::copy(x0.data(), x0.data() + d, x.begin());
      PathStatus status;
      RandomStream rng(plan.seed, p);
      bool alive = visitor.begin(p, std::span<const double>(x));
      for (std::size_t n = 0; alive && n < plan.steps; ++n) {
        if (!dynamics.coefficients(x, sigma, mu, ws)) ++status.gap_hits;
        std::fill(dw.begin(), dw.end(), 0.0);
        for (std::size_t r = 0; r < refine; ++r) {
          for (std::size_t i = 0; i < d; ++i) dw[i] += rng.normal();
        }
        bool finite = true;
        for (std::size_t i = 0; i < d; ++i) {
          double v = x[i] + mu[i] * dt;
          for (std::size_t j = 0; j < d; ++j) v += sigma[i * d + j] * dw[j] * draw_scale;
          next[i] = v;
          finite = finite && std::isfinite(v);
        }
        if (clock) next[*clock] = x0[static_cast<Eigen::Index>(*clock)] + static_cast<double>(n + 1) * dt;
        if (!finite) {
          status.excluded = true;
          break;
        }
        alive = visitor.step(p, n + 1, std::span<const double>(x), std::span<const double>(next),
                             std::span<const double>(sigma), dt);
        x.swap(next);
      }
      status.stopped = !alive;
      stats.gap_hits += status.gap_hits;
      if (status.excluded) ++stats.excluded_paths;
      visitor.finish(p, std::span<const double>(x), status);
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(plan.workers, plan.paths));
  std::vector<RunStats> partial(workers);
  if (workers == 1) {
    worker(0, plan.paths, partial[0]);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> threads;
      for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t first = plan.paths * w / workers;
        const std::size_t last = plan.paths * (w + 1) / workers;
        threads.emplace_back([&, w, first, last] {
          try {
            worker(first, last, partial[w]);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  RunStats total;
  for (const auto& s : partial) {
    total.excluded_paths += s.excluded_paths;
    total.gap_hits += s.gap_hits;
  }
  if (static_cast<double>(total.excluded_paths) > kMaxExcludedFraction * static_cast<double>(plan.paths)) {
    throw NonFinitePath(std::to_string(total.excluded_paths) + " of " + std::to_string(plan.paths) +
                        " paths became non-finite");
  }
  return total;
}

using Observer = std::function<void(std::size_t path, std::size_t step, std::span<const double> state)>;

struct SimulationResult {
  Matrix terminal;                   // paths x d
  std::vector<unsigned char> excluded;
  // paths x ((steps + 1) * d), filled only when record_terminal_only is false
  Matrix trajectories;
  RunStats stats;
};

SimulationResult simulate(const Dynamics& dynamics, const Vector& x0, const SimulationPlan& plan,
                          const Observer& observer = {});

}  // namespace symbar
