#include "symbar/pricing.hpp"

#include "symbar/rng.hpp"

#include <cmath>
#include <string>

namespace symbar {

namespace {

std::span<const double> as_span(const Vector& x) {
  return {x.data(), static_cast<std::size_t>(x.size())};
}

enum : unsigned char { kExcluded = 1, kViolation = 2, kCapped = 4 };

Estimate collect(std::span<const double> values, std::span<const unsigned char> flags, const RunStats& stats,
                 const SimulationPlan& plan, std::size_t fold_gaps) {
  std::vector<unsigned char> excluded(flags.size());
  Estimate est;
  for (std::size_t p = 0; p < flags.size(); ++p) {
    excluded[p] = flags[p] & kExcluded;
    if (!excluded[p]) {
      est.support_violations += (flags[p] & kViolation) ? 1 : 0;
      est.cap_hits += (flags[p] & kCapped) ? 1 : 0;
    }
  }
  const Estimate moments = summarize(values, excluded);
  est.mean = moments.mean;
  est.std_error = moments.std_error;
  est.paths = moments.paths;
  est.excluded_paths = stats.excluded_paths;
  est.gap_hits = stats.gap_hits + fold_gaps;
  est.steps = plan.steps;
  est.seed = plan.seed;
  return est;
}

struct PlainKernel {
  const PayoffFn* f;
  std::vector<double> values;
  std::vector<unsigned char> flags;

  bool begin(std::size_t, std::span<const double>) { return true; }
  bool step(std::size_t, std::size_t, std::span<const double>, std::span<const double>, std::span<const double>,
            double) {
    return true;
  }
  void finish(std::size_t p, std::span<const double> x, const PathStatus& status) {
    if (status.excluded) {
      flags[p] = kExcluded;
      return;
    }
    values[p] = (*f)(x);
  }
};

struct FoldKernel {
  const ReflectionGroup* group;
  const Payoff* payoff;
  std::vector<double> values;
  std::vector<unsigned char> flags;
  std::vector<unsigned char> uncovered;

  bool begin(std::size_t, std::span<const double>) { return true; }
  bool step(std::size_t, std::size_t, std::span<const double>, std::span<const double>, std::span<const double>,
            double) {
    return true;
  }
  void finish(std::size_t p, std::span<const double> x, const PathStatus& status) {
    if (status.excluded) {
      flags[p] = kExcluded;
      return;
    }
    const auto e = group->locate_chamber(x);
    if (!e) {
      uncovered[p] = 1;
      values[p] = 0.0;
      return;
    }
    PayoffDiagnostics diag;
    double v;
    if (*e == 0) {
      v = (*payoff)(x, diag);
    } else {
      const GroupElement& g = (*group)[*e];
      const std::size_t d = x.size();
      thread_local std::vector<double> y;
      y.resize(d);
      for (std::size_t i = 0; i < d; ++i) {
        double s = g.inverse.translation()[static_cast<Eigen::Index>(i)];
        for (std::size_t k = 0; k < d; ++k) s += g.inverse.linear()(i, k) * x[k];
        y[i] = s;
      }
      v = g.eta * (*payoff)(y, diag);
    }
    values[p] = v;
    flags[p] = static_cast<unsigned char>((diag.support_violations ? kViolation : 0) | (diag.cap_hits ? kCapped : 0));
  }
};

struct OracleKernel {
  const KillWalls* walls;
  const PayoffFn* f;
  Monitoring monitoring;
  OraclePart part;
  std::size_t dimension;
  double dt;
  std::vector<double> values;
  std::vector<double> weights;
  std::vector<unsigned char> flags;

  bool inside(double t, std::span<const double> x) const {
    for (std::size_t j = 0; j < walls->count; ++j) {
      if (!(walls->distance(j, t, x) > 0.0)) return false;
    }
    return true;
  }

  bool begin(std::size_t p, std::span<const double> x) {
    weights[p] = inside(0.0, x) ? 1.0 : 0.0;
    return weights[p] > 0.0 || part == OraclePart::knocked_out;
  }

  bool step(std::size_t p, std::size_t n, std::span<const double> prev, std::span<const double> next,
            std::span<const double> sigma, double) {
    double& w = weights[p];
    if (w == 0.0) return part == OraclePart::knocked_out;
    const double t0 = static_cast<double>(n - 1) * dt;
    const double t1 = static_cast<double>(n) * dt;
    if (!inside(t1, next)) {
      w = 0.0;
      return part == OraclePart::knocked_out;
    }
    if (monitoring == Monitoring::bridge) {
      thread_local std::vector<double> normal;
      normal.resize(dimension);
      for (std::size_t j = 0; j < walls->count; ++j) {
        walls->normal(j, t0, normal);
        double a = 0.0;
        for (std::size_t col = 0; col < dimension; ++col) {
          double s = 0.0;
          for (std::size_t row = 0; row < dimension; ++row) s += normal[row] * sigma[row * dimension + col];
          a += s * s;
        }
        if (a <= 0.0) continue;
        const double d0 = walls->distance(j, t0, prev);
        const double d1 = walls->distance(j, t1, next);
        w *= 1.0 - std::exp(-2.0 * d0 * d1 / (a * dt));
      }
    }
    return true;
  }

  void finish(std::size_t p, std::span<const double> x, const PathStatus& status) {
    if (status.excluded) {
      flags[p] = kExcluded;
      return;
    }
    const double w = part == OraclePart::survived ? weights[p] : 1.0 - weights[p];
    values[p] = w == 0.0 ? 0.0 : w * (*f)(x);
  }
};

}  // namespace

Payoff::Payoff(PayoffFn f, HyperplaneFamily support, double bound)
    : f_(std::move(f)), support_(std::move(support)), bound_(bound) {
  if (!f_) throw DomainError("payoff function is empty");
  if (!(bound_ > 0.0)) throw DomainError("payoff bound must be positive");
}

double Payoff::operator()(std::span<const double> x, PayoffDiagnostics& diagnostics) const {
  double norm2 = 0.0;
  for (double v : x) norm2 += v * v;
  const double tol = 1e-12 * (1.0 + std::sqrt(norm2));
  bool inside = true;
  for (const auto& h : support_.hyperplanes()) {
    double level = -h.offset();
    for (std::size_t i = 0; i < x.size(); ++i) level += h.normal()[static_cast<Eigen::Index>(i)] * x[i];
    if (level < -tol) {
      inside = false;
      break;
    }
  }
  const double v = f_(x);
  if (!inside) {
    if (v != 0.0) ++diagnostics.support_violations;
    return 0.0;
  }
  if (std::abs(v) > bound_) {
    ++diagnostics.cap_hits;
    return std::copysign(bound_, v);
  }
  return v;
}

double Payoff::operator()(const Vector& x) const {
  PayoffDiagnostics ignored;
  return (*this)(as_span(x), ignored);
}

namespace payoffs {
PayoffFn call(double strike) {
  return [strike](std::span<const double> x) { return std::max(x[0] - strike, 0.0); };
}
PayoffFn put(double strike) {
  return [strike](std::span<const double> x) { return std::max(strike - x[0], 0.0); };
}
PayoffFn digital(double strike) {
  return [strike](std::span<const double> x) { return x[0] > strike ? 1.0 : 0.0; };
}
PayoffFn indicator() {
  return [](std::span<const double>) { return 1.0; };
}
PayoffFn zero() {
  return [](std::span<const double>) { return 0.0; };
}
}  // namespace payoffs

Estimate summarize(std::span<const double> values, std::span<const unsigned char> excluded) {
  Estimate est;
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (excluded.empty() || !excluded[i]) {
      sum += values[i];
      ++est.paths;
    }
  }
  if (est.paths == 0) return est;
  est.mean = sum / static_cast<double>(est.paths);
  if (est.paths < 2) return est;
  double ss = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (excluded.empty() || !excluded[i]) {
      const double dv = values[i] - est.mean;
      ss += dv * dv;
    }
  }
  const double n = static_cast<double>(est.paths);
  est.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return est;
}

Estimate price_plain(const Dynamics& model, const Vector& x0, const PayoffFn& f, const SimulationPlan& plan) {
  plan.validate();
  PlainKernel kernel{&f, std::vector<double>(plan.paths, 0.0), std::vector<unsigned char>(plan.paths, 0)};
  const RunStats stats = run_paths(model, x0, plan, kernel);
  return collect(kernel.values, kernel.flags, stats, plan, 0);
}

Estimate price_barrier_symmetrized(const SymmetrizedModel& model, const Vector& x0, const Payoff& payoff,
                                   const SimulationPlan& plan) {
  plan.validate();
  const ReflectionGroup& group = model.group();
  if (static_cast<std::size_t>(x0.size()) != group.dimension()) throw DomainError("initial state has wrong dimension");
  if (!group.family().strictly_contains(x0)) {
    throw DomainError("initial state must lie strictly inside the knock-out chamber");
  }
  if (payoff.support().dimension() != group.dimension() ||
      !group.family().contains(payoff.support().witness(), 0.0)) {
    throw DomainError("payoff support is not inside the knock-out chamber");
  }
  FoldKernel kernel{&group, &payoff, std::vector<double>(plan.paths, 0.0),
                    std::vector<unsigned char>(plan.paths, 0), std::vector<unsigned char>(plan.paths, 0)};
  const RunStats stats = run_paths(model, x0, plan, kernel);
  std::size_t fold_gaps = 0;
  for (unsigned char u : kernel.uncovered) fold_gaps += u;
  return collect(kernel.values, kernel.flags, stats, plan, fold_gaps);
}

Estimate price_barrier_symmetrized(const DiffusionModel& base, const ReflectionGroup& group, const Vector& x0,
                                   const Payoff& payoff, const SimulationPlan& plan, SignBranch branch) {
  return price_barrier_symmetrized(SymmetrizedModel(base, group, branch), x0, payoff, plan);
}

KillWalls static_walls(const HyperplaneFamily& family) {
  KillWalls walls;
  walls.count = family.size();
  walls.distance = [&family](std::size_t j, double, std::span<const double> x) {
    const Hyperplane& h = family[j];
    double level = -h.offset();
    for (std::size_t i = 0; i < x.size(); ++i) level += h.normal()[static_cast<Eigen::Index>(i)] * x[i];
    return level / std::sqrt(h.normal_norm2());
  };
  walls.normal = [&family](std::size_t j, double, std::span<double> n) {
    const Hyperplane& h = family[j];
    const double norm = std::sqrt(h.normal_norm2());
    for (std::size_t i = 0; i < n.size(); ++i) n[i] = h.normal()[static_cast<Eigen::Index>(i)] / norm;
  };
  return walls;
}

Estimate price_barrier_oracle(const Dynamics& base, const KillWalls& walls, const Vector& x0, const PayoffFn& f,
                              const SimulationPlan& plan, Monitoring monitoring, OraclePart part) {
  plan.validate();
  OracleKernel kernel{&walls,
                      &f,
                      monitoring,
                      part,
                      base.dimension(),
                      plan.dt(),
                      std::vector<double>(plan.paths, 0.0),
                      std::vector<double>(plan.paths, 0.0),
                      std::vector<unsigned char>(plan.paths, 0)};
  const RunStats stats = run_paths(base, x0, plan, kernel);
  return collect(kernel.values, kernel.flags, stats, plan, 0);
}

Estimate price_barrier_oracle(const Dynamics& base, const HyperplaneFamily& family, const Vector& x0,
                              const PayoffFn& f, const SimulationPlan& plan, Monitoring monitoring,
                              OraclePart part) {
  if (family.dimension() != base.dimension()) throw DomainError("family and model dimensions differ");
  const KillWalls walls = static_walls(family);
  return price_barrier_oracle(base, walls, x0, f, plan, monitoring, part);
}

HyperplaneFamily single_barrier_family(std::size_t dimension, double barrier, const Vector& witness) {
  Vector normal = Vector::Zero(static_cast<Eigen::Index>(dimension));
  normal[0] = 1.0;
  return HyperplaneFamily({Hyperplane(normal, barrier)}, witness);
}

HyperplaneFamily double_barrier_family(std::size_t dimension, double lower, double width, const Vector& witness) {
  if (!(width > 0.0)) throw DomainError("double barrier width must be positive");
  Vector up = Vector::Zero(static_cast<Eigen::Index>(dimension));
  up[0] = 1.0;
  return HyperplaneFamily({Hyperplane(up, lower), Hyperplane(-up, -(lower + width))}, witness);
}

Estimate price_double_barrier(const DiffusionModel& base, double lower, double width, const Vector& x0,
                              const PayoffFn& f, const SimulationPlan& plan, std::size_t truncation, double cap) {
  if (!(x0[0] > lower && x0[0] < lower + width)) throw DomainError("initial asset value must lie between the barriers");
  HyperplaneFamily family = double_barrier_family(base.dimension(), lower, width, x0);
  GenerateOptions options;
  options.cap = 4 * truncation + 3;
  ReflectionGroup group = ReflectionGroup::generate(family, options);
  Payoff payoff(f, family, cap);
  return price_barrier_symmetrized(SymmetrizedModel(base, std::move(group)), x0, payoff, plan);
}

double black_scholes_call(double s0, double strike, double sigma, double r, double t) {
  if (!(s0 > 0.0 && strike > 0.0 && sigma > 0.0 && t > 0.0)) throw DomainError("Black-Scholes inputs out of domain");
  const double vol = sigma * std::sqrt(t);
  const double d1 = (std::log(s0 / strike) + (r + 0.5 * sigma * sigma) * t) / vol;
  return s0 * normal_cdf(d1) - strike * std::exp(-r * t) * normal_cdf(d1 - vol);
}

double closed_form_dao_call(double s0, double strike, double barrier, double sigma, double r, double t) {
  if (!(sigma > 0.0 && t > 0.0)) throw DomainError("down-and-out call needs sigma > 0 and t > 0");
  if (!(barrier > 0.0 && barrier <= s0 && barrier <= strike)) {
    throw DomainError("down-and-out call needs 0 < barrier <= min(spot, strike)");
  }
  if (s0 == barrier) return 0.0;
  const double vol = sigma * std::sqrt(t);
  const double lambda = (r + 0.5 * sigma * sigma) / (sigma * sigma);
  const double ratio = barrier / s0;
  const double y = std::log(barrier * barrier / (s0 * strike)) / vol + lambda * vol;
  const double knock_in = s0 * std::pow(ratio, 2.0 * lambda) * normal_cdf(y) -
                          strike * std::exp(-r * t) * std::pow(ratio, 2.0 * lambda - 2.0) * normal_cdf(y - vol);
  return std::max(black_scholes_call(s0, strike, sigma, r, t) - knock_in, 0.0);
}

double survival_probability_bm(double x0, double barrier, double sigma, double t) {
  if (!(x0 > barrier && sigma > 0.0 && t >= 0.0))
    throw DomainError("survival probability needs x0 > barrier, sigma > 0");
  if (t == 0.0) return 1.0;
  return 1.0 - 2.0 * normal_cdf(-(x0 - barrier) / (sigma * std::sqrt(t)));
}

}  // namespace symbar
