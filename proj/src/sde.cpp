#include "symbar/sde.hpp"

#include <cmath>

namespace symbar {

namespace {

std::span<const double> as_span(const Vector& x) {
  return {x.data(), static_cast<std::size_t>(x.size())};
}

// out = T * in for an Eigen (column-major) T and row-major d x d in/out.
void left_multiply(const Matrix& t, std::span<const double> in, std::span<double> out, std::size_t d) {
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double v = 0.0;
      for (std::size_t k = 0; k < d; ++k) v += t(i, k) * in[k * d + j];
      out[i * d + j] = v;
    }
  }
}

// sigma <- sigma * U with U row-major; scratch must not alias sigma.
void right_multiply(std::span<double> sigma, std::span<const double> u, std::span<double> scratch,
                    std::size_t d) {
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double v = 0.0;
      for (std::size_t k = 0; k < d; ++k) v += sigma[i * d + k] * u[k * d + j];
      scratch[i * d + j] = v;
    }
  }
  std::copy(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(d * d), sigma.begin());
}

}  // namespace

DiffusionModel::DiffusionModel(std::size_t dimension, DriftFn drift, DiffusionFn diffusion,
                               std::string label, std::optional<std::size_t> clock)
    : dimension_(dimension),
      drift_(std::move(drift)),
      diffusion_(std::move(diffusion)),
      label_(std::move(label)),
      clock_(clock) {
  if (dimension_ == 0) throw DomainError("model dimension must be positive");
  if (!drift_ || !diffusion_) throw DomainError("model needs both drift and diffusion evaluators");
  if (clock_ && *clock_ >= dimension_) throw DomainError("clock index out of range");
}

Vector DiffusionModel::drift(const Vector& x) const {
  Vector mu(static_cast<Eigen::Index>(dimension_));
  drift_(as_span(x), {mu.data(), dimension_});
  return mu;
}

Matrix DiffusionModel::diffusion(const Vector& x) const {
  std::vector<double> s(dimension_ * dimension_);
  diffusion_(as_span(x), s);
  const auto d = static_cast<Eigen::Index>(dimension_);
  Matrix out(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) out(i, j) = s[static_cast<std::size_t>(i * d + j)];
  }
  return out;
}

bool DiffusionModel::coefficients(std::span<const double> x, std::span<double> sigma, std::span<double> mu,
                                  Workspace&) const {
  diffusion_(x, sigma);
  drift_(x, mu);
  return true;
}

SymmetrizedModel::SymmetrizedModel(DiffusionModel base, ReflectionGroup group, SignBranch branch)
    : base_(std::move(base)), group_(std::move(group)), branch_(branch) {
  if (base_.dimension() != group_.dimension()) throw DomainError("model and group dimensions differ");
}

SymmetrizedModel::SymmetrizedModel(DiffusionModel base, ReflectionGroup group, FrameMap frame)
    : base_(std::move(base)), group_(std::move(group)), frame_(std::move(frame)) {
  if (base_.dimension() != group_.dimension()) throw DomainError("model and group dimensions differ");
}

bool SymmetrizedModel::coefficients(std::span<const double> x, std::span<double> sigma, std::span<double> mu,
                                    Workspace& ws) const {
  const std::size_t d = dimension();
  const auto located = group_.locate_chamber(x);
  if (!located || *located == 0) {
    base_.diffusion(x, sigma);
    base_.drift(x, mu);
    if (frame_) {
      frame_(x, ws.frame);
      right_multiply(sigma, ws.frame, ws.sigma, d);
    }
    return located.has_value();
  }

  const GroupElement& g = group_[*located];
  const Matrix& t_inv = g.inverse.linear();
  const Vector& b_inv = g.inverse.translation();
  for (std::size_t i = 0; i < d; ++i) {
    double v = b_inv[static_cast<Eigen::Index>(i)];
    for (std::size_t k = 0; k < d; ++k) v += t_inv(i, k) * x[k];
    ws.y[i] = v;
  }
  base_.diffusion(ws.y, ws.sigma);
  base_.drift(ws.y, ws.mu);

  const Matrix& t = g.isometry.linear();
  left_multiply(t, ws.sigma, sigma, d);
  for (std::size_t i = 0; i < d; ++i) {
    double v = 0.0;
    for (std::size_t k = 0; k < d; ++k) v += t(i, k) * ws.mu[k];
    mu[i] = v;
  }

  if (frame_) {
    frame_(x, ws.frame);
    right_multiply(sigma, ws.frame, ws.sigma, d);
  } else if (branch_ == SignBranch::plus) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) ws.frame[i * d + j] = t(j, i);
    }
    right_multiply(sigma, ws.frame, ws.sigma, d);
  }
  return true;
}

Coefficients symmetrized_coefficients(const SymmetrizedModel& model, const Vector& x) {
  const std::size_t d = model.dimension();
  if (static_cast<std::size_t>(x.size()) != d) throw DomainError("point dimension does not match model");
  Workspace ws(d);
  std::vector<double> sigma(d * d), mu(d);
  Coefficients out;
  out.covered = model.coefficients(as_span(x), sigma, mu, ws);
  const auto n = static_cast<Eigen::Index>(d);
  out.sigma.resize(n, n);
  out.mu.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.mu[i] = mu[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < n; ++j) out.sigma(i, j) = sigma[static_cast<std::size_t>(i * n + j)];
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(out.mu[i]) || !out.sigma.row(i).allFinite()) {
      throw NonFinitePath("non-finite symmetrized coefficient at the queried point");
    }
  }
  return out;
}

SymmetrizedModel symmetrize_sv(const DiffusionModel& base, double barrier, const StructureProbe& probe,
                               SignBranch branch) {
  const std::size_t d = base.dimension();
  if (d < 2) throw StructureError("a stochastic-volatility model needs at least one volatility coordinate");
  if (static_cast<std::size_t>(probe.center.size()) != d) throw DomainError("probe center has wrong dimension");

  RandomStream rng(probe.seed, 0);
  Vector x(static_cast<Eigen::Index>(d));
  for (std::size_t p = 0; p < probe.points; ++p) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double half = std::abs(probe.center[i]) + 1.0;
      x[i] = probe.center[i] + half * (2.0 * rng.uniform() - 1.0);
    }
    Vector moved = x;
    moved[0] = probe.center[0] + (std::abs(probe.center[0]) + 1.0) * (2.0 * rng.uniform() - 1.0);
    const Vector mu_a = base.drift(x), mu_b = base.drift(moved);
    const Matrix s_a = base.diffusion(x), s_b = base.diffusion(moved);
    for (Eigen::Index i = 1; i < x.size(); ++i) {
      const double scale = 1.0 + mu_a.cwiseAbs().maxCoeff() + s_a.cwiseAbs().maxCoeff();
      const bool drift_same = std::abs(mu_a[i] - mu_b[i]) <= 1e-12 * scale;
      const bool row_same = (s_a.row(i) - s_b.row(i)).cwiseAbs().maxCoeff() <= 1e-12 * scale;
      if (!drift_same || !row_same) {
        throw StructureError("volatility coordinate " + std::to_string(i) + " of model '" + base.label() +
                             "' depends on the asset coordinate");
      }
    }
    // The asset row must not feed the independent volatility noise.
    for (Eigen::Index j = 1; j < x.size(); ++j) {
      if (s_a(0, j) != 0.0) {
        throw StructureError("asset row of model '" + base.label() + "' loads on volatility noise");
      }
    }
  }

  Vector normal = Vector::Zero(static_cast<Eigen::Index>(d));
  normal[0] = 1.0;
  Vector witness = probe.center;
  witness[0] = barrier + std::max(1.0, std::abs(barrier));
  HyperplaneFamily family({Hyperplane(normal, barrier)}, witness);
  return SymmetrizedModel(base, ReflectionGroup::generate(std::move(family)), branch);
}

void SimulationPlan::validate() const {
  if (paths < 1) throw DomainError("plan needs at least one path");
  if (steps < 1) throw DomainError("plan needs at least one step");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("plan horizon must be positive");
  if (brownian_refinement < 1) throw DomainError("brownian refinement must be at least 1");
}

namespace {

struct Recorder {
  const Observer* observer;
  SimulationResult* result;
  std::size_t d;
  bool record_paths;

  bool begin(std::size_t p, std::span<const double> x) {
    if (*observer) (*observer)(p, 0, x);
    if (record_paths) store(p, 0, x);
    return true;
  }
  bool step(std::size_t p, std::size_t n, std::span<const double>, std::span<const double> next,
            std::span<const double>, double) {
    if (*observer) (*observer)(p, n, next);
    if (record_paths) store(p, n, next);
    return true;
  }
  void finish(std::size_t p, std::span<const double> x, const PathStatus& status) {
    const auto row = static_cast<Eigen::Index>(p);
    for (std::size_t i = 0; i < d; ++i) result->terminal(row, static_cast<Eigen::Index>(i)) = x[i];
    result->excluded[p] = status.excluded ? 1 : 0;
  }
  void store(std::size_t p, std::size_t n, std::span<const double> x) {
    for (std::size_t i = 0; i < d; ++i) {
      result->trajectories(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(n * d + i)) = x[i];
    }
  }
};

}  // namespace

SimulationResult simulate(const Dynamics& dynamics, const Vector& x0, const SimulationPlan& plan,
                          const Observer& observer) {
  plan.validate();
  const std::size_t d = dynamics.dimension();
  SimulationResult result;
  result.terminal.resize(static_cast<Eigen::Index>(plan.paths), static_cast<Eigen::Index>(d));
  result.excluded.assign(plan.paths, 0);
  if (!plan.record_terminal_only) {
    result.trajectories = Matrix::Constant(static_cast<Eigen::Index>(plan.paths),
                                           static_cast<Eigen::Index>((plan.steps + 1) * d),
                                           std::numeric_limits<double>::quiet_NaN());
  }
  Recorder recorder{&observer, &result, d, !plan.record_terminal_only};
  result.stats = run_paths(dynamics, x0, plan, recorder);
  return result;
}

}  // namespace symbar
