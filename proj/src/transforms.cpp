#include "symbar/transforms.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <cmath>

namespace symbar {

namespace {

Matrix from_row_major(std::span<const double> s, std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = s[static_cast<std::size_t>(i * n + j)];
  }
  return m;
}

void to_row_major(const Matrix& m, std::span<double> out) {
  const auto n = m.cols();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < n; ++j) out[static_cast<std::size_t>(i * n + j)] = m(i, j);
  }
}

// A'(t) A(t)^-1 after checking the frame's conditioning.
Matrix frame_velocity(const BoundaryMotion& motion, double t) {
  const Matrix a = motion.frame(t);
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& sv = svd.singularValues();
  const double smin = sv[sv.size() - 1];
  if (!(smin > 0.0) || sv[0] / smin >= kMaxFrameCondition) {
    throw SingularBoundary("boundary frame A(t) is ill-conditioned at t = " + std::to_string(t));
  }
  return motion.frame_rate(t) * a.inverse();
}

void hermite(double s, double h, const Matrix& y0, const Matrix& dy0, const Matrix& y1, const Matrix& dy1,
             Matrix& out) {
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
  out = h00 * y0 + (h10 * h) * dy0 + h01 * y1 + (h11 * h) * dy1;
}

}  // namespace

TimeDependentModel time_independent(const DiffusionModel& base) {
  TimeDependentModel out;
  out.dimension = base.dimension();
  out.drift = [base](std::span<const double> x, double, std::span<double> mu) { base.drift(x, mu); };
  out.diffusion = [base](std::span<const double> x, double, std::span<double> s) { base.diffusion(x, s); };
  out.label = base.label();
  return out;
}

DiffusionModel augment_time(const TimeDependentModel& base) {
  if (base.dimension == 0 || !base.drift || !base.diffusion) throw DomainError("incomplete time-dependent model");
  const std::size_t d = base.dimension;
  auto drift = [base, d](std::span<const double> x, std::span<double> mu) {
    base.drift(x.first(d), x[d], mu.first(d));
    mu[d] = 1.0;
  };
  auto diffusion = [base, d](std::span<const double> x, std::span<double> s) {
    thread_local std::vector<double> inner;
    inner.resize(d * d);
    base.diffusion(x.first(d), x[d], inner);
    std::fill(s.begin(), s.end(), 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) s[i * (d + 1) + j] = inner[i * d + j];
    }
  };
  return DiffusionModel(d + 1, drift, diffusion, base.label + "+clock", d);
}

HyperplaneFamily embed_family(const HyperplaneFamily& family, std::size_t extra, double fill) {
  const auto d = static_cast<Eigen::Index>(family.dimension());
  const auto n = d + static_cast<Eigen::Index>(extra);
  std::vector<Hyperplane> planes;
  for (const auto& h : family.hyperplanes()) {
    Vector a = Vector::Zero(n);
    a.head(d) = h.normal();
    planes.emplace_back(std::move(a), h.offset());
  }
  Vector w = Vector::Constant(n, fill);
  w.head(d) = family.witness();
  return HyperplaneFamily(std::move(planes), std::move(w));
}

StraighteningMap::StraighteningMap(BoundaryMotion motion, double horizon, double step, Matrix initial)
    : motion_(std::move(motion)), horizon_(horizon), initial_(std::move(initial)) {
  if (!motion_.frame || !motion_.frame_rate) throw DomainError("boundary motion needs A(t) and A'(t)");
  if (!(horizon_ > 0.0)) throw DomainError("straightening horizon must be positive");
  if (!(step > 0.0)) throw DomainError("straightening step must be positive");
  const Matrix a0 = motion_.frame(0.0);
  if (a0.rows() != a0.cols()) throw DomainError("boundary frame must be square");
  if (motion_.offsets.size() != a0.cols()) throw DomainError("one offset per boundary normal is required");
  if (initial_.size() == 0) initial_ = Matrix::Identity(a0.rows(), a0.cols());
  if (initial_.rows() != a0.rows() || initial_.cols() != a0.cols()) throw DomainError("C(0) has wrong shape");

  const auto nodes = static_cast<std::size_t>(std::ceil(horizon_ / step - 1e-9));
  step_ = horizon_ / static_cast<double>(std::max<std::size_t>(nodes, 1));
  const std::size_t n = std::max<std::size_t>(nodes, 1);

  auto rhs = [this](double t, const Matrix& c) -> Matrix { return -c * frame_velocity(motion_, t); };
  auto record = [this](double t, const Matrix& c) {
    const Matrix v = frame_velocity(motion_, t);
    const Matrix m = c.transpose().partialPivLu().inverse();
    c_.push_back(c);
    c_rate_.push_back(-c * v);
    m_.push_back(m);
    m_rate_.push_back(m * v.transpose());
  };

  Matrix c = initial_;
  record(0.0, c);
  const double h = step_;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * h;
    const Matrix k1 = rhs(t, c);
    const Matrix k2 = rhs(t + 0.5 * h, c + (0.5 * h) * k1);
    const Matrix k3 = rhs(t + 0.5 * h, c + (0.5 * h) * k2);
    const Matrix k4 = rhs(t + h, c + h * k3);
    c += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    record(static_cast<double>(i + 1) * h, c);
  }
}

std::size_t StraighteningMap::segment(double t, double& s) const {
  const double slack = 1e-9 * horizon_;
  if (t < -slack || t > horizon_ + slack) {
    throw DomainError("time " + std::to_string(t) + " outside the straightened horizon");
  }
  const std::size_t last = c_.size() - 2;
  const double u = std::clamp(t, 0.0, horizon_) / step_;
  const auto i = std::min(static_cast<std::size_t>(u), last);
  s = u - static_cast<double>(i);
  return i;
}

Matrix StraighteningMap::c(double t) const {
  double s;
  const std::size_t i = segment(t, s);
  Matrix out;
  hermite(s, step_, c_[i], c_rate_[i], c_[i + 1], c_rate_[i + 1], out);
  return out;
}

Matrix StraighteningMap::straighten(double t) const {
  double s;
  const std::size_t i = segment(t, s);
  Matrix out;
  hermite(s, step_, m_[i], m_rate_[i], m_[i + 1], m_rate_[i + 1], out);
  return out;
}

Matrix StraighteningMap::straighten_rate(double t) const {
  const Matrix v = frame_velocity(motion_, std::clamp(t, 0.0, horizon_));
  return straighten(t) * v.transpose() * c(t).transpose();
}

std::shared_ptr<const StraighteningMap> straighten_boundary(const BoundaryMotion& motion, double horizon,
                                                            double step, Matrix initial) {
  if (step <= 0.0) step = horizon / 1024.0;
  return std::make_shared<const StraighteningMap>(motion, horizon, step, std::move(initial));
}

MovingBoundaryProblem moving_boundary_model(const TimeDependentModel& base, const BoundaryMotion& motion,
                                            double horizon, const Vector& witness, double step, Matrix initial) {
  auto map = straighten_boundary(motion, horizon, step, std::move(initial));
  const std::size_t d = map->dimension();
  if (base.dimension != d) throw DomainError("model and boundary frame dimensions differ");
  if (static_cast<std::size_t>(witness.size()) != d) throw DomainError("witness has wrong dimension");

  TimeDependentModel straightened;
  straightened.dimension = d;
  straightened.label = base.label + "+straightened";
  straightened.drift = [base, map, d](std::span<const double> y, double t, std::span<double> mu) {
    const Matrix m = map->straighten(t);
    const Matrix m_inv = map->c(t).transpose();
    const Eigen::Map<const Vector> yv(y.data(), static_cast<Eigen::Index>(d));
    const Vector x = m_inv * yv;
    Vector mu_x(static_cast<Eigen::Index>(d));
    base.drift({x.data(), d}, t, {mu_x.data(), d});
    const Vector out = map->straighten_rate(t) * yv + m * mu_x;
    std::copy(out.data(), out.data() + d, mu.begin());
  };
  straightened.diffusion = [base, map, d](std::span<const double> y, double t, std::span<double> s) {
    const Matrix m = map->straighten(t);
    const Eigen::Map<const Vector> yv(y.data(), static_cast<Eigen::Index>(d));
    const Vector x = map->c(t).transpose() * yv;
    std::vector<double> sx(d * d);
    base.diffusion({x.data(), d}, t, sx);
    to_row_major(m * from_row_major(sx, d), s);
  };

  const Matrix normals = map->static_normals();
  std::vector<Hyperplane> planes;
  for (Eigen::Index i = 0; i < normals.cols(); ++i) planes.emplace_back(normals.col(i), motion.offsets[i]);
  HyperplaneFamily family(std::move(planes), map->straighten(0.0) * witness);

  return MovingBoundaryProblem{augment_time(straightened), embed_family(family, 1, 0.0), map};
}

KillWalls moving_walls(const BoundaryMotion& motion) {
  KillWalls walls;
  walls.count = static_cast<std::size_t>(motion.offsets.size());
  walls.distance = [motion](std::size_t j, double t, std::span<const double> x) {
    const Matrix a = motion.frame(t);
    const auto col = static_cast<Eigen::Index>(j);
    double level = -motion.offsets[col];
    for (Eigen::Index i = 0; i < a.rows(); ++i) level += a(i, col) * x[static_cast<std::size_t>(i)];
    return level / a.col(col).norm();
  };
  walls.normal = [motion](std::size_t j, double t, std::span<double> n) {
    const Matrix a = motion.frame(t);
    const auto col = static_cast<Eigen::Index>(j);
    const double norm = a.col(col).norm();
    std::fill(n.begin(), n.end(), 0.0);
    for (Eigen::Index i = 0; i < a.rows(); ++i) n[static_cast<std::size_t>(i)] = a(i, col) / norm;
  };
  return walls;
}

Estimate price_moving_barrier_oracle(const TimeDependentModel& base, const BoundaryMotion& motion,
                                     const Vector& x0, const PayoffFn& f, const SimulationPlan& plan,
                                     Monitoring monitoring) {
  const std::size_t d = base.dimension;
  if (static_cast<std::size_t>(x0.size()) != d) throw DomainError("initial state has wrong dimension");
  const DiffusionModel augmented = augment_time(base);
  Vector start = Vector::Zero(static_cast<Eigen::Index>(d + 1));
  start.head(static_cast<Eigen::Index>(d)) = x0;
  const PayoffFn spatial = [f, d](std::span<const double> x) { return f(x.first(d)); };
  return price_barrier_oracle(augmented, moving_walls(motion), start, spatial, plan, monitoring);
}

DiffeomorphismCheck check_diffeomorphism(const Diffeomorphism& map, const std::vector<Vector>& points) {
  if (!map.forward || !map.jacobian || !map.inverse) throw DomainError("diffeomorphism is missing evaluators");
  DiffeomorphismCheck report;
  for (const Vector& x : points) {
    const double inv_err = (map.inverse(map.forward(x)) - x).cwiseAbs().maxCoeff();
    report.max_inverse_error = std::max(report.max_inverse_error, inv_err);

    const Matrix j = map.jacobian(x);
    Matrix fd(j.rows(), j.cols());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(x[k]));
      Vector xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      fd.col(k) = (map.forward(xp) - map.forward(xm)) / (2.0 * h);
    }
    const double scale = std::max(1e-12, j.cwiseAbs().maxCoeff());
    report.max_jacobian_error = std::max(report.max_jacobian_error, (fd - j).cwiseAbs().maxCoeff() / scale);
  }
  if (report.max_inverse_error > 1e-8) {
    throw InversionFailure("inverse map round trip error " + std::to_string(report.max_inverse_error));
  }
  if (report.max_jacobian_error > 1e-5) {
    throw DomainError("jacobian disagrees with finite differences: relative error " +
                      std::to_string(report.max_jacobian_error));
  }
  return report;
}

DiffusionModel transform_curved(const DiffusionModel& base, const Diffeomorphism& map) {
  if (!map.forward || !map.jacobian || !map.hessians || !map.inverse) {
    throw DomainError("diffeomorphism is missing evaluators");
  }
  const std::size_t d = base.dimension();
  auto pull_back = [map](std::span<const double> y) {
    const Eigen::Map<const Vector> yv(y.data(), static_cast<Eigen::Index>(y.size()));
    Vector x = map.inverse(yv);
    const double err = (map.forward(x) - yv).cwiseAbs().maxCoeff();
    if (!(err <= 1e-6 * (1.0 + yv.cwiseAbs().maxCoeff()))) {
      throw InversionFailure("inverse map drifted by " + std::to_string(err));
    }
    return x;
  };
  auto drift = [base, map, pull_back, d](std::span<const double> y, std::span<double> mu) {
    const Vector x = pull_back(y);
    const Vector mu_x = base.drift(x);
    const Matrix s = base.diffusion(x);
    const Matrix cov = s * s.transpose();
    const Matrix j = map.jacobian(x);
    const std::vector<Matrix> hess = map.hessians(x);
    if (hess.size() != d) throw DomainError("one Hessian per map component is required");
    for (std::size_t i = 0; i < d; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      mu[i] = j.row(row).dot(mu_x) + 0.5 * (cov.cwiseProduct(hess[i])).sum();
    }
  };
  auto diffusion = [base, map, pull_back](std::span<const double> y, std::span<double> s) {
    const Vector x = pull_back(y);
    to_row_major(map.jacobian(x) * base.diffusion(x), s);
  };
  return DiffusionModel(d, drift, diffusion, base.label() + "+mapped");
}

}  // namespace symbar
