#include "symbar/geometry.hpp"

#include "symbar/errors.hpp"

#include <cmath>
#include <string>

namespace symbar {

double default_side_tolerance(const Vector& x) { return 1e-12 * (1.0 + x.norm()); }

Hyperplane::Hyperplane(Vector alpha, double k) : alpha_(std::move(alpha)), k_(k) {
  if (alpha_.size() == 0) throw DomainError("hyperplane normal must have positive dimension");
  if (!alpha_.allFinite() || !std::isfinite(k_)) throw DomainError("hyperplane must be finite");
  norm2_ = alpha_.squaredNorm();
  if (!(norm2_ > 0.0)) throw DomainError("hyperplane normal must be nonzero");
}

double Hyperplane::signed_distance(const Vector& x) const { return level(x) / std::sqrt(norm2_); }

AffineIsometry::AffineIsometry(Matrix linear, Vector translation)
    : linear_(std::move(linear)), translation_(std::move(translation)) {
  if (linear_.rows() != linear_.cols() || linear_.rows() != translation_.size()) {
    throw DomainError("isometry linear part must be square and match the translation");
  }
}

AffineIsometry AffineIsometry::identity(std::size_t dimension) {
  const auto d = static_cast<Eigen::Index>(dimension);
  return AffineIsometry(Matrix::Identity(d, d), Vector::Zero(d));
}

AffineIsometry AffineIsometry::inverse() const {
  Matrix t_inv = linear_.transpose();
  Vector b_inv = -(t_inv * translation_);
  return AffineIsometry(std::move(t_inv), std::move(b_inv));
}

double AffineIsometry::distance(const AffineIsometry& other) const {
  if (other.dimension() != dimension()) throw DomainError("isometry dimension mismatch");
  const double dt = (linear_ - other.linear_).cwiseAbs().maxCoeff();
  const double db = (translation_ - other.translation_).cwiseAbs().maxCoeff();
  return std::max(dt, db);
}

double AffineIsometry::orthogonality_defect() const {
  const auto d = linear_.rows();
  return (linear_.transpose() * linear_ - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
}

Vector reflect(const Hyperplane& h, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != h.dimension()) {
    throw DomainError("point dimension does not match hyperplane");
  }
  return x - (2.0 * h.level(x) / h.normal_norm2()) * h.normal();
}

AffineIsometry as_isometry(const Hyperplane& h) {
  const auto d = static_cast<Eigen::Index>(h.dimension());
  const Vector& a = h.normal();
  Matrix t = Matrix::Identity(d, d) - (2.0 / h.normal_norm2()) * (a * a.transpose());
  Vector b = (2.0 * h.offset() / h.normal_norm2()) * a;
  return AffineIsometry(std::move(t), std::move(b));
}

AffineIsometry compose(const AffineIsometry& g, const AffineIsometry& h) {
  if (g.dimension() != h.dimension()) {
    throw DomainError("cannot compose isometries of dimension " + std::to_string(g.dimension()) +
                      " and " + std::to_string(h.dimension()));
  }
  return AffineIsometry(g.linear() * h.linear(), g.linear() * h.translation() + g.translation());
}

Side half_space_side(const Hyperplane& h, const Vector& x, double tol) {
  if (tol < 0.0) throw DomainError("side tolerance must be non-negative");
  const double v = h.level(x);
  if (v > tol) return Side::positive;
  if (v < -tol) return Side::negative;
  return Side::boundary;
}

Side half_space_side(const Hyperplane& h, const Vector& x) {
  return half_space_side(h, x, default_side_tolerance(x));
}

}  // namespace symbar
