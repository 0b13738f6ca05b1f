#pragma once

// Hyperplanes, reflections and affine isometries of R^d.
//
// Normals are kept exactly as supplied (never normalised); every formula
// divides by |alpha|^2 so that (alpha, k) and (c alpha, c k) describe the
// same reflection.

#include <Eigen/Dense>

#include <cstddef>

namespace symbar {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Side { negative, boundary, positive };

// Default dead-band for side classification: 1e-12 * (1 + |x|).
double default_side_tolerance(const Vector& x);

// The hyperplane {x : <alpha, x> = k} together with its positive half space
// {x : <alpha, x> - k > 0}.
class Hyperplane {
 public:
  // Throws DomainError on a zero or non-finite normal.
  Hyperplane(Vector alpha, double k);

  const Vector& normal() const { return alpha_; }
  double offset() const { return k_; }
  std::size_t dimension() const { return static_cast<std::size_t>(alpha_.size()); }
  double normal_norm2() const { return norm2_; }

  // <alpha, x> - k. Positive on the open half space.
  double level(const Vector& x) const { return alpha_.dot(x) - k_; }
  // Level divided by |alpha|: Euclidean signed distance to the wall.
  double signed_distance(const Vector& x) const;

 private:
  Vector alpha_;
  double k_;
  double norm2_;
};

// x -> T x + b with T orthogonal.
class AffineIsometry {
 public:
  AffineIsometry(Matrix linear, Vector translation);

  static AffineIsometry identity(std::size_t dimension);

  const Matrix& linear() const { return linear_; }
  const Vector& translation() const { return translation_; }
  std::size_t dimension() const { return static_cast<std::size_t>(translation_.size()); }

  Vector apply(const Vector& x) const { return linear_ * x + translation_; }
  // Uses T^-1 = T^T.
  AffineIsometry inverse() const;

  // max(|T - T'|_max, |b - b'|_max)
  double distance(const AffineIsometry& other) const;
  // |T^T T - I|_max
  double orthogonality_defect() const;

 private:
  Matrix linear_;
  Vector translation_;
};

// s(x) = x - (<x, alpha> - k) * 2 alpha / |alpha|^2
Vector reflect(const Hyperplane& h, const Vector& x);

// T = I - 2 alpha alpha^T / |alpha|^2, b = 2 k alpha / |alpha|^2.
AffineIsometry as_isometry(const Hyperplane& h);

// (g o h)(x) = g(h(x)): linear part T_g T_h, translation T_g b_h + b_g.
// Throws DomainError on dimension mismatch.
AffineIsometry compose(const AffineIsometry& g, const AffineIsometry& h);

// Sign of <alpha, x> - k with a dead band of width tol around zero.
Side half_space_side(const Hyperplane& h, const Vector& x, double tol);
Side half_space_side(const Hyperplane& h, const Vector& x);

}  // namespace symbar
