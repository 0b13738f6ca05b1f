#pragma once

// Problem reductions that bring time-dependent coefficients, moving walls and
// curved domains back to a static chamber where the symmetrized estimator
// applies.

#include "symbar/pricing.hpp"
#include "symbar/sde.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace symbar {

using TimeDriftFn = std::function<void(std::span<const double> x, double t, std::span<double> mu)>;
using TimeDiffusionFn = std::function<void(std::span<const double> x, double t, std::span<double> sigma)>;

struct TimeDependentModel {
  std::size_t dimension = 0;
  TimeDriftFn drift;
  TimeDiffusionFn diffusion;
  std::string label;
};

// View of an autonomous model as a time-dependent one.
TimeDependentModel time_independent(const DiffusionModel& base);

// (x, t) with the clock as the last coordinate: drift 1, no noise. The
// clock is advanced exactly by the simulator.
DiffusionModel augment_time(const TimeDependentModel& base);

// Appends `extra` zero components to every normal; the witness gets `fill`.
HyperplaneFamily embed_family(const HyperplaneFamily& family, std::size_t extra, double fill = 0.0);

// Walls <alpha_i(t), x> = k_i with alpha_i(t) the columns of A(t).
struct BoundaryMotion {
  std::function<Matrix(double t)> frame;       // A(t)
  std::function<Matrix(double t)> frame_rate;  // A'(t), supplied by the caller
  Vector offsets;                              // k_i, constant in time
};

inline constexpr double kMaxFrameCondition = 1e8;

// C(t) solving C' = -C A' A^-1, so that C(t) A(t) stays constant, on a
// uniform grid with classic RK4, and the straightening map
// M(t) = (C(t)^T)^-1 sending the moving chamber to a fixed one: <alpha_i(t), x> = <C(0) alpha_i(0), M(t) x>.
class StraighteningMap {
 public:
  StraighteningMap(BoundaryMotion motion, double horizon, double step, Matrix initial);

  double horizon() const { return horizon_; }
  double step() const { return step_; }
  std::size_t dimension() const { return static_cast<std::size_t>(initial_.rows()); }
  const BoundaryMotion& motion() const { return motion_; }

  Matrix c(double t) const;
  Matrix straighten(double t) const;  // M(t)
  // M'(t) M(t)^-1 = M(t) (A'(t) A(t)^-1)^T C(t)^T
  Matrix straighten_rate(double t) const;
  // The static normals C(0) alpha_i(0), as columns.
  Matrix static_normals() const { return initial_ * motion_.frame(0.0); }

 private:
  std::size_t segment(double t, double& s) const;

  BoundaryMotion motion_;
  double horizon_;
  double step_;
  Matrix initial_;
  // Node values and derivatives for cubic Hermite interpolation.
  std::vector<Matrix> c_, c_rate_, m_, m_rate_;
};

// step <= 0 selects horizon / 1024; an empty initial matrix means identity.
// Throws SingularBoundary when cond(A(t)) reaches kMaxFrameCondition.
std::shared_ptr<const StraighteningMap> straighten_boundary(const BoundaryMotion& motion, double horizon,
                                                            double step = 0.0, Matrix initial = Matrix());

struct MovingBoundaryProblem {
  DiffusionModel model;      // Y = M(t) X augmented with the clock
  HyperplaneFamily family;   // static walls in (y, t)
  std::shared_ptr<const StraighteningMap> map;
};

// The witness is a point strictly inside the chamber at t = 0 in the
// original coordinates.
MovingBoundaryProblem moving_boundary_model(const TimeDependentModel& base, const BoundaryMotion& motion,
                                            double horizon, const Vector& witness, double step = 0.0,
                                            Matrix initial = Matrix());

// Knock-out walls of a moving chamber for the path-dependent oracle, acting on
// the clock-augmented state.
KillWalls moving_walls(const BoundaryMotion& motion);

// Reference price on the original moving chamber: augments `base` with a
// clock and kills paths on the moving walls.
Estimate price_moving_barrier_oracle(const TimeDependentModel& base, const BoundaryMotion& motion,
                                     const Vector& x0, const PayoffFn& f, const SimulationPlan& plan,
                                     Monitoring monitoring);

// A smooth map with explicit derivatives. hessians(x)[i] is the Hessian of
// component i.
struct Diffeomorphism {
  std::function<Vector(const Vector&)> forward;
  std::function<Matrix(const Vector&)> jacobian;
  std::function<std::vector<Matrix>(const Vector&)> hessians;
  std::function<Vector(const Vector&)> inverse;
};

struct DiffeomorphismCheck {
  double max_inverse_error = 0.0;   // |F^-1(F(x)) - x|_max
  double max_jacobian_error = 0.0;  // relative, against central differences
};

// Throws InversionFailure above 1e-8 round-trip error and DomainError when
// the Jacobian disagrees with central differences by more than 1e-5.
DiffeomorphismCheck check_diffeomorphism(const Diffeomorphism& map, const std::vector<Vector>& points);

// Coefficients of Y = F(X) by Ito's formula, evaluated at x = F^-1(y):
//   mu_Y,i = <grad F_i, mu> + 1/2 tr(sigma sigma^T Hess F_i),  sigma_Y = J_F sigma.
// Evaluation throws InversionFailure when |F(F^-1(y)) - y| > 1e-6 (1 + |y|).
DiffusionModel transform_curved(const DiffusionModel& base, const Diffeomorphism& map);

}  // namespace symbar
