#pragma once

// Shipped diffusions. One-dimensional models act on the asset only;
// stochastic-volatility models use the state (x, v) with a lower-triangular
// diffusion matrix whose volatility row never reads x.

#include "symbar/sde.hpp"

namespace symbar::models {

// dX = sigma dW + drift dt
DiffusionModel arithmetic_bm(double sigma, double drift = 0.0);

// d independent coordinates, each dX_i = sigma dW_i.
DiffusionModel isotropic_bm(std::size_t dimension, double sigma);

// dX = sigma X dW + r X dt
DiffusionModel gbm(double sigma, double r);

// dX = sigma max(X, 0)^beta dW + r X dt
DiffusionModel cev(double sigma, double beta, double r);

struct HestonParams {
  double r = 0.0;
  double kappa = 2.0;
  double theta = 0.04;
  double xi = 0.3;
  double rho = 0.0;  // loading of the variance on the asset noise
};

// dX = X sqrt(v+) dW + r X dt
// dV = xi sqrt(v+) (rho dW + sqrt(1 - rho^2) dB) + kappa (theta - v+) dt
// Full truncation: v+ = max(v, 0) everywhere.
DiffusionModel heston(const HestonParams& p);

struct SabrParams {
  double beta = 1.0;
  double nu = 0.3;   // volatility of volatility
  double rho = 0.0;
  double r = 0.0;
};

// dX = v max(X, 0)^beta dW + r X dt
// dV = nu v (rho dW + sqrt(1 - rho^2) dB)
DiffusionModel sabr(const SabrParams& p);

}  // namespace symbar::models
