#include "symbar/models.hpp"

#include <cmath>

namespace symbar::models {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

}  // namespace

DiffusionModel arithmetic_bm(double sigma, double drift) {
  require(std::isfinite(sigma) && std::isfinite(drift), "arithmetic BM parameters must be finite");
  return DiffusionModel(
      1, [drift](std::span<const double>, std::span<double> mu) { mu[0] = drift; },
      [sigma](std::span<const double>, std::span<double> s) { s[0] = sigma; }, "abm");
}

DiffusionModel isotropic_bm(std::size_t dimension, double sigma) {
  require(dimension > 0 && std::isfinite(sigma), "isotropic BM needs d > 0 and finite sigma");
  return DiffusionModel(
      dimension, [](std::span<const double>, std::span<double> mu) { std::fill(mu.begin(), mu.end(), 0.0); },
      [sigma, dimension](std::span<const double>, std::span<double> s) {
        std::fill(s.begin(), s.end(), 0.0);
        for (std::size_t i = 0; i < dimension; ++i) s[i * dimension + i] = sigma;
      },
      "bm" + std::to_string(dimension));
}

DiffusionModel gbm(double sigma, double r) {
  require(std::isfinite(sigma) && std::isfinite(r), "GBM parameters must be finite");
  return DiffusionModel(
      1, [r](std::span<const double> x, std::span<double> mu) { mu[0] = r * x[0]; },
      [sigma](std::span<const double> x, std::span<double> s) { s[0] = sigma * x[0]; }, "gbm");
}

DiffusionModel cev(double sigma, double beta, double r) {
  require(std::isfinite(sigma) && std::isfinite(beta) && std::isfinite(r), "CEV parameters must be finite");
  require(beta >= 0.0, "CEV exponent must be non-negative");
  return DiffusionModel(
      1, [r](std::span<const double> x, std::span<double> mu) { mu[0] = r * x[0]; },
      [sigma, beta](std::span<const double> x, std::span<double> s) {
        s[0] = sigma * std::pow(std::max(x[0], 0.0), beta);
      },
      "cev");
}

DiffusionModel heston(const HestonParams& p) {
  require(p.kappa >= 0.0 && p.theta >= 0.0 && p.xi >= 0.0, "Heston kappa, theta, xi must be non-negative");
  require(std::abs(p.rho) <= 1.0, "Heston rho must lie in [-1, 1]");
  const double rho_bar = std::sqrt(1.0 - p.rho * p.rho);
  return DiffusionModel(
      2,
      [p](std::span<const double> x, std::span<double> mu) {
        const double v = std::max(x[1], 0.0);
        mu[0] = p.r * x[0];
        mu[1] = p.kappa * (p.theta - v);
      },
      [p, rho_bar](std::span<const double> x, std::span<double> s) {
        const double vol = std::sqrt(std::max(x[1], 0.0));
        s[0] = x[0] * vol;
        s[1] = 0.0;
        s[2] = p.rho * p.xi * vol;
        s[3] = rho_bar * p.xi * vol;
      },
      "heston");
}

DiffusionModel sabr(const SabrParams& p) {
  require(p.beta >= 0.0 && p.beta <= 1.0, "SABR beta must lie in [0, 1]");
  require(p.nu >= 0.0 && std::abs(p.rho) <= 1.0, "SABR nu must be non-negative and |rho| <= 1");
  const double rho_bar = std::sqrt(1.0 - p.rho * p.rho);
  return DiffusionModel(
      2,
      [p](std::span<const double> x, std::span<double> mu) {
        mu[0] = p.r * x[0];
        mu[1] = 0.0;
      },
      [p, rho_bar](std::span<const double> x, std::span<double> s) {
        s[0] = x[1] * std::pow(std::max(x[0], 0.0), p.beta);
        s[1] = 0.0;
        s[2] = p.rho * p.nu * x[1];
        s[3] = rho_bar * p.nu * x[1];
      },
      "sabr");
}

}  // namespace symbar::models
