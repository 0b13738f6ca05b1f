#pragma once

// Configuration-driven front end behind the `symbar` executable.
//
// Config files are flat `key = value` lines; see README.md for the grammar
// and the recognised keys.

#include "symbar/errors.hpp"
#include "symbar/pricing.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace symbar::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // numerical failure at run time
inline constexpr int kExitConfig = 2;
inline constexpr int kExitUntrusted = 3;
inline constexpr int kExitGroup = 4;

// Carries the offending line (0 when the key is missing) and field name.
class ConfigError : public Error {
 public:
  ConfigError(std::string origin, std::size_t line, std::string field, const std::string& message);
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<config>");
  static Config load(const std::string& path);

  const std::string& origin() const { return origin_; }
  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  // Typed accessors mark the key as used and throw ConfigError on malformed
  // values or when a required key is missing.
  std::string text(const std::string& key) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  std::size_t count(const std::string& key) const;
  std::size_t count(const std::string& key, std::size_t fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<std::string> words(const std::string& key) const;

  ConfigError error(const std::string& key, const std::string& message) const;
  // Throws for the first key that no accessor has read.
  void reject_unused() const;

  // FNV-1a over the sorted `key=value` lines, ignoring the given keys.
  std::uint64_t hash(const std::set<std::string>& ignored = {}) const;

 private:
  struct Entry {
    std::string value;
    std::size_t line;
  };
  const Entry& entry(const std::string& key) const;

  std::string origin_;
  std::map<std::string, Entry> entries_;
  mutable std::set<std::string> used_;
};

enum class BarrierKind { single, double_, hyperplanes, moving };
enum class EstimatorKind { symmetrized, oracle_bridge, oracle_discrete, closed_form };

std::string estimator_label(EstimatorKind kind);

struct RunConfig {
  std::string model_name;
  std::optional<DiffusionModel> model;
  Vector x0;
  double sigma = 0.0;  // asset volatility for the models that have one
  double drift = 0.0;  // abm drift or the proportional drift r
  double cev_beta = 1.0;

  BarrierKind barrier = BarrierKind::single;
  bool barrier_up = false;
  double barrier_level = 0.0;  // K
  double barrier_width = 0.0;  // double barrier K'
  double barrier_growth = 0.0; // moving barrier: K (1 + growth t)
  std::size_t truncation = 10;
  std::size_t group_cap = 64;
  std::vector<Hyperplane> planes;
  Vector witness;

  std::string payoff_name;
  double strike = 0.0;
  double payoff_cap = kDefaultPayoffCap;
  PayoffFn payoff;

  SimulationPlan plan;
  std::vector<EstimatorKind> estimators;
  double rate = 0.0;
  std::string output;
  std::uint64_t config_hash = 0;
};

// Reads every section; throws ConfigError with line and field on failure.
RunConfig read_run_config(const Config& config);

struct Row {
  std::string label;
  Estimate estimate;
  double discounted = 0.0;
};

// One row per requested estimator, in request order.
std::vector<Row> run_estimators(const RunConfig& run);

// Closed-form reference as an undiscounted expectation, when one exists.
std::optional<double> closed_form_reference(const RunConfig& run);

std::string format_number(double v);

// Entry point of the executable: args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace symbar::cli
