#include "symbar/cli.hpp"

#include "symbar/models.hpp"
#include "symbar/transforms.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace symbar::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) parts.push_back(trim(item));
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return errno == 0 && end == s.c_str() + s.size() && std::isfinite(out);
}

bool parse_size(const std::string& s, std::size_t& out) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) return false;
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (errno != 0 || end != s.c_str() + s.size()) return false;
  out = static_cast<std::size_t>(v);
  return true;
}

bool valid_key(const std::string& key) {
  if (key.empty() || key.front() == '.' || key.back() == '.') return false;
  return std::all_of(key.begin(), key.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
  });
}

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

ConfigError::ConfigError(std::string origin, std::size_t line, std::string field, const std::string& message)
    : Error(origin + (line ? ":" + std::to_string(line) : std::string()) +
            (field.empty() ? std::string() : ": field '" + field + "'") + ": " + message),
      line_(line),
      field_(std::move(field)) {}

Config Config::parse(const std::string& text, const std::string& origin) {
  Config config;
  config.origin_ = origin;
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string content = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) throw ConfigError(origin, line, "", "expected 'key = value'");
    const std::string key = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));
    if (!valid_key(key)) throw ConfigError(origin, line, key, "invalid key name");
    if (value.empty()) throw ConfigError(origin, line, key, "empty value");
    const auto [it, inserted] = config.entries_.emplace(key, Entry{value, line});
    if (!inserted) {
      throw ConfigError(origin, line, key, "duplicate key (first set on line " + std::to_string(it->second.line) + ")");
    }
  }
  return config;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "", "cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

const Config::Entry& Config::entry(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError(origin_, 0, key, "missing required key");
  used_.insert(key);
  return it->second;
}

ConfigError Config::error(const std::string& key, const std::string& message) const {
  const auto it = entries_.find(key);
  return ConfigError(origin_, it == entries_.end() ? 0 : it->second.line, key, message);
}

std::string Config::text(const std::string& key) const { return entry(key).value; }

std::string Config::text(const std::string& key, const std::string& fallback) const {
  return has(key) ? text(key) : fallback;
}

double Config::number(const std::string& key) const {
  const Entry& e = entry(key);
  double v;
  if (!parse_double(e.value, v)) throw error(key, "expected a finite number, got '" + e.value + "'");
  return v;
}

double Config::number(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

std::size_t Config::count(const std::string& key) const {
  const Entry& e = entry(key);
  std::size_t v;
  if (!parse_size(e.value, v)) throw error(key, "expected a non-negative integer, got '" + e.value + "'");
  return v;
}

std::size_t Config::count(const std::string& key, std::size_t fallback) const {
  return has(key) ? count(key) : fallback;
}

std::vector<double> Config::numbers(const std::string& key) const {
  const Entry& e = entry(key);
  std::vector<double> out;
  for (const auto& part : split(e.value, ',')) {
    double v;
    if (!parse_double(part, v)) throw error(key, "expected a comma-separated list of numbers, got '" + e.value + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> Config::words(const std::string& key) const {
  const Entry& e = entry(key);
  std::vector<std::string> out = split(e.value, ',');
  for (const auto& w : out) {
    if (w.empty()) throw error(key, "empty item in list '" + e.value + "'");
  }
  return out;
}

void Config::reject_unused() const {
  for (const auto& [key, e] : entries_) {
    if (!used_.count(key)) throw ConfigError(origin_, e.line, key, "unknown or unused key");
  }
}

std::uint64_t Config::hash(const std::set<std::string>& ignored) const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [key, e] : entries_) {
    if (ignored.count(key)) continue;
    feed(key);
    feed("=");
    feed(e.value);
    feed("\n");
  }
  return h;
}

std::string estimator_label(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::symmetrized: return "symmetrized";
    case EstimatorKind::oracle_bridge: return "oracle-bridge";
    case EstimatorKind::oracle_discrete: return "oracle-discrete";
    case EstimatorKind::closed_form: return "closed-form";
  }
  return "?";
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

bool stochastic_volatility(const std::string& name) { return name == "heston" || name == "sabr"; }

double positive(const Config& c, const std::string& key) {
  const double v = c.number(key);
  if (!(v > 0.0)) throw c.error(key, "must be positive");
  return v;
}

double positive(const Config& c, const std::string& key, double fallback) {
  return c.has(key) ? positive(c, key) : fallback;
}

void read_model(const Config& c, RunConfig& run) {
  run.model_name = c.text("model.name");
  const std::string& name = run.model_name;
  std::size_t dimension = 1;
  if (name == "abm") {
    run.sigma = positive(c, "model.sigma");
    run.drift = c.number("model.drift", 0.0);
    run.model = models::arithmetic_bm(run.sigma, run.drift);
  } else if (name == "bm") {
    dimension = c.count("model.dimension");
    if (dimension == 0) throw c.error("model.dimension", "must be at least 1");
    run.sigma = positive(c, "model.sigma");
    run.model = models::isotropic_bm(dimension, run.sigma);
  } else if (name == "gbm") {
    run.sigma = positive(c, "model.sigma");
    run.drift = c.number("model.r", run.rate);
    run.model = models::gbm(run.sigma, run.drift);
  } else if (name == "cev") {
    run.sigma = positive(c, "model.sigma");
    run.cev_beta = c.number("model.beta");
    if (run.cev_beta < 0.0 || run.cev_beta > 1.0) throw c.error("model.beta", "must lie in [0, 1]");
    run.drift = c.number("model.r", run.rate);
    run.model = models::cev(run.sigma, run.cev_beta, run.drift);
  } else if (name == "heston") {
    models::HestonParams p;
    p.r = c.number("model.r", run.rate);
    p.kappa = positive(c, "model.kappa", p.kappa);
    p.theta = positive(c, "model.theta", p.theta);
    p.xi = positive(c, "model.xi", p.xi);
    p.rho = c.number("model.rho", p.rho);
    if (std::abs(p.rho) > 1.0) throw c.error("model.rho", "must lie in [-1, 1]");
    run.drift = p.r;
    run.model = models::heston(p);
    dimension = 2;
  } else if (name == "sabr") {
    models::SabrParams p;
    p.beta = c.number("model.beta", p.beta);
    if (p.beta < 0.0 || p.beta > 1.0) throw c.error("model.beta", "must lie in [0, 1]");
    p.nu = positive(c, "model.nu", p.nu);
    p.rho = c.number("model.rho", p.rho);
    if (std::abs(p.rho) > 1.0) throw c.error("model.rho", "must lie in [-1, 1]");
    p.r = c.number("model.r", run.rate);
    run.drift = p.r;
    run.model = models::sabr(p);
    dimension = 2;
  } else {
    throw c.error("model.name", "unknown model '" + name + "' (abm, bm, gbm, cev, heston, sabr)");
  }

  const std::vector<double> x0 = c.numbers("model.x0");
  const std::size_t spatial = stochastic_volatility(name) ? 1 : dimension;
  if (x0.size() != spatial) {
    throw c.error("model.x0", "expected " + std::to_string(spatial) + " value(s), got " + std::to_string(x0.size()));
  }
  run.x0 = Vector::Zero(static_cast<Eigen::Index>(dimension));
  for (std::size_t i = 0; i < x0.size(); ++i) run.x0[static_cast<Eigen::Index>(i)] = x0[i];
  if (stochastic_volatility(name)) run.x0[1] = positive(c, "model.v0");
  if ((name == "gbm" || name == "cev") && !(run.x0[0] > 0.0)) throw c.error("model.x0", "must be positive");
}

void read_barrier(const Config& c, RunConfig& run) {
  const std::string type = c.text("barrier.type");
  const std::size_t d = run.model->dimension();
  const bool sv = stochastic_volatility(run.model_name);
  if (type == "single") {
    run.barrier = BarrierKind::single;
    run.barrier_level = c.number("barrier.K");
    const std::string dir = c.text("barrier.direction", "down");
    if (dir != "down" && dir != "up") throw c.error("barrier.direction", "expected 'down' or 'up'");
    run.barrier_up = dir == "up";
    if (sv && run.barrier_up)
      throw c.error("barrier.direction", "stochastic-volatility models support down barriers only");
  } else if (type == "double") {
    run.barrier = BarrierKind::double_;
    run.barrier_level = c.number("barrier.K");
    if (c.has("barrier.width")) {
      run.barrier_width = positive(c, "barrier.width");
    } else {
      run.barrier_width = c.number("barrier.K2") - run.barrier_level;
      if (!(run.barrier_width > 0.0)) throw c.error("barrier.K2", "must exceed barrier.K");
    }
    run.truncation = c.count("barrier.N", run.truncation);
    if (sv) throw c.error("barrier.type", "stochastic-volatility models support single barriers only");
  } else if (type == "hyperplanes") {
    run.barrier = BarrierKind::hyperplanes;
    if (sv) throw c.error("barrier.type", "stochastic-volatility models support single barriers only");
    const std::size_t n = c.count("barrier.planes");
    if (n == 0) throw c.error("barrier.planes", "must be at least 1");
    for (std::size_t i = 0; i < n; ++i) {
      const std::string prefix = "barrier.plane" + std::to_string(i);
      const std::vector<double> alpha = c.numbers(prefix + ".alpha");
      if (alpha.size() != d) throw c.error(prefix + ".alpha", "expected " + std::to_string(d) + " components");
      Vector a(static_cast<Eigen::Index>(d));
      for (std::size_t j = 0; j < d; ++j) a[static_cast<Eigen::Index>(j)] = alpha[j];
      try {
        run.planes.emplace_back(a, c.number(prefix + ".k"));
      } catch (const DomainError& e) {
        throw c.error(prefix + ".alpha", e.what());
      }
    }
  } else if (type == "moving") {
    run.barrier = BarrierKind::moving;
    if (d != 1) throw c.error("barrier.type", "moving barriers need a one-dimensional model");
    run.barrier_level = c.number("barrier.K");
    run.barrier_growth = c.number("barrier.growth");
    const std::string dir = c.text("barrier.direction", "down");
    if (dir != "down" && dir != "up") throw c.error("barrier.direction", "expected 'down' or 'up'");
    run.barrier_up = dir == "up";
  } else {
    throw c.error("barrier.type", "unknown barrier type '" + type + "' (single, double, hyperplanes, moving)");
  }

  run.witness = run.x0;
  if (c.has("barrier.witness")) {
    const std::vector<double> w = c.numbers("barrier.witness");
    if (w.size() != d) throw c.error("barrier.witness", "expected " + std::to_string(d) + " components");
    for (std::size_t j = 0; j < d; ++j) run.witness[static_cast<Eigen::Index>(j)] = w[j];
  }
  const std::size_t default_cap = run.barrier == BarrierKind::double_ ? 4 * run.truncation + 3 : 64;
  run.group_cap = c.count("barrier.cap", default_cap);
  if (run.group_cap == 0) throw c.error("barrier.cap", "must be at least 1");
}

PayoffFn read_payoff(const Config& c, RunConfig& run) {
  run.payoff_name = c.text("payoff.type");
  run.payoff_cap = positive(c, "payoff.cap", kDefaultPayoffCap);
  const std::string& name = run.payoff_name;
  if (name == "call" || name == "put" || name == "digital") {
    run.strike = c.number("payoff.strike");
    if (name == "call") return payoffs::call(run.strike);
    if (name == "put") return payoffs::put(run.strike);
    return payoffs::digital(run.strike);
  }
  if (name == "indicator") return payoffs::indicator();
  if (name == "zero") return payoffs::zero();
  throw c.error("payoff.type", "unknown payoff '" + name + "' (call, put, digital, indicator, zero)");
}

BoundaryMotion linear_motion(const RunConfig& run) {
  const double s = run.barrier_up ? -1.0 : 1.0;
  const double g = run.barrier_growth;
  BoundaryMotion motion;
  motion.frame = [s, g](double t) -> Matrix { return Matrix::Constant(1, 1, s / (1.0 + g * t)); };
  motion.frame_rate = [s, g](double t) -> Matrix {
    return Matrix::Constant(1, 1, -s * g / ((1.0 + g * t) * (1.0 + g * t)));
  };
  motion.offsets = Vector::Constant(1, s * run.barrier_level);
  return motion;
}

// The chamber at t = 0, in the model's coordinates.
HyperplaneFamily static_family(const RunConfig& run, const Vector& witness) {
  const std::size_t d = static_cast<std::size_t>(witness.size());
  switch (run.barrier) {
    case BarrierKind::single:
    case BarrierKind::moving: {
      Vector a = Vector::Zero(static_cast<Eigen::Index>(d));
      a[0] = run.barrier_up ? -1.0 : 1.0;
      return HyperplaneFamily({Hyperplane(a, a[0] * run.barrier_level)}, witness);
    }
    case BarrierKind::double_:
      return double_barrier_family(d, run.barrier_level, run.barrier_width, witness);
    case BarrierKind::hyperplanes:
      return HyperplaneFamily(run.planes, witness);
  }
  throw DomainError("unreachable barrier kind");
}

}  // namespace

std::optional<double> closed_form_reference(const RunConfig& run) {
  const double t = run.plan.horizon;
  if (run.payoff_name == "zero") return 0.0;
  if (run.barrier != BarrierKind::single) return std::nullopt;
  const double x0 = run.x0[0];
  const double k = run.barrier_level;
  if (run.model_name == "gbm" && !run.barrier_up && run.payoff_name == "call" && run.strike >= k && x0 > k &&
      run.strike > 0.0 && k > 0.0) {
    return std::exp(run.drift * t) * closed_form_dao_call(x0, run.strike, k, run.sigma, run.drift, t);
  }
  if (run.model_name == "abm" && run.drift == 0.0 && run.payoff_name == "indicator") {
    return survival_probability_bm(std::abs(x0 - k), 0.0, run.sigma, t);
  }
  return std::nullopt;
}

RunConfig read_run_config(const Config& c) {
  RunConfig run;
  run.rate = c.number("discount.rate", 0.0);
  read_model(c, run);
  read_barrier(c, run);
  run.payoff = read_payoff(c, run);

  run.plan.paths = c.count("plan.paths");
  if (run.plan.paths == 0) throw c.error("plan.paths", "must be at least 1");
  run.plan.steps = c.count("plan.steps");
  if (run.plan.steps == 0) throw c.error("plan.steps", "must be at least 1");
  run.plan.horizon = positive(c, "plan.horizon");
  run.plan.seed = c.count("plan.seed", 1);
  run.plan.workers = static_cast<unsigned>(std::max<std::size_t>(1, c.count("plan.workers", 1)));

  for (const auto& w : c.words("estimators")) {
    if (w == "symmetrized") {
      run.estimators.push_back(EstimatorKind::symmetrized);
    } else if (w == "oracle-bridge") {
      run.estimators.push_back(EstimatorKind::oracle_bridge);
    } else if (w == "oracle-discrete") {
      run.estimators.push_back(EstimatorKind::oracle_discrete);
    } else if (w == "closed-form") {
      run.estimators.push_back(EstimatorKind::closed_form);
    } else {
      throw c.error("estimators",
                    "unknown estimator '" + w + "' (symmetrized, oracle-bridge, oracle-discrete, closed-form)");
    }
  }
  run.output = c.text("output", "");

  try {
    static_family(run, run.witness);
  } catch (const DomainError& e) {
    throw c.error(c.has("barrier.witness") ? "barrier.witness" : "model.x0", e.what());
  }
  if (run.barrier == BarrierKind::moving) {
    if (!(1.0 + run.barrier_growth * run.plan.horizon > 0.0)) {
      throw c.error("barrier.growth", "the barrier K (1 + growth t) must stay positive over the horizon");
    }
  }
  if (!static_family(run, run.witness).strictly_contains(run.x0)) {
    throw c.error("model.x0", "initial state must lie strictly inside the barrier chamber");
  }
  const bool wants_closed_form =
      std::find(run.estimators.begin(), run.estimators.end(), EstimatorKind::closed_form) != run.estimators.end();
  if (wants_closed_form && !closed_form_reference(run)) {
    throw c.error("estimators", "no closed form for this model, barrier and payoff");
  }
  c.reject_unused();
  run.config_hash = c.hash({"plan.workers", "output"});
  return run;
}

namespace {

Estimate run_symmetrized(const RunConfig& run) {
  const DiffusionModel& base = *run.model;
  GenerateOptions options;
  options.cap = run.group_cap;
  switch (run.barrier) {
    case BarrierKind::double_:
      return price_double_barrier(base, run.barrier_level, run.barrier_width, run.x0, run.payoff, run.plan,
                                  run.truncation, run.payoff_cap);
    case BarrierKind::single:
      if (stochastic_volatility(run.model_name)) {
        StructureProbe probe;
        probe.center = run.x0;
        const SymmetrizedModel sym = symmetrize_sv(base, run.barrier_level, probe);
        const Payoff payoff(run.payoff, sym.group().family(), run.payoff_cap);
        return price_barrier_symmetrized(sym, run.x0, payoff, run.plan);
      }
      [[fallthrough]];
    case BarrierKind::hyperplanes: {
      const HyperplaneFamily family = static_family(run, run.witness);
      const Payoff payoff(run.payoff, family, run.payoff_cap);
      return price_barrier_symmetrized(base, ReflectionGroup::generate(family, options), run.x0, payoff, run.plan);
    }
    case BarrierKind::moving: {
      const BoundaryMotion motion = linear_motion(run);
      MovingBoundaryProblem problem =
          moving_boundary_model(time_independent(base), motion, run.plan.horizon, run.witness);
      const std::size_t d = base.dimension();
      auto map = problem.map;
      PayoffFn f = run.payoff;
      const PayoffFn fy = [map, f, d](std::span<const double> y) {
        const Eigen::Map<const Vector> yv(y.data(), static_cast<Eigen::Index>(d));
        const Vector x = map->c(y[d]).transpose() * yv;
        return f({x.data(), d});
      };
      Vector y0 = Vector::Zero(static_cast<Eigen::Index>(d + 1));
      y0.head(static_cast<Eigen::Index>(d)) = map->straighten(0.0) * run.x0;
      const Payoff payoff(fy, problem.family, run.payoff_cap);
      return price_barrier_symmetrized(problem.model, ReflectionGroup::generate(problem.family, options), y0,
                                       payoff, run.plan);
    }
  }
  throw DomainError("unreachable barrier kind");
}

Estimate run_oracle(const RunConfig& run, Monitoring monitoring) {
  const DiffusionModel& base = *run.model;
  if (run.barrier == BarrierKind::moving) {
    return price_moving_barrier_oracle(time_independent(base), linear_motion(run), run.x0, run.payoff, run.plan,
                                       monitoring);
  }
  const HyperplaneFamily family = static_family(run, run.witness);
  return price_barrier_oracle(base, family, run.x0, run.payoff, run.plan, monitoring);
}

}  // namespace

std::vector<Row> run_estimators(const RunConfig& run) {
  std::vector<Row> rows;
  const double discount = std::exp(-run.rate * run.plan.horizon);
  for (EstimatorKind kind : run.estimators) {
    Row row;
    row.label = estimator_label(kind);
    switch (kind) {
      case EstimatorKind::symmetrized: row.estimate = run_symmetrized(run); break;
      case EstimatorKind::oracle_bridge: row.estimate = run_oracle(run, Monitoring::bridge); break;
      case EstimatorKind::oracle_discrete: row.estimate = run_oracle(run, Monitoring::discrete); break;
      case EstimatorKind::closed_form: {
        const auto value = closed_form_reference(run);
        if (!value) throw DomainError("no closed form for this configuration");
        row.estimate.mean = *value;
        row.estimate.seed = run.plan.seed;
        break;
      }
    }
    row.discounted = discount * row.estimate.mean;
    rows.push_back(row);
  }
  return rows;
}

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  bool allow_gaps = false;
  std::string out;
  std::string steps;
  std::string paths;
};

RunConfig load(const Options& o) {
  const Config config = Config::load(o.config);
  RunConfig run = read_run_config(config);
  if (o.seed) run.plan.seed = *o.seed;
  if (o.workers) run.plan.workers = std::max(1u, *o.workers);
  if (!o.out.empty()) run.output = o.out;
  return run;
}

void header(std::ostream& csv, const char* command, std::uint64_t hash, std::uint64_t seed) {
  csv << "# symbar " << command << "\n";
  csv << "# config_hash=" << hex64(hash) << "\n";
  csv << "# seed=" << seed << "\n";
}

int emit(const std::string& path, const std::string& text, std::ostream& out, std::ostream& err) {
  if (path.empty()) {
    out << text;
    return kExitOk;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    err << "error: cannot write " << path << "\n";
    return kExitConfig;
  }
  file << text;
  return kExitOk;
}

int untrusted(std::ostream& err, const std::string& label, const Estimate& e) {
  err << "error: estimate '" << label << "' is untrusted: " << e.gap_hits
      << " gap hit(s) outside the enumerated chambers; raise barrier.N / barrier.cap or pass --allow-gaps\n";
  return kExitUntrusted;
}

int cmd_price(const Options& o, std::ostream& out, std::ostream& err) {
  const RunConfig run = load(o);
  const std::vector<Row> rows = run_estimators(run);
  if (!o.allow_gaps) {
    for (const Row& r : rows) {
      if (!r.estimate.trusted()) return untrusted(err, r.label, r.estimate);
    }
  }
  std::ostringstream csv;
  header(csv, "price", run.config_hash, run.plan.seed);
  csv << "label,mean,stderr,paths,steps,gap_hits,excluded,support_violations,cap_hits,seed,discounted\n";
  for (const Row& r : rows) {
    const Estimate& e = r.estimate;
    csv << r.label << ',' << format_number(e.mean) << ',' << format_number(e.std_error) << ',' << e.paths << ','
        << e.steps << ',' << e.gap_hits << ',' << e.excluded_paths << ',' << e.support_violations << ','
        << e.cap_hits << ',' << e.seed << ',' << format_number(r.discounted) << '\n';
  }
  return emit(run.output, csv.str(), out, err);
}

std::vector<std::size_t> sweep_list(const std::string& text, const char* flag) {
  std::vector<std::size_t> values;
  for (const auto& part : split(text, ',')) {
    std::size_t v;
    if (!parse_size(part, v) || v == 0) {
      throw ConfigError("command line", 0, flag, "expected a comma-separated list of positive integers");
    }
    values.push_back(v);
  }
  if (values.empty()) throw ConfigError("command line", 0, flag, "sweep list is empty");
  return values;
}

int cmd_convergence(const Options& o, std::ostream& out, std::ostream& err) {
  const std::vector<std::size_t> steps = sweep_list(o.steps, "--steps");
  const std::vector<std::size_t> paths = sweep_list(o.paths, "--paths");
  RunConfig run = load(o);

  std::vector<EstimatorKind> swept;
  for (EstimatorKind k : run.estimators) {
    if (k != EstimatorKind::closed_form) swept.push_back(k);
  }
  if (swept.empty()) {
    throw ConfigError("command line", 0, "estimators", "convergence needs at least one Monte Carlo estimator");
  }

  std::string reference_label = "closed-form";
  double reference;
  if (const auto cf = closed_form_reference(run)) {
    reference = *cf;
  } else {
    RunConfig ref = run;
    ref.plan.steps = *std::max_element(steps.begin(), steps.end());
    ref.plan.paths = *std::max_element(paths.begin(), paths.end());
    ref.estimators = {EstimatorKind::oracle_bridge};
    const Row row = run_estimators(ref).front();
    reference = row.estimate.mean;
    reference_label = "oracle-bridge";
  }

  std::ostringstream csv;
  header(csv, "convergence", run.config_hash, run.plan.seed);
  csv << "# reference=" << reference_label << "\n";
  csv << "label,steps,paths,mean,stderr,reference,error,gap_hits,excluded,seed\n";
  for (std::size_t n : steps) {
    for (std::size_t m : paths) {
      RunConfig cell = run;
      cell.plan.steps = n;
      cell.plan.paths = m;
      cell.estimators = swept;
      for (const Row& r : run_estimators(cell)) {
        const Estimate& e = r.estimate;
        if (!o.allow_gaps && !e.trusted()) return untrusted(err, r.label, e);
        csv << r.label << ',' << n << ',' << m << ',' << format_number(e.mean) << ',' << format_number(e.std_error)
            << ',' << format_number(reference) << ',' << format_number(e.mean - reference) << ',' << e.gap_hits
            << ',' << e.excluded_paths << ',' << e.seed << '\n';
      }
    }
  }
  return emit(run.output, csv.str(), out, err);
}

// Group inspection reads only the barrier section (plus model.x0 as a
// fallback witness), so the same file serves `price` and `group inspect`.
int cmd_group_inspect(const Options& o, std::ostream& out, std::ostream& err) {
  const Config c = Config::load(o.config);
  RunConfig run;
  const std::string type = c.text("barrier.type");
  std::size_t d = 1;
  if (type == "hyperplanes") {
    d = c.numbers("barrier.plane0.alpha").size();
  } else if (c.has("model.name")) {
    const std::string name = c.text("model.name");
    if (stochastic_volatility(name)) d = 2;
    if (name == "bm") d = c.count("model.dimension");
  }
  if (d == 0) throw c.error("model.dimension", "must be at least 1");
  run.model = models::isotropic_bm(d, 1.0);

  Vector witness = Vector::Zero(static_cast<Eigen::Index>(d));
  bool have_witness = false;
  if (c.has("model.x0")) {
    const std::vector<double> x0 = c.numbers("model.x0");
    for (std::size_t i = 0; i < std::min(d, x0.size()); ++i) witness[static_cast<Eigen::Index>(i)] = x0[i];
    have_witness = true;
  }
  if (c.has("model.v0") && d == 2) witness[1] = c.number("model.v0");
  run.x0 = witness;
  read_barrier(c, run);
  if (!c.has("barrier.witness") && !have_witness) {
    if (run.barrier == BarrierKind::double_) {
      run.witness[0] = run.barrier_level + 0.5 * run.barrier_width;
    } else if (run.barrier != BarrierKind::hyperplanes) {
      run.witness[0] = run.barrier_level + (run.barrier_up ? -1.0 : 1.0) * std::max(1.0, std::abs(run.barrier_level));
    }
  }
  GenerateOptions options;
  options.cap = run.group_cap;
  options.disjointness_samples = c.count("barrier.samples", options.disjointness_samples);
  HyperplaneFamily family = [&] {
    try {
      return static_family(run, run.witness);
    } catch (const DomainError& e) {
      throw c.error(c.has("barrier.witness") ? "barrier.witness" : "model.x0", e.what());
    }
  }();
  const ReflectionGroup group = ReflectionGroup::generate(std::move(family), options);
  const std::uint64_t hash = c.hash({"plan.workers", "output"});
  std::ostringstream csv;
  csv << "# symbar group inspect\n";
  csv << "# config_hash=" << hex64(hash) << "\n";
  csv << "# elements=" << group.size() << " complete=" << (group.complete() ? "true" : "false")
      << " cap=" << group.cap() << "\n";
  const DisjointnessReport& rep = group.disjointness();
  csv << "# disjointness samples=" << rep.samples << " max_cover=" << rep.max_cover << " covered=" << rep.covered
      << " uncovered=" << rep.uncovered << "\n";
  csv << "word,eta";
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) csv << ",T" << i << j;
  }
  for (std::size_t i = 0; i < d; ++i) csv << ",b" << i;
  csv << "\n";
  for (const GroupElement& g : group.elements()) {
    csv << g.word_string() << ',' << g.eta;
    const Matrix& t = g.isometry.linear();
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      for (Eigen::Index j = 0; j < t.cols(); ++j) csv << ',' << format_number(t(i, j) == 0.0 ? 0.0 : t(i, j));
    }
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      const double b = g.isometry.translation()[i];
      csv << ',' << format_number(b == 0.0 ? 0.0 : b);
    }
    csv << "\n";
  }
  return emit(o.out.empty() ? c.text("output", "") : o.out, csv.str(), out, err);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Barrier option pricing by symmetrization", "symbar"};
  app.require_subcommand(1);
  Options o;
  auto common = [&o](CLI::App* sub) {
    sub->add_option("config", o.config, "configuration file")->required();
    sub->add_option("--seed", o.seed, "override plan.seed");
    sub->add_option("--workers", o.workers, "override plan.workers (output does not depend on it)");
    sub->add_flag("--allow-gaps", o.allow_gaps, "report estimates with gap hits instead of failing");
    sub->add_option("--out", o.out, "write the CSV report to this path");
  };
  CLI::App* price = app.add_subcommand("price", "price with every configured estimator");
  common(price);
  CLI::App* conv = app.add_subcommand("convergence", "steps x paths sweep against a reference");
  common(conv);
  conv->add_option("--steps", o.steps, "comma-separated step counts")->required();
  conv->add_option("--paths", o.paths, "comma-separated path counts")->required();
  CLI::App* group = app.add_subcommand("group", "reflection group tools");
  group->require_subcommand(1);
  CLI::App* inspect = group->add_subcommand("inspect", "dump the generated group as CSV");
  common(inspect);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*price) return cmd_price(o, out, err);
    if (*conv) return cmd_convergence(o, out, err);
    if (*inspect) return cmd_group_inspect(o, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CharacterInconsistency& e) {
    err << "group error: character inconsistency: " << e.what() << "\n";
    return kExitGroup;
  } catch (const ChamberCollision& e) {
    err << "group error: chamber collision: " << e.what() << "\n";
    return kExitGroup;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitConfig;
}

}  // namespace symbar::cli
