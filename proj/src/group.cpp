#include "symbar/group.hpp"

#include "symbar/errors.hpp"
#include "symbar/rng.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace symbar {

namespace {

constexpr double kElementTolerance = 1e-8;

std::string format_point(std::span<const double> x) {
  std::ostringstream out;
  out.precision(17);
  out << '(';
  for (std::size_t i = 0; i < x.size(); ++i) out << (i ? ", " : "") << x[i];
  out << ')';
  return out.str();
}

double span_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

}  // namespace

HyperplaneFamily::HyperplaneFamily(std::vector<Hyperplane> hyperplanes, Vector witness)
    : hyperplanes_(std::move(hyperplanes)), witness_(std::move(witness)) {
  if (hyperplanes_.empty()) throw DomainError("hyperplane family must be nonempty");
  dimension_ = hyperplanes_.front().dimension();
  for (const auto& h : hyperplanes_) {
    if (h.dimension() != dimension_) throw DomainError("hyperplanes differ in dimension");
  }
  if (static_cast<std::size_t>(witness_.size()) != dimension_) {
    throw DomainError("witness dimension does not match the hyperplanes");
  }
  if (!strictly_contains(witness_)) {
    throw DomainError("witness " + format_point({witness_.data(), dimension_}) +
                      " is not strictly inside the chamber");
  }
}

bool HyperplaneFamily::contains(const Vector& x, double tol) const {
  return std::all_of(hyperplanes_.begin(), hyperplanes_.end(),
                     [&](const Hyperplane& h) { return h.level(x) >= -tol; });
}

bool HyperplaneFamily::strictly_contains(const Vector& x, double tol) const {
  return std::all_of(hyperplanes_.begin(), hyperplanes_.end(),
                     [&](const Hyperplane& h) { return h.level(x) > tol; });
}

bool HyperplaneFamily::strictly_contains(const Vector& x) const {
  return strictly_contains(x, default_side_tolerance(x));
}

std::string GroupElement::word_string() const {
  if (word.empty()) return "e";
  std::string out;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (i) out += ' ';
    out += 's' + std::to_string(word[i]);
  }
  return out;
}

ReflectionGroup::ReflectionGroup(HyperplaneFamily family, std::size_t cap)
    : family_(std::move(family)), cap_(cap) {}

void ReflectionGroup::index_walls(const GroupElement& e) {
  const auto& t = e.isometry.linear();
  const auto& b = e.isometry.translation();
  for (const auto& h : family_.hyperplanes()) {
    Vector n = t * h.normal();
    wall_normals_.insert(wall_normals_.end(), n.data(), n.data() + n.size());
    wall_offsets_.push_back(-n.dot(b) - h.offset());
  }
}

double ReflectionGroup::chamber_level(std::size_t e, std::size_t j, std::span<const double> x) const {
  const std::size_t d = dimension();
  const std::size_t w = e * family_.size() + j;
  const double* n = wall_normals_.data() + w * d;
  double v = wall_offsets_[w];
  for (std::size_t i = 0; i < d; ++i) v += n[i] * x[i];
  return v;
}

ReflectionGroup ReflectionGroup::generate(HyperplaneFamily family, std::size_t cap) {
  GenerateOptions options;
  options.cap = cap;
  return generate(std::move(family), options);
}

ReflectionGroup ReflectionGroup::generate(HyperplaneFamily family, const GenerateOptions& options) {
  if (options.cap < 2) throw DomainError("group cap must be at least 2");
  ReflectionGroup group(std::move(family), options.cap);
  const std::size_t d = group.dimension();

  std::vector<AffineIsometry> generators;
  for (const auto& h : group.family_.hyperplanes()) generators.push_back(as_isometry(h));

  auto add = [&](AffineIsometry iso, std::vector<std::size_t> word) {
    AffineIsometry inv = iso.inverse();
    const int eta = word.size() % 2 == 0 ? 1 : -1;
    group.elements_.push_back(GroupElement{std::move(iso), std::move(inv), eta, std::move(word)});
    group.index_walls(group.elements_.back());
  };

  add(AffineIsometry::identity(d), {});
  std::deque<std::size_t> frontier{0};
  bool capped = false;
  while (!frontier.empty() && !capped) {
    const std::size_t current = frontier.front();
    frontier.pop_front();
    for (std::size_t j = 0; j < generators.size(); ++j) {
      AffineIsometry candidate = compose(group.elements_[current].isometry, generators[j]);
      std::vector<std::size_t> word = group.elements_[current].word;
      word.push_back(j);
      if (auto existing = group.find(candidate)) {
        const auto& other = group.elements_[*existing];
        if (other.word.size() % 2 != word.size() % 2) {
          GroupElement probe{candidate, candidate.inverse(), 1, word};
          throw CharacterInconsistency("words [" + probe.word_string() + "] and [" +
                                       other.word_string() +
                                       "] give the same isometry with opposite parity");
        }
        continue;
      }
      if (group.elements_.size() == group.cap_) {
        capped = true;
        break;
      }
      add(std::move(candidate), std::move(word));
      frontier.push_back(group.elements_.size() - 1);
    }
  }
  group.complete_ = !capped;

  if (options.disjointness_samples > 0) {
    group.disjointness_ = verify_disjointness(group, options.disjointness_samples, options.seed);
  }
  return group;
}

std::optional<std::size_t> ReflectionGroup::find(const AffineIsometry& g) const {
  for (std::size_t i = 0; i < elements_.size(); ++i) {
    if (elements_[i].isometry.distance(g) <= kElementTolerance) return i;
  }
  return std::nullopt;
}

bool ReflectionGroup::chamber_contains(std::size_t element, std::span<const double> x, double tol) const {
  if (x.size() != dimension()) throw DomainError("point dimension does not match group");
  for (std::size_t j = 0; j < family_.size(); ++j) {
    if (chamber_level(element, j, x) < -tol) return false;
  }
  return true;
}

bool ReflectionGroup::chamber_contains(std::size_t element, const Vector& x, double tol) const {
  return chamber_contains(element, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), tol);
}

std::optional<std::size_t> ReflectionGroup::locate_chamber(std::span<const double> x) const {
  const double tol = 1e-12 * (1.0 + span_norm(x));
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    if (chamber_contains(e, x, tol)) return e;
  }
  return std::nullopt;
}

std::optional<std::size_t> ReflectionGroup::locate_chamber(const Vector& x) const {
  return locate_chamber(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

DisjointnessReport verify_disjointness(const ReflectionGroup& group, std::size_t samples,
                                       std::uint64_t seed) {
  if (samples < 1) throw DomainError("disjointness check needs at least one sample");
  const std::size_t d = group.dimension();
  const Vector& w = group.family().witness();

  // Box spanned by the images of the witness, padded by the witness'
  // distance to the walls so every chamber is cut with positive volume.
  Vector lo = w, hi = w;
  for (const auto& e : group.elements()) {
    const Vector img = e.isometry.apply(w);
    lo = lo.cwiseMin(img);
    hi = hi.cwiseMax(img);
  }
  double pad = 1.0;
  for (const auto& h : group.family().hyperplanes()) pad = std::max(pad, 2.0 * std::abs(h.signed_distance(w)));
  lo.array() -= pad;
  hi.array() += pad;

  DisjointnessReport report;
  report.samples = samples;
  report.box_lower = lo;
  report.box_upper = hi;

  RandomStream rng(seed, 0);
  std::vector<double> x(d);
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t i = 0; i < d; ++i) x[i] = lo[i] + (hi[i] - lo[i]) * rng.uniform();
    const double tol = 1e-12 * (1.0 + span_norm(x));
    std::size_t cover = 0;
    std::size_t first = 0;
    for (std::size_t e = 0; e < group.size(); ++e) {
      bool inside = true;
      for (std::size_t j = 0; j < group.family().size() && inside; ++j) {
        inside = group.chamber_level(e, j, x) > tol;
      }
      if (!inside) continue;
      if (++cover == 1) {
        first = e;
      } else {
        throw ChamberCollision("point " + format_point(x) + " lies in the chambers of [" +
                               group[first].word_string() + "] and [" + group[e].word_string() + "]");
      }
    }
    report.max_cover = std::max(report.max_cover, cover);
    (cover == 1 ? report.covered : report.uncovered) += 1;
  }
  return report;
}

FoldResult signed_fold(const ReflectionGroup& group, const std::function<double(const Vector&)>& f,
                       const Vector& x) {
  const auto e = group.locate_chamber(x);
  if (!e) return FoldResult{0.0, false};
  const auto& g = group[*e];
  const double value = *e == 0 ? f(x) : f(g.inverse.apply(x));
  return FoldResult{g.eta * value, true};
}

}  // namespace symbar
