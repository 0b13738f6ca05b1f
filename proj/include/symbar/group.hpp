#pragma once

// Reflection groups generated by a family of hyperplanes, their chambers
// g * Sigma and the word-parity character.
//
// The fundamental chamber Sigma is the intersection of the open positive
// half spaces of the family. Elements are enumerated breadth first from the
// identity, so element 0 is always the identity and element i + 1 is the
// reflection in hyperplane i.

#include "symbar/geometry.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace symbar {

class HyperplaneFamily {
 public:
  // The witness must lie strictly inside every half space; it certifies that
  // the chamber is nonempty. Throws DomainError otherwise.
  HyperplaneFamily(std::vector<Hyperplane> hyperplanes, Vector witness);

  const std::vector<Hyperplane>& hyperplanes() const { return hyperplanes_; }
  const Hyperplane& operator[](std::size_t i) const { return hyperplanes_[i]; }
  std::size_t size() const { return hyperplanes_.size(); }
  std::size_t dimension() const { return dimension_; }
  const Vector& witness() const { return witness_; }

  // Closed chamber relaxed by tol: every level >= -tol.
  bool contains(const Vector& x, double tol) const;
  // Open chamber shrunk by tol: every level > tol.
  bool strictly_contains(const Vector& x, double tol) const;
  bool strictly_contains(const Vector& x) const;

 private:
  std::vector<Hyperplane> hyperplanes_;
  Vector witness_;
  std::size_t dimension_;
};

struct GroupElement {
  AffineIsometry isometry;
  AffineIsometry inverse;
  int eta;                        // (-1)^word.size()
  std::vector<std::size_t> word;  // isometry = s[word[0]] o s[word[1]] o ...

  std::string word_string() const;
};

struct GenerateOptions {
  std::size_t cap = 64;
  // Disjointness samples drawn right after closure; 0 skips the check.
  std::size_t disjointness_samples = 10000;
  std::uint64_t seed = 0x5eed5eedULL;
};

struct DisjointnessReport {
  std::size_t samples = 0;
  std::size_t max_cover = 0;   // most open chambers covering one sample
  std::size_t covered = 0;     // samples inside exactly one chamber
  std::size_t uncovered = 0;   // samples inside none (outside the enumeration)
  Vector box_lower;
  Vector box_upper;
};

class ReflectionGroup {
 public:
  // Breadth-first closure over right multiplication by generators.
  // Throws CharacterInconsistency if an isometry is reached by words of
  // both parities, ChamberCollision if the sampled chambers overlap.
  static ReflectionGroup generate(HyperplaneFamily family, const GenerateOptions& options);
  static ReflectionGroup generate(HyperplaneFamily family, std::size_t cap = 64);

  const HyperplaneFamily& family() const { return family_; }
  const std::vector<GroupElement>& elements() const { return elements_; }
  const GroupElement& operator[](std::size_t i) const { return elements_[i]; }
  std::size_t size() const { return elements_.size(); }
  std::size_t dimension() const { return family_.dimension(); }
  bool complete() const { return complete_; }
  std::size_t cap() const { return cap_; }
  const DisjointnessReport& disjointness() const { return disjointness_; }

  // g^-1 x lies in the closed chamber relaxed by tol.
  bool chamber_contains(std::size_t element, const Vector& x, double tol) const;
  bool chamber_contains(std::size_t element, std::span<const double> x, double tol) const;

  // First element in enumeration order whose closed chamber holds x, with
  // the default side tolerance. nullopt means x is outside every enumerated
  // chamber, which can only happen for an incomplete group.
  std::optional<std::size_t> locate_chamber(const Vector& x) const;
  std::optional<std::size_t> locate_chamber(std::span<const double> x) const;

  // Index of the element equal to g (within 1e-8), if enumerated.
  std::optional<std::size_t> find(const AffineIsometry& g) const;

 private:
  ReflectionGroup(HyperplaneFamily family, std::size_t cap);
  void index_walls(const GroupElement& e);
  // Signed level of wall j of chamber e at x; equals level_j(e^-1 x).
  double chamber_level(std::size_t e, std::size_t j, std::span<const double> x) const;

  friend DisjointnessReport verify_disjointness(const ReflectionGroup&, std::size_t, std::uint64_t);

  HyperplaneFamily family_;
  std::vector<GroupElement> elements_;
  bool complete_ = false;
  std::size_t cap_;
  DisjointnessReport disjointness_;
  // Chamber e has walls <n_ej, x> + o_ej with n_ej = T_e alpha_j.
  std::vector<double> wall_normals_;
  std::vector<double> wall_offsets_;
};

// Samples points from a box around the enumerated chambers and checks that no
// point lies in two open chambers. Throws ChamberCollision with the
// offending point and words otherwise.
DisjointnessReport verify_disjointness(const ReflectionGroup& group, std::size_t samples,
                                       std::uint64_t seed);

struct FoldResult {
  double value = 0.0;
  bool covered = true;
};

// sum_g eta(g) f(g^-1 x) for f supported in the fundamental chamber. Only the
// chamber holding x contributes; an uncovered x contributes 0.
FoldResult signed_fold(const ReflectionGroup& group, const std::function<double(const Vector&)>& f,
                       const Vector& x);

}  // namespace symbar
