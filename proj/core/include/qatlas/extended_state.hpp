#pragma once

#include "qatlas/configuration.hpp"

#include <complex>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace qatlas {

using Complex = std::complex<double>;

// Per-site values of a named quantity attached to a term; one block per
// support site in canonical order, block size dim^(contra+cov).
struct CoeffSet {
  std::string quantity;
  int contra = 0;
  int cov = 0;
  int dim = 1;
  std::vector<double> values;

  bool scalar() const noexcept { return contra == 0 && cov == 0; }
  std::size_t block_size() const noexcept { return tensor_block_size(dim, contra + cov); }
  friend bool operator==(const CoeffSet&, const CoeffSet&) = default;
};

struct Term {
  Configuration config;
  Complex weight;
  friend bool operator==(const Term&, const Term&) = default;
};

struct ATerm {
  Configuration config;
  Complex weight;
  CoeffSet coeffs;
  friend bool operator==(const ATerm&, const ATerm&) = default;
};

// Finite superposition sum_u c_u |u]; terms keyed by ConfigId, iteration and
// reduction order is ascending id.
class ExtendedState {
public:
  ExtendedState() = default;

  // Coincident configs merge by weight addition.
  void add_term(Configuration config, Complex weight);

  const std::map<ConfigId, Term>& terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }
  bool has(const ConfigId& id) const noexcept { return terms_.count(id) != 0; }
  const Term& at(const ConfigId& id) const;

  ExtendedState normalized() const;  // drops exact-zero weights
  ExtendedState scaled(Complex factor) const;
  static ExtendedState sum(const ExtendedState& a, const ExtendedState& b);

  friend bool operator==(const ExtendedState& a, const ExtendedState& b);

private:
  std::map<ConfigId, Term> terms_;
};

// Superposition whose terms carry coefficient sets.
class ExtendedAState {
public:
  ExtendedAState() = default;

  // Coincident configs merge by weight addition; their coefficient sets must
  // agree exactly, otherwise the merge is ambiguous.
  void add_term(Configuration config, Complex weight, CoeffSet coeffs);

  const std::map<ConfigId, ATerm>& terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }
  bool has(const ConfigId& id) const noexcept { return terms_.count(id) != 0; }
  const ATerm& at(const ConfigId& id) const;

  ExtendedState drop_coeffs() const;
  ExtendedAState normalized() const;

private:
  std::map<ConfigId, ATerm> terms_;
};

// Endpoint data for particle windows: times are grid points; position indices
// optional (absent = unconstrained).
struct PathBoundary {
  Rational t_i;
  Rational t_f;
  std::optional<Int> j_i;
  std::optional<Int> j_f;
};

// Exact value conditions on named-field sites.
struct FieldBoundary {
  std::string field;
  std::vector<std::pair<IntVec, std::vector<double>>> site_values;
};

using BoundarySpec = std::variant<PathBoundary, FieldBoundary>;

using ProjectionTarget = std::variant<std::vector<SupportSpec>, BoundarySpec>;

// One term restricted to a support target; the target must be contained in
// the term's support.
ATerm restrict_term(const ATerm& term, const SupportSpec& target);

// Restriction of the state onto target supports (or a boundary window).
// Weights of all containing terms add; conflicting restricted coefficient
// values raise Ambiguous; a target contained nowhere raises NotContained.
ExtendedAState project(const ExtendedAState& state, const ProjectionTarget& target);

enum class Potential { zero, harmonic };

struct LagrangianSpec {
  double mass = 1.0;
  Potential potential = Potential::zero;
  double omega = 0.0;  // harmonic frequency
  double V(double y) const noexcept {
    return potential == Potential::zero ? 0.0 : 0.5 * mass * omega * omega * y * y;
  }
};

// Named per-site quantity to pull out of each term.
struct FieldQuantity {
  std::string name;
};
using Extractor = std::variant<LagrangianSpec, FieldQuantity>;

// Pulls the quantity out as a coefficient set; weights unchanged. Lagrangian
// values attach to the left endpoint of each step; each interval's final site
// stores 0 so that exp_int's plain sum over sites is the left-endpoint rule.
ExtendedAState extract_A(const ExtendedState& state, const Extractor& extractor);

struct ExpIntOptions {
  double hbar = 1.0;
  enum class Norm { unit, transfer_matrix } norm = Norm::unit;
  double mass = 1.0;  // used by transfer_matrix only
};

// Each weight becomes c_u * (1/Z) * exp(i S_u / hbar), S_u = sum_k L(k) mu_k
// with mu_k the site measure (time step for paths, cell volume for fields).
// transfer_matrix: 1/Z = (m/(2 pi i hbar dt))^{steps/2} * dy^{steps - intervals}.
ExtendedState exp_int(const ExtendedAState& stateL, const ExpIntOptions& opts);

// Sum of weights over terms matching the selector, ascending ConfigId,
// compensated summation.
Complex amplitude(const ExtendedState& stateS, const BoundarySpec& selector);

}  // namespace qatlas
