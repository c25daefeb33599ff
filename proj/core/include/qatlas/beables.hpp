#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "qatlas/quantum_diffeo.hpp"

namespace qatlas {

// Per-site scalar built from the fields by index-closed contractions, with an
// optional finite-difference derivative layer.
struct ScalarConstructor {
  enum class Kind {
    field_value,   // rank-0 field read directly
    metric_trace,  // sum of the metric's diagonal components
    norm2,         // g^{mn} w_m w_n for a rank-(0,1) field w
    grad_norm2,    // g^{mn} (d_m f)(d_n f) for a rank-0 field f, central differences
  };
  Kind kind = Kind::metric_trace;
  std::string field = "g";
};

using ScalarList = std::vector<ScalarConstructor>;

// The K-tuples S(p) over interior sites, deduplicated.
std::set<std::vector<double>> scalar_plot(const FieldConfig& u, const ScalarList& S);

// Values compare elementwise; a length mismatch is an unconditional violation.
using BeableValue = std::vector<double>;

struct BeableFn {
  std::string name;
  bool discrete = false;  // exact comparison instead of the 1e-9 tolerance
  std::function<BeableValue(const ExtendedAState&)> fn;
};

// Number of unordered interior-site pairs with equal S-tuples, summed over
// terms.
BeableFn coincidence_counter(ScalarList S);
// Sorted per-term (site count, adjacency component count) pairs. Box counts
// depend on the box normalization and are not relabeling invariant; adjacency
// components are.
BeableFn support_signature();
// Union of the per-term scalar plots, flattened in sorted order.
BeableFn region_plot(ScalarList S);
// Field component at one fixed lattice site, summed over covering terms.
// Deliberately not invariant under relocation.
BeableFn fixed_site_value(IntVec site, std::string field, std::size_t comp);

using QDSampler = std::function<RestrictedQD(std::uint64_t seed, const ExtendedAState&)>;

struct InvarianceViolation {
  std::size_t sample = 0;
  double deviation = 0.0;
};

struct InvarianceReport {
  std::size_t samples = 0;
  std::vector<InvarianceViolation> violations;
  double max_deviation = 0.0;
  bool ok() const noexcept { return violations.empty(); }
};

// Evaluates B before and after n sampled quantum diffeomorphisms; the check is
// sampled falsification, not a proof.
InvarianceReport is_beable_sampled(const BeableFn& B, const ExtendedAState& state,
                                   const QDSampler& sampler, std::size_t n,
                                   std::uint64_t root_seed);

// Axis-aligned box in scalar space; infinities allowed, bounds closed.
struct ScalarBox {
  std::vector<double> lo;
  std::vector<double> hi;
};

using ScalarRegion = std::vector<ScalarBox>;

// Drops every term whose scalar plot is not a subset of A. A term with an
// empty plot has nothing outside A and is kept.
ExtendedState select_region(const ExtendedState& state, const ScalarList& S,
                            const ScalarRegion& A);
ExtendedAState select_region(const ExtendedAState& state, const ScalarList& S,
                             const ScalarRegion& A);

// True iff B(state) matches beta: exact for discrete B, 1e-9 otherwise.
bool beable_constraint(const BeableFn& B, const BeableValue& beta, const ExtendedAState& state);

}  // namespace qatlas
