#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qatlas/quantum_coords.hpp"

namespace qatlas {

using QPoint = std::int64_t;

// One chart: a member set and the grid tuple each member maps to. The chart
// map carries a member to (projection, tuple).
struct BundleChart {
  std::vector<QPoint> members;
  std::map<QPoint, std::vector<double>> coord;
};

struct EquivPair {
  ConfigId u;
  ConfigId v;
  LatticeMap witness;  // realizes M(v) = witness(M(u))
};

struct OrderPair {
  ConfigId u;
  ConfigId v;  // u contained in v
};

// Finite quantum fibre bundle. The equivalence relation is exactly the stored
// pair set; containment is the stored pairs plus the diagonal.
struct QuantumFibreBundle {
  std::vector<QPoint> total;
  std::vector<ConfigId> base;
  std::map<QPoint, ConfigId> projection;
  std::map<ConfigId, LatticePatch> fibres;
  std::map<QPoint, std::pair<ConfigId, IntVec>> pointmap;
  std::vector<std::vector<double>> grid;  // the shared coordinate tuple set V
  std::vector<BundleChart> charts;
  std::vector<EquivPair> equiv;
  std::vector<OrderPair> order;
  std::map<ConfigId, Configuration> configs;  // optional field data per branch
};

struct BundleViolation {
  std::string axiom;
  std::string detail;
};

struct BundleReport {
  std::vector<BundleViolation> violations;  // hard axioms
  std::vector<BundleViolation> smoothness;  // adjacency surrogate, reported separately
  bool ok() const noexcept { return violations.empty(); }
};

// Pointmap bijectivity, chart cover, per-branch cover, chart-map bijectivity
// onto the shared grid, and overlap transition checks.
BundleReport validate_basic(const QuantumFibreBundle& bundle);

// validate_basic plus relation axioms: equivalence transitivity and witnesses,
// containment of fibres, and the completeness condition
// (u contained-in v equivalent-to w implies some y with u equivalent-to y
// contained-in w).
BundleReport validate_full(const QuantumFibreBundle& bundle);

// Grid tuple of q in chart i.
std::vector<double> coordinate(const QuantumFibreBundle& bundle, std::size_t i, QPoint q);

// Site table O_ui -> O_vi through the shared chart tuple.
std::map<IntVec, IntVec> derive_identification(const QuantumFibreBundle& bundle, std::size_t i,
                                               const ConfigId& u, const ConfigId& v);

// Identification family over the branches of chart i, with each derived site
// table fitted to a lattice-exact map.
IdentificationFamily derived_family(const QuantumFibreBundle& bundle, std::size_t i);

// Uniform-rank tensor data over the bundle's points, components in the fibre
// frame.
struct QuantumTensorField {
  int dim = 1;
  int contra = 0;
  int cov = 0;
  std::map<QPoint, std::vector<double>> comps;

  int rank() const noexcept { return contra + cov; }
  std::size_t block_size() const noexcept {
    return tensor_block_size(dim, rank());
  }
};

// Paired slots, one per contraction: (slot in B, slot in C) with opposite
// variance. Slots count contravariant first, then covariant.
using SlotPairing = std::vector<std::pair<int, int>>;

// Pointwise Einstein summation; result slots are B's free slots then C's.
QuantumTensorField contract(const QuantumTensorField& B, const QuantumTensorField& C,
                            const SlotPairing& pairing);

// Per-branch coeffsets gathered through the pointmap. Branches without
// attached config data get a constant Minkowski metric on their fibre.
ExtendedAState bundle_to_extended_state(const QuantumFibreBundle& bundle,
                                        const QuantumTensorField& A,
                                        const std::map<ConfigId, Complex>& weights,
                                        const std::string& quantity = "A");

}  // namespace qatlas
