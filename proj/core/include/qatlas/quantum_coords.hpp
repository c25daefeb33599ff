#pragma once

#include "qatlas/quantum_diffeo.hpp"

#include <map>
#include <memory>
#include <vector>

namespace qatlas {

// Site image of p under phi, read from the source region's coordinates into
// the target region's index grid. Analytic images must land within 1e-9 of a
// lattice site.
IntVec site_image(const Diffeo& phi, const IntVec& p, const LatticePatch& source,
                  const LatticePatch& target);

// Per-branch seed map s_u carrying the shared reference region onto O_u.
struct BranchSeed {
  LatticePatch region;
  Diffeo map;
};

// Identification maps phi_{u->v} between per-branch regions. Seeded storage
// derives phi_{u->v} = s_v after s_u^{-1}, so the cocycle holds by
// construction; explicit tables may encode inconsistent families for
// validation runs.
class IdentificationFamily {
public:
  static IdentificationFamily seeded(LatticePatch reference, std::map<ConfigId, BranchSeed> seeds);
  static IdentificationFamily from_table(std::map<ConfigId, LatticePatch> regions,
                                         std::map<std::pair<ConfigId, ConfigId>, Diffeo> maps);

  const std::vector<ConfigId>& branches() const noexcept { return branch_ids_; }
  bool has_branch(const ConfigId& u) const noexcept { return regions_.count(u) != 0; }
  const LatticePatch& region(const ConfigId& u) const;
  Diffeo map(const ConfigId& u, const ConfigId& v) const;
  bool seeded_storage() const noexcept { return seeded_; }
  const LatticePatch& reference() const;
  const Diffeo& seed_map(const ConfigId& u) const;

private:
  bool seeded_ = true;
  std::vector<ConfigId> branch_ids_;
  std::map<ConfigId, LatticePatch> regions_;
  std::map<ConfigId, Diffeo> seeds_;                       // seeded mode
  std::map<std::pair<ConfigId, ConfigId>, Diffeo> table_;  // table mode
  std::shared_ptr<const LatticePatch> reference_;
};

struct ConsistencyViolation {
  ConfigId u, v, w;
  double max_deviation = 0.0;
  std::string note;
};

struct ConsistencyReport {
  std::vector<ConsistencyViolation> violations;
  bool ok() const noexcept { return violations.empty(); }
};

// Checks every map is a bijection between its declared regions, phi_{u->u} is
// the identity, and every ordered triple satisfies the cocycle (exactly for
// lattice-exact maps, 1e-9 in coordinates otherwise).
ConsistencyReport verify_consistency(const IdentificationFamily& fam);

// A coordinate tuple together with the identified point in every branch.
struct QCPoint {
  std::vector<double> x;
  std::vector<std::pair<ConfigId, IntVec>> branch_points;  // ascending branch id
};

// Identification family plus a seed chart on one branch; every other chart is
// induced through the identification maps.
class QuantumCoordinateSystem {
public:
  QuantumCoordinateSystem(IdentificationFamily fam, ConfigId seed,
                          std::vector<std::vector<double>> chart);

  const IdentificationFamily& identification() const noexcept { return *fam_; }
  std::shared_ptr<const IdentificationFamily> identification_ptr() const noexcept { return fam_; }
  const ConfigId& seed_branch() const noexcept { return seed_; }
  const std::vector<std::vector<double>>& seed_chart() const noexcept { return chart_; }
  int coord_dim() const noexcept { return coord_dim_; }

  std::vector<double> coord_of(const ConfigId& u, const IntVec& p) const;
  // Branch-point family of the coordinate tuple x (matched to 1e-9).
  QCPoint point_at(const std::vector<double>& x) const;

private:
  QuantumCoordinateSystem() = default;
  std::shared_ptr<const IdentificationFamily> fam_;
  ConfigId seed_;
  std::vector<std::vector<double>> chart_;  // aligned with region(seed).sites()
  int coord_dim_ = 0;

  friend QuantumCoordinateSystem classical_coord_transform(const QuantumCoordinateSystem& qcs,
                                                           const Diffeo& f);
  friend QuantumCoordinateSystem quantum_coord_transform(const QuantumCoordinateSystem& qcs,
                                                         const std::map<ConfigId, Diffeo>& per_branch);
};

// Renames coordinates through the bijection f on coordinate space; the
// identification family is carried over unchanged (same object).
QuantumCoordinateSystem classical_coord_transform(const QuantumCoordinateSystem& qcs,
                                                  const Diffeo& f);

// Moves each branch region through its own map: O'_u = phi_u(O_u),
// phi'_{u->v} = phi_v after phi_{u->v} after phi_u^{-1}, charts pulled along
// x'_u(p) = x_u(phi_u^{-1}(p)).
QuantumCoordinateSystem quantum_coord_transform(const QuantumCoordinateSystem& qcs,
                                                const std::map<ConfigId, Diffeo>& per_branch);

// Builds the restricted QD {phi_{u->target}} over the state's branches, and
// the state with every term restricted to its region and mapped onto
// O_target so the identified points coincide.
std::pair<RestrictedQD, ExtendedAState> to_coincidence(const ExtendedAState& state,
                                                       const QuantumCoordinateSystem& qcs,
                                                       const ConfigId& target);

struct CoverageGap {
  ConfigId branch;
  IntVec site;
};

struct CoverageReport {
  std::vector<CoverageGap> uncovered;
  bool ok() const noexcept { return uncovered.empty(); }
};

// Every site of every listed branch support must lie in some system's region.
CoverageReport atlas_coverage(const std::vector<QuantumCoordinateSystem>& atlas,
                              const std::map<ConfigId, LatticePatch>& supports);

}  // namespace qatlas
