#pragma once

#include "qatlas/extended_state.hpp"
#include "qatlas/geometry.hpp"

#include <map>
#include <tuple>
#include <vector>

namespace qatlas {

// Antisymmetric phase on ordered pairs of branch ids: theta(u,v) = -theta(v,u),
// theta(u,u) = 0. Pairs outside the table evaluate to zero.
class PhaseFn {
public:
  PhaseFn() = default;
  static PhaseFn zero() { return PhaseFn(); }
  static PhaseFn from_table(const std::vector<std::tuple<ConfigId, ConfigId, double>>& entries);

  // Table union; shared pairs must agree exactly.
  static PhaseFn merged(const PhaseFn& a, const PhaseFn& b);

  double operator()(const ConfigId& u, const ConfigId& v) const;
  bool is_zero() const noexcept { return table_.empty(); }
  std::size_t size() const noexcept { return table_.size(); }
  const std::map<std::pair<ConfigId, ConfigId>, double>& table() const noexcept { return table_; }

private:
  std::map<std::pair<ConfigId, ConfigId>, double> table_;
};

// One diffeomorphism per branch id.
struct RestrictedQD {
  std::map<ConfigId, Diffeo> maps;
  PhaseFn phase;
};

// Per-branch family {(a_alpha, phi_alpha)} with real a and sum a^2 = 1.
struct GeneralQD {
  struct Alt {
    double a = 1.0;
    Diffeo map;
  };
  std::map<ConfigId, std::vector<Alt>> maps;
  PhaseFn phase;

  void validate() const;  // per-branch normalization to 1e-12
};

// Branch action of one diffeomorphism: fields pull back through the map,
// paths relocate on the 1-D value lattice (lattice-exact maps only); an
// attached coefficient set transforms alongside.
Configuration transform_branch(const Diffeo& phi, const Configuration& u);
std::pair<Configuration, CoeffSet> transform_branch(const Diffeo& phi, const Configuration& u,
                                                    const CoeffSet& coeffs);

// Each term (u, c, A) becomes (phi_u*u, c*e^{i theta(u, phi_u*u)}, phi_u*A);
// coincident images merge by weight addition.
ExtendedAState apply_restricted(const RestrictedQD& qd, const ExtendedAState& state);
ExtendedState apply_restricted(const RestrictedQD& qd, const ExtendedState& state);

// Each term fans out into one term per family member, weight c*a_alpha*phase.
ExtendedAState apply_general(const GeneralQD& qd, const ExtendedAState& state);
ExtendedState apply_general(const GeneralQD& qd, const ExtendedState& state);

// Identity map on every catalog entry.
RestrictedQD identity_qd(const Catalog& catalog);
GeneralQD as_general(const RestrictedQD& qd);

// second after first, branchwise over the catalog: the second QD must carry a
// map for the image of every catalog branch the first one moves. The result
// carries the union of both phase tables and evaluates theta directly between
// original and final configs, not as a sum over legs.
RestrictedQD compose(const RestrictedQD& first, const RestrictedQD& second, const Catalog& catalog);
GeneralQD compose(const GeneralQD& first, const GeneralQD& second, const Catalog& catalog);

// Inverse maps keyed by the image branches; requires a collision-free action
// on this state. Round-trips the state exactly for lattice-exact maps.
RestrictedQD reverse_for(const RestrictedQD& qd, const ExtendedAState& state);
RestrictedQD reverse_for(const RestrictedQD& qd, const ExtendedState& state);

}  // namespace qatlas
