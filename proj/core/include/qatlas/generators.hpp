#pragma once

#include "qatlas/qep_alignment.hpp"
#include "qatlas/quantum_manifold.hpp"
#include "qatlas/rng.hpp"

namespace qatlas::gen {

// Field state on small patches: per-term metric JtηJ with J affine in the
// coordinates, a scalar field "phi", and a scalar coeffset "A".
ExtendedAState random_field_astate(Rng& rng, int dim, std::size_t terms);

// Lattice-exact restricted QD (theta = 0) covering every branch of the state;
// path branches get range-safe shifts.
RestrictedQD random_lattice_qd(Rng& rng, const ExtendedAState& state);

using PhaseTable = std::map<std::pair<ConfigId, ConfigId>, double>;

// Antisymmetric table over fresh random ids.
PhaseTable random_phase_table(Rng& rng, std::size_t pairs);

// Breaks antisymmetry: either a nonzero diagonal entry or a mismatched
// reverse pair. The result must be rejected by the phase constructor.
PhaseTable corrupt_phase_table(Rng& rng, PhaseTable table);

// Alignment task family: conformally scaled boosted Minkowski metrics with
// bounded quadratic perturbations, lattice-translation identifications,
// validation point at the reference center.
AlignmentTask random_alignment_task(Rng& rng, int dim, std::size_t branches);

struct ContractionCase {
  QuantumTensorField B;
  QuantumTensorField C;
  SlotPairing pairing;
};

// Ranks up to 3 each, dimension up to 4, matched point sets.
ContractionCase random_contraction(Rng& rng);

}  // namespace qatlas::gen
