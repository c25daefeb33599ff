#pragma once

#include "qatlas/beables.hpp"
#include "qatlas/qep_alignment.hpp"
#include "qatlas/quantum_manifold.hpp"

#include <nlohmann/json.hpp>

namespace qatlas {

using Json = nlohmann::ordered_json;

// Serializes with every floating-point number printed to 17 significant
// digits, so reruns are byte-identical and values round-trip exactly.
std::string dump_json(const Json& j, int indent = 2);

Json json_of(const Rational& r);
Json json_of(const LatticePatch& patch);
Json json_of(const TensorData& t);
Json json_of(const TimeSupport& ts);
Json json_of(const Configuration& c);
Json json_of(const CoeffSet& a);
Json json_of(const ExtendedState& s);
Json json_of(const ExtendedAState& s);
Json json_of(const LatticeMap& m);
Json json_of(const QuadraticMap& m);
Json json_of(const Diffeo& phi);
Json json_of(const RestrictedQD& qd);
Json json_of(const QuantumFibreBundle& bundle);
Json json_of(const QuantumTensorField& field);

Json json_of(const AlignmentReport& r);
Json json_of(const ConsistencyReport& r);
Json json_of(const BundleReport& r);
Json json_of(const InvarianceReport& r);

Rational rational_from(const Json& j);
LatticePatch patch_from(const Json& j);
Configuration config_from(const Json& j);
CoeffSet coeffs_from(const Json& j);
ExtendedState state_from(const Json& j);
ExtendedAState astate_from(const Json& j);
LatticeMap lattice_map_from(const Json& j);
QuadraticMap quadratic_map_from(const Json& j);
Diffeo diffeo_from(const Json& j);
RestrictedQD restricted_qd_from(const Json& j);
QuantumFibreBundle bundle_from(const Json& j);
QuantumTensorField tensor_field_from(const Json& j);
SlotPairing pairing_from(const Json& j);

}  // namespace qatlas
