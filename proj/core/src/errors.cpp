#include "qatlas/errors.hpp"

namespace qatlas {

std::string_view errc_name(Errc c) noexcept {
  switch (c) {
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::support_not_contained: return "SupportNotContained";
    case Errc::kind_mismatch: return "KindMismatch";
    case Errc::not_contained: return "NotContained";
    case Errc::ambiguous: return "Ambiguous";
    case Errc::non_scalar_coeff: return "NonScalarCoeff";
    case Errc::empty_selection: return "EmptySelection";
    case Errc::unknown_quantity: return "UnknownQuantity";
    case Errc::too_large: return "TooLarge";
    case Errc::disconnected_support: return "DisconnectedSupport";
    case Errc::caustic_encountered: return "CausticEncountered";
    case Errc::not_invertible_on_patch: return "NotInvertibleOnPatch";
    case Errc::boundary_site: return "BoundarySite";
    case Errc::singular_metric: return "SingularMetric";
    case Errc::wrong_signature: return "WrongSignature";
    case Errc::missing_branch_map: return "MissingBranchMap";
    case Errc::bad_normalization: return "BadNormalization";
    case Errc::domain_mismatch: return "DomainMismatch";
    case Errc::irreversible: return "Irreversible";
    case Errc::bad_phase_table: return "BadPhaseTable";
    case Errc::not_invertible: return "NotInvertible";
    case Errc::branch_mismatch: return "BranchMismatch";
    case Errc::insufficient_margin: return "InsufficientMargin";
    case Errc::cones_not_aligned: return "ConesNotAligned";
    case Errc::sampler_failure: return "SamplerFailure";
    case Errc::boundary_only_support: return "BoundaryOnlySupport";
    case Errc::not_in_chart: return "NotInChart";
    case Errc::branch_not_in_chart: return "BranchNotInChart";
    case Errc::pairing_mismatch: return "PairingMismatch";
    case Errc::missing_weight: return "MissingWeight";
    case Errc::schema_error: return "SchemaError";
    case Errc::io_failure: return "IOFailure";
  }
  return "UnknownError";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

void fail(Errc code, const std::string& message) { throw Error(code, message); }

}  // namespace qatlas
