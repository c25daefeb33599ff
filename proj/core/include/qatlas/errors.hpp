#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qatlas {

enum class Errc {
  invalid_argument,
  support_not_contained,
  kind_mismatch,
  not_contained,
  ambiguous,
  non_scalar_coeff,
  empty_selection,
  unknown_quantity,
  too_large,
  disconnected_support,
  caustic_encountered,
  not_invertible_on_patch,
  boundary_site,
  singular_metric,
  wrong_signature,
  missing_branch_map,
  bad_normalization,
  domain_mismatch,
  irreversible,
  bad_phase_table,
  not_invertible,
  branch_mismatch,
  insufficient_margin,
  cones_not_aligned,
  sampler_failure,
  boundary_only_support,
  not_in_chart,
  branch_not_in_chart,
  pairing_mismatch,
  missing_weight,
  schema_error,
  io_failure,
};

// Stable identifier used in thrown messages and structured CLI reports.
std::string_view errc_name(Errc c) noexcept;

class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& message);
  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& message);

inline void require(bool cond, Errc code, const std::string& message) {
  if (!cond) fail(code, message);
}

}  // namespace qatlas
