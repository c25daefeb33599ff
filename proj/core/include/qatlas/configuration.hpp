#pragma once

#include "qatlas/errors.hpp"
#include "qatlas/rational.hpp"

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace qatlas {

using Int = std::int64_t;
using IntVec = std::vector<Int>;

// Closed index interval [lo, hi].
struct IndexInterval {
  Int lo = 0;
  Int hi = 0;
  friend bool operator==(const IndexInterval&, const IndexInterval&) = default;
};

// Union of disjoint closed integer intervals on a rational time grid.
class TimeSupport {
public:
  TimeSupport(Rational origin, Rational step, std::vector<IndexInterval> intervals);

  const Rational& origin() const noexcept { return origin_; }
  const Rational& step() const noexcept { return step_; }
  const std::vector<IndexInterval>& intervals() const noexcept { return intervals_; }

  std::size_t size() const noexcept;
  bool contains_index(Int k) const noexcept;
  std::vector<Int> indices() const;  // ascending
  // Rank of k among the support's indices in ascending order.
  std::optional<std::size_t> position_of(Int k) const noexcept;

  bool same_grid(const TimeSupport& o) const noexcept;
  bool subset_of(const TimeSupport& o) const noexcept;  // same grid + index inclusion
  bool single_interval() const noexcept { return intervals_.size() == 1; }

  Rational time_at(Int k) const { return origin_ + step_ * Rational(k); }
  Int index_of_time(const Rational& t) const;  // exact grid point or throws

  friend bool operator==(const TimeSupport&, const TimeSupport&) = default;

private:
  Rational origin_;
  Rational step_;
  std::vector<IndexInterval> intervals_;
};

// Axis-aligned closed integer box.
struct Box {
  IntVec lo;
  IntVec hi;
  friend bool operator==(const Box&, const Box&) = default;
};

// Union of disjoint boxes on an N-dimensional lattice with per-axis rational
// spacing; the coordinate of site p along axis a is p[a] * spacing[a].
class LatticePatch {
public:
  LatticePatch(int dim, std::vector<Rational> spacing, std::vector<Box> boxes);

  int dim() const noexcept { return dim_; }
  const std::vector<Rational>& spacing() const noexcept { return spacing_; }
  const std::vector<Box>& boxes() const noexcept { return boxes_; }

  std::size_t site_count() const noexcept { return site_count_; }
  bool contains_site(const IntVec& p) const noexcept;
  // Canonical enumeration: boxes in sorted order, lexicographic within a box.
  const std::vector<IntVec>& sites() const noexcept { return sites_; }
  std::optional<std::size_t> site_index(const IntVec& p) const noexcept;

  bool same_geometry(const LatticePatch& o) const noexcept;  // dim + spacing
  bool subset_of(const LatticePatch& o) const noexcept;
  // All 2*dim axis neighbors present.
  bool interior_site(const IntVec& p) const noexcept;
  // Margin m: all sites within Chebyshev distance m present.
  bool has_margin(const IntVec& p, Int m) const noexcept;

  std::vector<double> coords_of(const IntVec& p) const;

  static LatticePatch from_sites(int dim, std::vector<Rational> spacing, std::vector<IntVec> sites);

  friend bool operator==(const LatticePatch& a, const LatticePatch& b) {
    return a.dim_ == b.dim_ && a.spacing_ == b.spacing_ && a.boxes_ == b.boxes_;
  }

private:
  int dim_;
  std::vector<Rational> spacing_;
  std::vector<Box> boxes_;
  std::size_t site_count_ = 0;
  std::vector<IntVec> sites_;
  std::map<IntVec, std::size_t> index_;
};

// 1-D position lattice for particle paths: y_j = y_min + j * dy, j in [0, count).
struct PositionLattice {
  Rational y_min;
  Rational dy;
  Int count = 0;
  double y_at(Int j) const { return (y_min + dy * Rational(j)).to_double(); }
  friend bool operator==(const PositionLattice&, const PositionLattice&) = default;
};

// A particle history: position-lattice index at every support index.
class PathConfig {
public:
  PathConfig(TimeSupport support, PositionLattice lattice, std::vector<Int> values);

  const TimeSupport& support() const noexcept { return support_; }
  const PositionLattice& lattice() const noexcept { return lattice_; }
  const std::vector<Int>& values() const noexcept { return values_; }

  Int value_at(Int k) const;  // by grid index
  double y_at(Int k) const { return lattice_.y_at(value_at(k)); }

  friend bool operator==(const PathConfig&, const PathConfig&) = default;

private:
  TimeSupport support_;
  PositionLattice lattice_;
  std::vector<Int> values_;  // aligned with support indices, ascending
};

// Per-site tensor component blocks in canonical site order; contravariant
// slots index first. Block size is dim^(contra+cov).
struct TensorData {
  int contra = 0;
  int cov = 0;
  std::vector<double> comps;
  int rank() const noexcept { return contra + cov; }
  friend bool operator==(const TensorData&, const TensorData&) = default;
};

std::size_t tensor_block_size(int dim, int rank);

// Fields on a lattice patch; the metric "g" is mandatory, symmetric, and
// Lorentzian (-,+,...,+) at every site.
class FieldConfig {
public:
  static constexpr std::string_view kMetric = "g";

  FieldConfig(LatticePatch patch, std::map<std::string, TensorData> fields);

  const LatticePatch& patch() const noexcept { return patch_; }
  const std::map<std::string, TensorData>& fields() const noexcept { return fields_; }
  bool has_field(const std::string& name) const noexcept { return fields_.count(name) != 0; }
  const TensorData& field(const std::string& name) const;
  const TensorData& metric() const { return field(std::string(kMetric)); }

  std::span<const double> block(const std::string& name, std::size_t site_rank) const;
  std::span<const double> block_at(const std::string& name, const IntVec& site) const;

  friend bool operator==(const FieldConfig&, const FieldConfig&) = default;

private:
  LatticePatch patch_;
  std::map<std::string, TensorData> fields_;
};

using Configuration = std::variant<PathConfig, FieldConfig>;

enum class ConfigKind { path, field };
ConfigKind kind_of(const Configuration& c) noexcept;

const TimeSupport* path_support(const Configuration& c) noexcept;
const LatticePatch* field_patch(const Configuration& c) noexcept;

// Opaque 128-bit identity; content-hashed for concrete configurations,
// label-derived for abstract catalog entries.
struct ConfigId {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;
  friend auto operator<=>(const ConfigId&, const ConfigId&) = default;
};

ConfigId config_id(const Configuration& c);
ConfigId label_id(std::string_view label);
std::string to_hex(const ConfigId& id);
ConfigId id_from_hex(std::string_view hex);

using SupportSpec = std::variant<TimeSupport, LatticePatch>;

// v restricted to s; s must be a subset of v's support on the same grid.
Configuration restrict_config(const Configuration& v, const SupportSpec& s);

// u is a restriction of v: support inclusion plus exact value agreement.
bool contains(const Configuration& u, const Configuration& v);

// Asymmetric containment delta [u|v]: 1 iff contains(u, v).
int bracket(const Configuration& u, const Configuration& v);

// Registered configurations with equivalence tags and declared parent links.
class Catalog {
public:
  ConfigId add(Configuration c);
  bool has(const ConfigId& id) const noexcept { return configs_.count(id) != 0; }
  const Configuration& at(const ConfigId& id) const;
  std::vector<ConfigId> ids() const;
  std::size_t size() const noexcept { return configs_.size(); }

  void tag_equiv(const ConfigId& id, std::string tag);
  std::optional<std::string> equiv_tag(const ConfigId& id) const;

  // Declares child subset-of parent; verified via contains().
  void declare_parent(const ConfigId& child, const ConfigId& parent);
  const std::vector<ConfigId>& parents(const ConfigId& id) const;

private:
  std::map<ConfigId, Configuration> configs_;
  std::map<ConfigId, std::string> equiv_tags_;
  std::map<ConfigId, std::vector<ConfigId>> parents_;
};

}  // namespace qatlas
