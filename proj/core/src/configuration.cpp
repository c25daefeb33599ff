#include "qatlas/configuration.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstring>

namespace qatlas {

// ---------------------------------------------------------------- TimeSupport

TimeSupport::TimeSupport(Rational origin, Rational step, std::vector<IndexInterval> intervals)
    : origin_(origin), step_(step), intervals_(std::move(intervals)) {
  require(step_.positive(), Errc::invalid_argument, "time step must be positive");
  require(!intervals_.empty(), Errc::invalid_argument, "time support must be nonempty");
  std::sort(intervals_.begin(), intervals_.end(),
            [](const IndexInterval& a, const IndexInterval& b) { return a.lo < b.lo; });
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    require(intervals_[i].lo <= intervals_[i].hi, Errc::invalid_argument, "empty index interval");
    if (i > 0)
      require(intervals_[i - 1].hi < intervals_[i].lo, Errc::invalid_argument,
              "overlapping index intervals");
  }
}

std::size_t TimeSupport::size() const noexcept {
  std::size_t n = 0;
  for (const auto& iv : intervals_) n += static_cast<std::size_t>(iv.hi - iv.lo + 1);
  return n;
}

bool TimeSupport::contains_index(Int k) const noexcept {
  for (const auto& iv : intervals_)
    if (k >= iv.lo && k <= iv.hi) return true;
  return false;
}

std::vector<Int> TimeSupport::indices() const {
  std::vector<Int> out;
  out.reserve(size());
  for (const auto& iv : intervals_)
    for (Int k = iv.lo; k <= iv.hi; ++k) out.push_back(k);
  return out;
}

std::optional<std::size_t> TimeSupport::position_of(Int k) const noexcept {
  std::size_t base = 0;
  for (const auto& iv : intervals_) {
    if (k >= iv.lo && k <= iv.hi) return base + static_cast<std::size_t>(k - iv.lo);
    base += static_cast<std::size_t>(iv.hi - iv.lo + 1);
  }
  return std::nullopt;
}

bool TimeSupport::same_grid(const TimeSupport& o) const noexcept {
  return origin_ == o.origin_ && step_ == o.step_;
}

bool TimeSupport::subset_of(const TimeSupport& o) const noexcept {
  if (!same_grid(o)) return false;
  for (const auto& iv : intervals_)
    for (Int k = iv.lo; k <= iv.hi; ++k)
      if (!o.contains_index(k)) return false;
  return true;
}

Int TimeSupport::index_of_time(const Rational& t) const { return exact_index(t, origin_, step_); }

// --------------------------------------------------------------- LatticePatch

namespace {

bool boxes_intersect(const Box& a, const Box& b) {
  for (std::size_t d = 0; d < a.lo.size(); ++d)
    if (a.hi[d] < b.lo[d] || b.hi[d] < a.lo[d]) return false;
  return true;
}

}  // namespace

LatticePatch::LatticePatch(int dim, std::vector<Rational> spacing, std::vector<Box> boxes)
    : dim_(dim), spacing_(std::move(spacing)), boxes_(std::move(boxes)) {
  require(dim_ >= 1, Errc::invalid_argument, "patch dimension must be >= 1");
  require(spacing_.size() == static_cast<std::size_t>(dim_), Errc::invalid_argument,
          "spacing size must equal dim");
  for (const auto& s : spacing_)
    require(s.positive(), Errc::invalid_argument, "patch spacing must be positive");
  require(!boxes_.empty(), Errc::invalid_argument, "patch must have at least one box");
  for (const auto& b : boxes_) {
    require(b.lo.size() == static_cast<std::size_t>(dim_) &&
                b.hi.size() == static_cast<std::size_t>(dim_),
            Errc::invalid_argument, "box dimension mismatch");
    for (int d = 0; d < dim_; ++d)
      require(b.lo[d] <= b.hi[d], Errc::invalid_argument, "empty box");
  }
  std::sort(boxes_.begin(), boxes_.end(),
            [](const Box& a, const Box& b) { return a.lo != b.lo ? a.lo < b.lo : a.hi < b.hi; });
  for (std::size_t i = 0; i < boxes_.size(); ++i)
    for (std::size_t j = i + 1; j < boxes_.size(); ++j)
      require(!boxes_intersect(boxes_[i], boxes_[j]), Errc::invalid_argument,
              "patch boxes must be disjoint");

  for (const auto& b : boxes_) {
    std::size_t n = 1;
    for (int d = 0; d < dim_; ++d) n *= static_cast<std::size_t>(b.hi[d] - b.lo[d] + 1);
    require(n < (1u << 24), Errc::invalid_argument, "patch too large");
    site_count_ += n;
  }
  require(site_count_ < (1u << 24), Errc::invalid_argument, "patch too large");

  sites_.reserve(site_count_);
  for (const auto& b : boxes_) {
    IntVec p = b.lo;
    for (;;) {
      sites_.push_back(p);
      int d = dim_ - 1;
      while (d >= 0) {
        if (p[d] < b.hi[d]) {
          ++p[d];
          break;
        }
        p[d] = b.lo[d];
        --d;
      }
      if (d < 0) break;
    }
  }
  for (std::size_t i = 0; i < sites_.size(); ++i) index_.emplace(sites_[i], i);
}

bool LatticePatch::contains_site(const IntVec& p) const noexcept {
  return index_.count(p) != 0;
}

std::optional<std::size_t> LatticePatch::site_index(const IntVec& p) const noexcept {
  auto it = index_.find(p);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool LatticePatch::same_geometry(const LatticePatch& o) const noexcept {
  return dim_ == o.dim_ && spacing_ == o.spacing_;
}

bool LatticePatch::subset_of(const LatticePatch& o) const noexcept {
  if (!same_geometry(o)) return false;
  for (const auto& p : sites_)
    if (!o.contains_site(p)) return false;
  return true;
}

bool LatticePatch::interior_site(const IntVec& p) const noexcept {
  if (!contains_site(p)) return false;
  IntVec q = p;
  for (int d = 0; d < dim_; ++d) {
    q[d] = p[d] - 1;
    if (!contains_site(q)) return false;
    q[d] = p[d] + 1;
    if (!contains_site(q)) return false;
    q[d] = p[d];
  }
  return true;
}

bool LatticePatch::has_margin(const IntVec& p, Int m) const noexcept {
  if (!contains_site(p)) return false;
  IntVec q(static_cast<std::size_t>(dim_), 0);
  // Walk the Chebyshev ball of radius m.
  std::vector<Int> off(static_cast<std::size_t>(dim_), -m);
  for (;;) {
    for (int d = 0; d < dim_; ++d) q[d] = p[d] + off[d];
    if (!contains_site(q)) return false;
    int d = dim_ - 1;
    while (d >= 0) {
      if (off[d] < m) {
        ++off[d];
        break;
      }
      off[d] = -m;
      --d;
    }
    if (d < 0) break;
  }
  return true;
}

std::vector<double> LatticePatch::coords_of(const IntVec& p) const {
  std::vector<double> x(static_cast<std::size_t>(dim_));
  for (int d = 0; d < dim_; ++d)
    x[d] = (spacing_[d] * Rational(p[d])).to_double();
  return x;
}

LatticePatch LatticePatch::from_sites(int dim, std::vector<Rational> spacing,
                                      std::vector<IntVec> sites) {
  require(!sites.empty(), Errc::invalid_argument, "from_sites with empty site set");
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  // Maximal runs along the last axis; sorted order keeps runs contiguous.
  std::vector<Box> boxes;
  std::size_t i = 0;
  while (i < sites.size()) {
    std::size_t j = i + 1;
    while (j < sites.size()) {
      bool same_prefix = true;
      for (int d = 0; d + 1 < dim; ++d)
        if (sites[j][d] != sites[i][d]) {
          same_prefix = false;
          break;
        }
      if (!same_prefix || sites[j][dim - 1] != sites[j - 1][dim - 1] + 1) break;
      ++j;
    }
    boxes.push_back(Box{sites[i], sites[j - 1]});
    i = j;
  }
  return LatticePatch(dim, std::move(spacing), std::move(boxes));
}

// ----------------------------------------------------------------- PathConfig

PathConfig::PathConfig(TimeSupport support, PositionLattice lattice, std::vector<Int> values)
    : support_(std::move(support)), lattice_(std::move(lattice)), values_(std::move(values)) {
  require(lattice_.dy.positive(), Errc::invalid_argument, "position step must be positive");
  require(lattice_.count >= 2, Errc::invalid_argument, "position lattice needs >= 2 sites");
  require(values_.size() == support_.size(), Errc::invalid_argument,
          "path values must cover the support exactly");
  for (const Int j : values_)
    require(j >= 0 && j < lattice_.count, Errc::invalid_argument,
            "path value outside the position lattice");
}

Int PathConfig::value_at(Int k) const {
  const auto pos = support_.position_of(k);
  require(pos.has_value(), Errc::invalid_argument, "index not in path support");
  return values_[*pos];
}

// ---------------------------------------------------------------- FieldConfig

std::size_t tensor_block_size(int dim, int rank) {
  std::size_t n = 1;
  for (int i = 0; i < rank; ++i) n *= static_cast<std::size_t>(dim);
  return n;
}

namespace {

void check_metric(const LatticePatch& patch, const TensorData& g) {
  const int dim = patch.dim();
  require(g.contra == 0 && g.cov == 2, Errc::invalid_argument, "metric must have rank (0,2)");
  const std::size_t bs = tensor_block_size(dim, 2);
  Eigen::MatrixXd m(dim, dim);
  for (std::size_t s = 0; s < patch.site_count(); ++s) {
    const double* blk = g.comps.data() + s * bs;
    double scale = 0.0;
    for (std::size_t i = 0; i < bs; ++i) scale = std::max(scale, std::abs(blk[i]));
    require(scale > 0.0, Errc::invalid_argument, "zero metric block");
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        m(i, j) = blk[i * dim + j];
        require(std::abs(blk[i * dim + j] - blk[j * dim + i]) <= 1e-9 * scale,
                Errc::invalid_argument, "metric block not symmetric");
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    int neg = 0;
    for (int i = 0; i < dim; ++i) {
      require(std::abs(es.eigenvalues()[i]) > 1e-12 * scale, Errc::invalid_argument,
              "degenerate metric block");
      if (es.eigenvalues()[i] < 0.0) ++neg;
    }
    require(neg == 1, Errc::invalid_argument, "metric block not Lorentzian");
  }
}

}  // namespace

FieldConfig::FieldConfig(LatticePatch patch, std::map<std::string, TensorData> fields)
    : patch_(std::move(patch)), fields_(std::move(fields)) {
  auto git = fields_.find(std::string(kMetric));
  require(git != fields_.end(), Errc::invalid_argument, "field configuration needs a metric \"g\"");
  for (const auto& [name, data] : fields_) {
    require(data.contra >= 0 && data.cov >= 0, Errc::invalid_argument, "negative tensor rank");
    const std::size_t expect =
        patch_.site_count() * tensor_block_size(patch_.dim(), data.rank());
    require(data.comps.size() == expect, Errc::invalid_argument,
            "field \"" + name + "\" has wrong component count");
    for (const double v : data.comps)
      require(std::isfinite(v), Errc::invalid_argument, "non-finite field component");
  }
  check_metric(patch_, git->second);
}

const TensorData& FieldConfig::field(const std::string& name) const {
  auto it = fields_.find(name);
  require(it != fields_.end(), Errc::unknown_quantity, "no field named \"" + name + "\"");
  return it->second;
}

std::span<const double> FieldConfig::block(const std::string& name, std::size_t site_rank) const {
  const TensorData& d = field(name);
  const std::size_t bs = tensor_block_size(patch_.dim(), d.rank());
  return {d.comps.data() + site_rank * bs, bs};
}

std::span<const double> FieldConfig::block_at(const std::string& name, const IntVec& site) const {
  const auto idx = patch_.site_index(site);
  require(idx.has_value(), Errc::invalid_argument, "site not in patch");
  return block(name, *idx);
}

// -------------------------------------------------------------- Configuration

ConfigKind kind_of(const Configuration& c) noexcept {
  return std::holds_alternative<PathConfig>(c) ? ConfigKind::path : ConfigKind::field;
}

const TimeSupport* path_support(const Configuration& c) noexcept {
  if (const auto* p = std::get_if<PathConfig>(&c)) return &p->support();
  return nullptr;
}

const LatticePatch* field_patch(const Configuration& c) noexcept {
  if (const auto* f = std::get_if<FieldConfig>(&c)) return &f->patch();
  return nullptr;
}

// --------------------------------------------------------------------- hashing

namespace {

// 128-bit FNV-1a over a canonical byte stream.
struct Hasher {
  std::uint64_t hi = 0x6c62272e07bb0142ULL;
  std::uint64_t lo = 0x62b821756295c58dULL;

  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      lo ^= p[i];
      // Multiply the 128-bit state by the FNV prime 2^88 + 2^8 + 0x3b.
      const unsigned __int128 wide = static_cast<unsigned __int128>(lo) * 0x13bULL;
      const std::uint64_t r_lo = static_cast<std::uint64_t>(wide);
      std::uint64_t r_hi = static_cast<std::uint64_t>(wide >> 64);
      r_hi += hi * 0x13bULL + (lo << 24);  // lo * 2^88 spills into the high word
      hi = r_hi;
      lo = r_lo;
    }
  }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    u64(bits);
  }
  void rational(const Rational& r) {
    i64(r.num());
    i64(r.den());
  }
  void str(std::string_view s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
};

void hash_config(Hasher& h, const Configuration& c) {
  if (const auto* p = std::get_if<PathConfig>(&c)) {
    h.str("path");
    h.rational(p->support().origin());
    h.rational(p->support().step());
    h.u64(p->support().intervals().size());
    for (const auto& iv : p->support().intervals()) {
      h.i64(iv.lo);
      h.i64(iv.hi);
    }
    h.rational(p->lattice().y_min);
    h.rational(p->lattice().dy);
    h.i64(p->lattice().count);
    for (const Int v : p->values()) h.i64(v);
    return;
  }
  const auto& f = std::get<FieldConfig>(c);
  h.str("field");
  h.u64(static_cast<std::uint64_t>(f.patch().dim()));
  for (const auto& s : f.patch().spacing()) h.rational(s);
  h.u64(f.patch().boxes().size());
  for (const auto& b : f.patch().boxes()) {
    for (const Int v : b.lo) h.i64(v);
    for (const Int v : b.hi) h.i64(v);
  }
  h.u64(f.fields().size());
  for (const auto& [name, data] : f.fields()) {
    h.str(name);
    h.u64(static_cast<std::uint64_t>(data.contra));
    h.u64(static_cast<std::uint64_t>(data.cov));
    for (const double v : data.comps) h.f64(v);
  }
}

}  // namespace

ConfigId config_id(const Configuration& c) {
  Hasher h;
  hash_config(h, c);
  return ConfigId{h.hi, h.lo};
}

ConfigId label_id(std::string_view label) {
  Hasher h;
  h.str("label");
  h.str(label);
  return ConfigId{h.hi, h.lo};
}

std::string to_hex(const ConfigId& id) {
  static const char* digits = "0123456789abcdef";
  std::string out(32, '0');
  for (int i = 0; i < 16; ++i) {
    out[15 - i] = digits[(id.hi >> (4 * i)) & 0xf];
    out[31 - i] = digits[(id.lo >> (4 * i)) & 0xf];
  }
  return out;
}

ConfigId id_from_hex(std::string_view hex) {
  require(hex.size() == 32, Errc::invalid_argument, "config id must be 32 hex digits");
  auto nib = [](char c) -> std::uint64_t {
    if (c >= '0' && c <= '9') return static_cast<std::uint64_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<std::uint64_t>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<std::uint64_t>(c - 'A' + 10);
    fail(Errc::invalid_argument, "bad hex digit in config id");
  };
  ConfigId id;
  for (int i = 0; i < 16; ++i) id.hi = (id.hi << 4) | nib(hex[static_cast<std::size_t>(i)]);
  for (int i = 16; i < 32; ++i) id.lo = (id.lo << 4) | nib(hex[static_cast<std::size_t>(i)]);
  return id;
}

// ------------------------------------------------- restrict / contains / bracket

Configuration restrict_config(const Configuration& v, const SupportSpec& s) {
  if (const auto* p = std::get_if<PathConfig>(&v)) {
    const auto* ts = std::get_if<TimeSupport>(&s);
    require(ts != nullptr, Errc::kind_mismatch, "path restriction needs a time support");
    require(ts->subset_of(p->support()), Errc::support_not_contained,
            "restriction support is not contained in the path support");
    std::vector<Int> values;
    values.reserve(ts->size());
    for (const Int k : ts->indices()) values.push_back(p->value_at(k));
    return PathConfig(*ts, p->lattice(), std::move(values));
  }
  const auto& f = std::get<FieldConfig>(v);
  const auto* lp = std::get_if<LatticePatch>(&s);
  require(lp != nullptr, Errc::kind_mismatch, "field restriction needs a lattice patch");
  require(lp->subset_of(f.patch()), Errc::support_not_contained,
          "restriction patch is not contained in the field support");
  std::map<std::string, TensorData> fields;
  for (const auto& [name, data] : f.fields()) {
    const std::size_t bs = tensor_block_size(f.patch().dim(), data.rank());
    TensorData out{data.contra, data.cov, {}};
    out.comps.reserve(lp->site_count() * bs);
    for (const auto& site : lp->sites()) {
      const std::size_t src = *f.patch().site_index(site);
      const double* blk = data.comps.data() + src * bs;
      out.comps.insert(out.comps.end(), blk, blk + bs);
    }
    fields.emplace(name, std::move(out));
  }
  return FieldConfig(*lp, std::move(fields));
}

bool contains(const Configuration& u, const Configuration& v) {
  require(kind_of(u) == kind_of(v), Errc::kind_mismatch,
          "containment needs configurations of the same kind");
  if (const auto* up = std::get_if<PathConfig>(&u)) {
    const auto& vp = std::get<PathConfig>(v);
    if (up->lattice() != vp.lattice()) return false;
    if (!up->support().subset_of(vp.support())) return false;
    for (const Int k : up->support().indices())
      if (up->value_at(k) != vp.value_at(k)) return false;
    return true;
  }
  const auto& uf = std::get<FieldConfig>(u);
  const auto& vf = std::get<FieldConfig>(v);
  if (!uf.patch().subset_of(vf.patch())) return false;
  if (uf.fields().size() != vf.fields().size()) return false;
  for (const auto& [name, data] : uf.fields()) {
    if (!vf.has_field(name)) return false;
    const TensorData& vd = vf.field(name);
    if (vd.contra != data.contra || vd.cov != data.cov) return false;
    const std::size_t bs = tensor_block_size(uf.patch().dim(), data.rank());
    for (std::size_t i = 0; i < uf.patch().site_count(); ++i) {
      const std::size_t j = *vf.patch().site_index(uf.patch().sites()[i]);
      for (std::size_t k = 0; k < bs; ++k)
        if (data.comps[i * bs + k] != vd.comps[j * bs + k]) return false;
    }
  }
  return true;
}

int bracket(const Configuration& u, const Configuration& v) { return contains(u, v) ? 1 : 0; }

// -------------------------------------------------------------------- Catalog

ConfigId Catalog::add(Configuration c) {
  const ConfigId id = config_id(c);
  auto it = configs_.find(id);
  if (it != configs_.end()) {
    require(it->second == c, Errc::invalid_argument, "config id collision");
    return id;
  }
  configs_.emplace(id, std::move(c));
  return id;
}

const Configuration& Catalog::at(const ConfigId& id) const {
  auto it = configs_.find(id);
  require(it != configs_.end(), Errc::invalid_argument,
          "config " + to_hex(id) + " is not in the catalog");
  return it->second;
}

std::vector<ConfigId> Catalog::ids() const {
  std::vector<ConfigId> out;
  out.reserve(configs_.size());
  for (const auto& [id, c] : configs_) out.push_back(id);
  return out;
}

void Catalog::tag_equiv(const ConfigId& id, std::string tag) {
  require(has(id), Errc::invalid_argument, "tagging an unregistered config");
  equiv_tags_[id] = std::move(tag);
}

std::optional<std::string> Catalog::equiv_tag(const ConfigId& id) const {
  auto it = equiv_tags_.find(id);
  if (it == equiv_tags_.end()) return std::nullopt;
  return it->second;
}

void Catalog::declare_parent(const ConfigId& child, const ConfigId& parent) {
  require(contains(at(child), at(parent)), Errc::invalid_argument,
          "declared parent does not contain the child");
  parents_[child].push_back(parent);
}

const std::vector<ConfigId>& Catalog::parents(const ConfigId& id) const {
  static const std::vector<ConfigId> empty;
  auto it = parents_.find(id);
  return it == parents_.end() ? empty : it->second;
}

}  // namespace qatlas
