#include "qatlas/quantum_coords.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace qatlas {

// ------------------------------------------------------------- site images

IntVec site_image(const Diffeo& phi, const IntVec& p, const LatticePatch& source,
                  const LatticePatch& target) {
  require(phi.dim() == source.dim() && source.dim() == target.dim(), Errc::invalid_argument,
          "dimension mismatch");
  if (phi.lattice_exact()) return phi.apply_index(p);
  const auto c = source.coords_of(p);
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(c.data(), source.dim());
  const Eigen::VectorXd y = phi.apply(x, source.spacing());
  IntVec q(static_cast<std::size_t>(target.dim()));
  for (int a = 0; a < target.dim(); ++a) {
    const double t = y[a] / target.spacing()[a].to_double();
    q[a] = static_cast<Int>(std::llround(t));
    require(std::abs(t - static_cast<double>(q[a])) < 1e-9, Errc::not_invertible_on_patch,
            "analytic image misses the site lattice");
  }
  return q;
}

namespace {

// phi must carry source's sites bijectively onto target's.
void check_region_bijection(const Diffeo& phi, const LatticePatch& source,
                            const LatticePatch& target, const char* what) {
  require(source.site_count() == target.site_count(), Errc::invalid_argument,
          std::string(what) + ": regions must have equal size");
  std::set<IntVec> seen;
  for (const auto& p : source.sites()) {
    const IntVec q = site_image(phi, p, source, target);
    require(target.contains_site(q), Errc::not_invertible_on_patch,
            std::string(what) + ": image leaves the declared region");
    require(seen.insert(q).second, Errc::not_invertible_on_patch,
            std::string(what) + ": map is not injective on the region");
  }
}

}  // namespace

// ---------------------------------------------------- IdentificationFamily

IdentificationFamily IdentificationFamily::seeded(LatticePatch reference,
                                                  std::map<ConfigId, BranchSeed> seeds) {
  require(!seeds.empty(), Errc::invalid_argument, "family needs at least one branch");
  IdentificationFamily fam;
  fam.seeded_ = true;
  fam.reference_ = std::make_shared<const LatticePatch>(std::move(reference));
  for (auto& [id, seed] : seeds) {
    check_region_bijection(seed.map, *fam.reference_, seed.region, "seed map");
    fam.branch_ids_.push_back(id);
    fam.regions_.emplace(id, std::move(seed.region));
    fam.seeds_.emplace(id, std::move(seed.map));
  }
  return fam;
}

IdentificationFamily IdentificationFamily::from_table(
    std::map<ConfigId, LatticePatch> regions,
    std::map<std::pair<ConfigId, ConfigId>, Diffeo> maps) {
  require(!regions.empty(), Errc::invalid_argument, "family needs at least one branch");
  IdentificationFamily fam;
  fam.seeded_ = false;
  for (auto& [id, region] : regions) {
    fam.branch_ids_.push_back(id);
    fam.regions_.emplace(id, std::move(region));
  }
  for (const auto& [key, map] : maps) {
    require(fam.regions_.count(key.first) != 0 && fam.regions_.count(key.second) != 0,
            Errc::branch_mismatch, "table references an unknown branch");
  }
  fam.table_ = std::move(maps);
  return fam;
}

const LatticePatch& IdentificationFamily::region(const ConfigId& u) const {
  const auto it = regions_.find(u);
  require(it != regions_.end(), Errc::branch_mismatch, "unknown branch " + to_hex(u));
  return it->second;
}

const LatticePatch& IdentificationFamily::reference() const {
  require(seeded_, Errc::invalid_argument, "table-stored family has no reference region");
  return *reference_;
}

const Diffeo& IdentificationFamily::seed_map(const ConfigId& u) const {
  require(seeded_, Errc::invalid_argument, "table-stored family has no seed maps");
  const auto it = seeds_.find(u);
  require(it != seeds_.end(), Errc::branch_mismatch, "unknown branch " + to_hex(u));
  return it->second;
}

Diffeo IdentificationFamily::map(const ConfigId& u, const ConfigId& v) const {
  const int d = region(u).dim();
  require(has_branch(v), Errc::branch_mismatch, "unknown branch " + to_hex(v));
  if (u == v) return Diffeo::identity(d);
  if (seeded_) return Diffeo::compose(seeds_.at(v), seeds_.at(u).inverse());
  const auto it = table_.find(std::make_pair(u, v));
  require(it != table_.end(), Errc::branch_mismatch, "family stores no map for this pair");
  return it->second;
}

// ------------------------------------------------------- verify_consistency

namespace {

double site_deviation(const LatticePatch& patch, const IntVec& a, const IntVec& b) {
  double dev = 0.0;
  for (int ax = 0; ax < patch.dim(); ++ax) {
    const double h = patch.spacing()[ax].to_double();
    dev = std::max(dev, std::abs(static_cast<double>(a[ax] - b[ax])) * h);
  }
  return dev;
}

}  // namespace

ConsistencyReport verify_consistency(const IdentificationFamily& fam) {
  ConsistencyReport report;
  const auto& ids = fam.branches();
  // Pair checks: each map is a bijection onto the declared target region.
  for (const auto& u : ids)
    for (const auto& v : ids) {
      if (u == v) continue;
      Diffeo phi;
      try {
        phi = fam.map(u, v);
      } catch (const Error& e) {
        report.violations.push_back(ConsistencyViolation{u, v, v, 0.0, e.what()});
        continue;
      }
      try {
        check_region_bijection(phi, fam.region(u), fam.region(v), "identification map");
      } catch (const Error& e) {
        report.violations.push_back(ConsistencyViolation{u, v, v, 0.0, e.what()});
      }
    }
  // Triple checks: phi_{u->w} = phi_{v->w} after phi_{u->v} on O_u.
  for (const auto& u : ids)
    for (const auto& v : ids)
      for (const auto& w : ids) {
        if (u == v || v == w || u == w) continue;
        double max_dev = 0.0;
        bool broken = false;
        std::string note;
        try {
          const Diffeo uv = fam.map(u, v);
          const Diffeo vw = fam.map(v, w);
          const Diffeo uw = fam.map(u, w);
          for (const auto& p : fam.region(u).sites()) {
            const IntVec direct = site_image(uw, p, fam.region(u), fam.region(w));
            const IntVec mid = site_image(uv, p, fam.region(u), fam.region(v));
            const IntVec chained = site_image(vw, mid, fam.region(v), fam.region(w));
            if (direct != chained) {
              broken = true;
              max_dev = std::max(max_dev, site_deviation(fam.region(w), direct, chained));
            }
          }
        } catch (const Error& e) {
          broken = true;
          note = e.what();
        }
        if (broken)
          report.violations.push_back(ConsistencyViolation{u, v, w, max_dev, std::move(note)});
      }
  return report;
}

// ------------------------------------------------ QuantumCoordinateSystem

QuantumCoordinateSystem::QuantumCoordinateSystem(IdentificationFamily fam, ConfigId seed,
                                                 std::vector<std::vector<double>> chart) {
  fam_ = std::make_shared<const IdentificationFamily>(std::move(fam));
  require(fam_->has_branch(seed), Errc::branch_mismatch, "seed branch is not in the family");
  seed_ = seed;
  const auto& region = fam_->region(seed);
  require(chart.size() == region.site_count(), Errc::invalid_argument,
          "chart must assign one tuple per seed-region site");
  require(!chart.empty(), Errc::invalid_argument, "chart is empty");
  coord_dim_ = static_cast<int>(chart.front().size());
  require(coord_dim_ > 0, Errc::invalid_argument, "coordinate tuples are empty");
  std::set<std::vector<double>> distinct;
  for (const auto& tuple : chart) {
    require(static_cast<int>(tuple.size()) == coord_dim_, Errc::invalid_argument,
            "ragged chart tuples");
    require(distinct.insert(tuple).second, Errc::not_invertible,
            "chart is not injective on the seed region");
  }
  chart_ = std::move(chart);
}

std::vector<double> QuantumCoordinateSystem::coord_of(const ConfigId& u, const IntVec& p) const {
  const auto& src = fam_->region(u);
  require(src.contains_site(p), Errc::branch_mismatch, "point outside the branch region");
  IntVec seed_site = p;
  if (u != seed_)
    seed_site = site_image(fam_->map(u, seed_), p, src, fam_->region(seed_));
  const auto idx = fam_->region(seed_).site_index(seed_site);
  require(idx.has_value(), Errc::not_invertible_on_patch, "image leaves the seed region");
  return chart_[*idx];
}

QCPoint QuantumCoordinateSystem::point_at(const std::vector<double>& x) const {
  require(static_cast<int>(x.size()) == coord_dim_, Errc::invalid_argument,
          "coordinate dimension mismatch");
  std::size_t found = chart_.size();
  for (std::size_t i = 0; i < chart_.size(); ++i) {
    bool close = true;
    for (int a = 0; a < coord_dim_; ++a)
      if (std::abs(chart_[i][a] - x[a]) >= 1e-9) {
        close = false;
        break;
      }
    if (close) {
      found = i;
      break;
    }
  }
  require(found < chart_.size(), Errc::not_invertible, "no chart point at this coordinate");
  const IntVec seed_site = fam_->region(seed_).sites()[found];
  QCPoint point;
  point.x = chart_[found];
  for (const auto& u : fam_->branches()) {
    IntVec p = seed_site;
    if (u != seed_)
      p = site_image(fam_->map(seed_, u), seed_site, fam_->region(seed_), fam_->region(u));
    point.branch_points.emplace_back(u, std::move(p));
  }
  return point;
}

// ------------------------------------------------------------- transforms

QuantumCoordinateSystem classical_coord_transform(const QuantumCoordinateSystem& qcs,
                                                  const Diffeo& f) {
  require(f.dim() == qcs.coord_dim(), Errc::not_invertible,
          "coordinate map dimension mismatch");
  const std::vector<Rational> unit_spacing(static_cast<std::size_t>(qcs.coord_dim()), Rational(1));
  QuantumCoordinateSystem out;
  out.fam_ = qcs.fam_;  // the identification is untouched, same object
  out.seed_ = qcs.seed_;
  out.coord_dim_ = qcs.coord_dim_;
  out.chart_.reserve(qcs.chart_.size());
  std::set<std::vector<double>> distinct;
  for (const auto& tuple : qcs.chart_) {
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(tuple.data(), qcs.coord_dim());
    Eigen::VectorXd y;
    try {
      y = f.apply(x, unit_spacing);
    } catch (const Error&) {
      fail(Errc::not_invertible, "coordinate map failed on a chart value");
    }
    std::vector<double> t(y.data(), y.data() + y.size());
    require(distinct.insert(t).second, Errc::not_invertible,
            "coordinate map is not injective on the chart");
    out.chart_.push_back(std::move(t));
  }
  return out;
}

QuantumCoordinateSystem quantum_coord_transform(const QuantumCoordinateSystem& qcs,
                                                const std::map<ConfigId, Diffeo>& per_branch) {
  const auto& fam = qcs.identification();
  for (const auto& u : fam.branches())
    require(per_branch.count(u) != 0, Errc::branch_mismatch,
            "per-branch map missing for " + to_hex(u));

  // New regions are literal images; seeded storage composes the seeds.
  std::map<ConfigId, LatticePatch> new_regions;
  for (const auto& u : fam.branches()) {
    const auto& region = fam.region(u);
    const Diffeo& phi = per_branch.at(u);
    std::vector<IntVec> sites;
    sites.reserve(region.site_count());
    for (const auto& p : region.sites()) sites.push_back(site_image(phi, p, region, region));
    LatticePatch image = LatticePatch::from_sites(region.dim(), region.spacing(), sites);
    require(image.site_count() == region.site_count(), Errc::not_invertible_on_patch,
            "branch map is not injective on its region");
    new_regions.emplace(u, std::move(image));
  }

  IdentificationFamily new_fam;
  if (fam.seeded_storage()) {
    std::map<ConfigId, BranchSeed> seeds;
    for (const auto& u : fam.branches())
      seeds.emplace(u, BranchSeed{new_regions.at(u),
                                  Diffeo::compose(per_branch.at(u), fam.seed_map(u))});
    new_fam = IdentificationFamily::seeded(fam.reference(), std::move(seeds));
  } else {
    std::map<std::pair<ConfigId, ConfigId>, Diffeo> table;
    for (const auto& u : fam.branches())
      for (const auto& v : fam.branches()) {
        if (u == v) continue;
        table.emplace(std::make_pair(u, v),
                      Diffeo::compose(per_branch.at(v),
                                      Diffeo::compose(fam.map(u, v), per_branch.at(u).inverse())));
      }
    new_fam = IdentificationFamily::from_table(new_regions, std::move(table));
  }

  // Chart follows the seed branch: x'(phi(p)) = x(p).
  const ConfigId seed = qcs.seed_branch();
  const auto& old_region = fam.region(seed);
  const auto& new_region = new_regions.at(seed);
  std::vector<std::vector<double>> chart(new_region.site_count());
  for (std::size_t i = 0; i < old_region.site_count(); ++i) {
    const IntVec q = site_image(per_branch.at(seed), old_region.sites()[i], old_region, old_region);
    chart[*new_region.site_index(q)] = qcs.seed_chart()[i];
  }
  return QuantumCoordinateSystem(std::move(new_fam), seed, std::move(chart));
}

// ----------------------------------------------------------- to_coincidence

std::pair<RestrictedQD, ExtendedAState> to_coincidence(const ExtendedAState& state,
                                                       const QuantumCoordinateSystem& qcs,
                                                       const ConfigId& target) {
  const auto& fam = qcs.identification();
  require(fam.has_branch(target), Errc::branch_mismatch, "target branch is not in the family");
  ExtendedAState restricted;
  RestrictedQD qd;
  for (const auto& [id, term] : state.terms()) {
    require(fam.has_branch(id), Errc::branch_mismatch,
            "state branch is not in the family: " + to_hex(id));
    ATerm cut = restrict_term(term, SupportSpec{fam.region(id)});
    const ConfigId cut_id = config_id(cut.config);
    qd.maps.emplace(cut_id, fam.map(id, target));
    restricted.add_term(std::move(cut.config), cut.weight, std::move(cut.coeffs));
  }
  ExtendedAState moved = apply_restricted(qd, restricted);
  return {std::move(qd), std::move(moved)};
}

// ------------------------------------------------------------- atlas cover

CoverageReport atlas_coverage(const std::vector<QuantumCoordinateSystem>& atlas,
                              const std::map<ConfigId, LatticePatch>& supports) {
  CoverageReport report;
  for (const auto& [id, support] : supports) {
    for (const auto& site : support.sites()) {
      bool covered = false;
      for (const auto& qcs : atlas) {
        const auto& fam = qcs.identification();
        if (!fam.has_branch(id)) continue;
        if (fam.region(id).contains_site(site)) {
          covered = true;
          break;
        }
      }
      if (!covered) report.uncovered.push_back(CoverageGap{id, site});
    }
  }
  return report;
}

}  // namespace qatlas
