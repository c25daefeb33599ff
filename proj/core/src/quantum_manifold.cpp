#include "qatlas/quantum_manifold.hpp"

#include <algorithm>
#include <set>

namespace qatlas {

namespace {

std::string short_id(const ConfigId& u) { return to_hex(u).substr(0, 8); }

std::string site_str(const IntVec& p) {
  std::string s = "(";
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (a) s += ",";
    s += std::to_string(p[a]);
  }
  return s + ")";
}

bool adjacent(const IntVec& a, const IntVec& b) {
  Int sum = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const Int d = std::abs(a[k] - b[k]);
    if (d > 1) return false;
    sum += d;
  }
  return sum == 1;
}

// Per-chart, per-branch site-to-tuple tables, skipping entries whose data is
// already reported broken.
struct ChartTables {
  // branch -> (site -> tuple)
  std::map<ConfigId, std::map<IntVec, std::vector<double>>> omega;
  // branch -> (tuple -> site)
  std::map<ConfigId, std::map<std::vector<double>, IntVec>> omega_inv;
};

std::vector<ChartTables> chart_tables(const QuantumFibreBundle& b) {
  std::vector<ChartTables> tables(b.charts.size());
  for (std::size_t i = 0; i < b.charts.size(); ++i) {
    for (const QPoint q : b.charts[i].members) {
      const auto hit = b.pointmap.find(q);
      const auto cit = b.charts[i].coord.find(q);
      if (hit == b.pointmap.end() || cit == b.charts[i].coord.end()) continue;
      tables[i].omega[hit->second.first][hit->second.second] = cit->second;
      tables[i].omega_inv[hit->second.first].emplace(cit->second, hit->second.second);
    }
  }
  return tables;
}

void check_structure(const QuantumFibreBundle& b, BundleReport& report) {
  auto bad = [&](std::string axiom, std::string detail) {
    report.violations.push_back(BundleViolation{std::move(axiom), std::move(detail)});
  };

  const std::set<ConfigId> base(b.base.begin(), b.base.end());
  if (base.size() != b.base.size()) bad("base", "duplicate branch id");
  const std::set<QPoint> total(b.total.begin(), b.total.end());
  if (total.size() != b.total.size()) bad("total", "duplicate point id");

  for (const auto& u : base)
    if (!b.fibres.count(u)) bad("fibres", "no fibre for branch " + short_id(u));
  for (const auto& [u, patch] : b.fibres)
    if (!base.count(u)) bad("fibres", "fibre for unknown branch " + short_id(u));

  // Pointmap: a bijection onto every (branch, fibre site) pair.
  std::set<std::pair<ConfigId, IntVec>> seen;
  std::size_t expected = 0;
  for (const auto& [u, patch] : b.fibres)
    if (base.count(u)) expected += patch.site_count();
  for (const QPoint q : b.total) {
    const auto it = b.pointmap.find(q);
    if (it == b.pointmap.end()) {
      bad("pointmap", "no image for point " + std::to_string(q));
      continue;
    }
    const auto& [u, p] = it->second;
    if (!base.count(u)) {
      bad("pointmap", "point " + std::to_string(q) + " projects outside the base");
      continue;
    }
    const auto fit = b.fibres.find(u);
    if (fit == b.fibres.end() || !fit->second.contains_site(p)) {
      bad("pointmap", "point " + std::to_string(q) + " lands outside its fibre");
      continue;
    }
    if (!seen.emplace(u, p).second)
      bad("pointmap", "fibre site " + site_str(p) + " hit twice");
  }
  for (const auto& [q, up] : b.pointmap)
    if (!total.count(q)) bad("pointmap", "image for unknown point " + std::to_string(q));
  if (seen.size() != expected) bad("pointmap", "fibre sites left uncovered");

  for (const QPoint q : b.total) {
    const auto pit = b.projection.find(q);
    const auto hit = b.pointmap.find(q);
    if (pit == b.projection.end()) {
      bad("projection", "no projection for point " + std::to_string(q));
      continue;
    }
    if (hit != b.pointmap.end() && pit->second != hit->second.first)
      bad("projection", "projection disagrees with the pointmap at " + std::to_string(q));
  }
}

void check_charts(const QuantumFibreBundle& b, const std::vector<ChartTables>& tables,
                  BundleReport& report) {
  auto bad = [&](std::string axiom, std::string detail) {
    report.violations.push_back(BundleViolation{std::move(axiom), std::move(detail)});
  };

  const std::set<QPoint> total(b.total.begin(), b.total.end());
  const std::set<std::vector<double>> grid(b.grid.begin(), b.grid.end());
  if (grid.size() != b.grid.size()) bad("grid", "duplicate grid tuple");

  std::set<QPoint> covered;
  for (std::size_t i = 0; i < b.charts.size(); ++i) {
    const auto& chart = b.charts[i];
    const std::string tag = "chart " + std::to_string(i);
    std::set<QPoint> members(chart.members.begin(), chart.members.end());
    if (members.size() != chart.members.size()) bad("chart_membership", tag + ": duplicate member");
    for (const QPoint q : members) {
      if (!total.count(q)) bad("chart_membership", tag + ": unknown point " + std::to_string(q));
      covered.insert(q);
      const auto cit = chart.coord.find(q);
      if (cit == chart.coord.end()) {
        bad("chart_map", tag + ": no tuple for point " + std::to_string(q));
        continue;
      }
      if (!grid.count(cit->second))
        bad("chart_map", tag + ": tuple off the shared grid at point " + std::to_string(q));
    }
    for (const auto& [q, x] : chart.coord)
      if (!members.count(q)) bad("chart_map", tag + ": tuple for non-member " + std::to_string(q));

    // Branch-wise: site-to-tuple injective and onto the full grid.
    for (const auto& [u, inv] : tables[i].omega_inv) {
      const auto& fwd = tables[i].omega.at(u);
      if (inv.size() != fwd.size())
        bad("omega_injective", tag + ": branch " + short_id(u) + " repeats a tuple");
      if (inv.size() != grid.size())
        bad("chart_onto", tag + ": branch " + short_id(u) + " does not fill the grid");
    }
  }
  for (const QPoint q : b.total)
    if (!covered.count(q)) bad("chart_cover", "point " + std::to_string(q) + " in no chart");

  // Per-branch cover of the fibre by the chart patches.
  for (const auto& [u, patch] : b.fibres) {
    std::set<IntVec> from_charts;
    for (const auto& t : tables)
      if (const auto it = t.omega.find(u); it != t.omega.end())
        for (const auto& [p, x] : it->second) from_charts.insert(p);
    for (const auto& p : patch.sites())
      if (!from_charts.count(p))
        bad("branch_cover", "branch " + short_id(u) + " site " + site_str(p) + " in no chart");
  }
}

void check_overlaps(const QuantumFibreBundle& b, const std::vector<ChartTables>& tables,
                    BundleReport& report) {
  for (std::size_t i = 0; i < b.charts.size(); ++i)
    for (std::size_t j = i + 1; j < b.charts.size(); ++j) {
      const std::string tag = "charts " + std::to_string(i) + "/" + std::to_string(j);
      for (const auto& [u, fwd_i] : tables[i].omega) {
        const auto jt = tables[j].omega.find(u);
        if (jt == tables[j].omega.end()) continue;
        const auto& inv_j = tables[j].omega_inv.at(u);
        // sigma carries a chart-i site to the chart-j site of the same tuple.
        std::map<IntVec, IntVec> sigma;
        for (const auto& [p, x] : fwd_i) {
          const auto pit = inv_j.find(x);
          if (pit == inv_j.end()) {
            report.violations.push_back(BundleViolation{
                "overlap_bijection",
                tag + ": branch " + short_id(u) + " tuple of " + site_str(p) +
                    " missing from the second chart"});
            continue;
          }
          sigma.emplace(p, pit->second);
        }
        for (const auto& [p, q] : sigma) {
          IntVec pn = p;
          for (std::size_t a = 0; a < pn.size(); ++a)
            for (const Int step : {Int{-1}, Int{1}}) {
              pn[a] = p[a] + step;
              const auto nit = sigma.find(pn);
              if (nit != sigma.end() && !adjacent(q, nit->second))
                report.smoothness.push_back(BundleViolation{
                    "overlap_adjacency", tag + ": branch " + short_id(u) +
                                             " breaks adjacency at " + site_str(p)});
              pn[a] = p[a];
            }
        }
      }
    }
}

void check_relations(const QuantumFibreBundle& b, BundleReport& report) {
  auto bad = [&](std::string axiom, std::string detail) {
    report.violations.push_back(BundleViolation{std::move(axiom), std::move(detail)});
  };

  std::set<std::pair<ConfigId, ConfigId>> equiv;
  for (const auto& e : b.equiv) equiv.emplace(e.u, e.v);
  std::set<std::pair<ConfigId, ConfigId>> order;
  for (const auto& o : b.order) order.emplace(o.u, o.v);
  const auto contained = [&](const ConfigId& u, const ConfigId& v) {
    return u == v || order.count({u, v}) != 0;
  };

  for (const auto& [u, v] : equiv)
    for (const auto& [v2, w] : equiv)
      if (v == v2 && !equiv.count({u, w}))
        bad("equiv_transitive",
            short_id(u) + " ~ " + short_id(v) + " ~ " + short_id(w) + " without " + short_id(u) +
                " ~ " + short_id(w));

  for (const auto& e : b.equiv) {
    const auto uit = b.fibres.find(e.u);
    const auto vit = b.fibres.find(e.v);
    if (uit == b.fibres.end() || vit == b.fibres.end()) {
      bad("equiv_witness", "equivalence references a missing fibre");
      continue;
    }
    const auto& mu = uit->second;
    const auto& mv = vit->second;
    bool ok = mu.dim() == mv.dim() && mu.spacing() == mv.spacing() &&
              mu.site_count() == mv.site_count() &&
              static_cast<int>(e.witness.perm.size()) == mu.dim();
    if (ok) {
      std::set<IntVec> image;
      for (const auto& p : mu.sites()) image.insert(e.witness.apply(p));
      for (const auto& p : mv.sites())
        if (!image.count(p)) {
          ok = false;
          break;
        }
    }
    if (!ok)
      bad("equiv_witness",
          "witness does not carry the fibre of " + short_id(e.u) + " onto " + short_id(e.v));
  }

  for (const auto& o : b.order) {
    const auto uit = b.fibres.find(o.u);
    const auto vit = b.fibres.find(o.v);
    if (uit == b.fibres.end() || vit == b.fibres.end()) {
      bad("order_subset", "containment references a missing fibre");
      continue;
    }
    const auto& mu = uit->second;
    const auto& mv = vit->second;
    bool ok = mu.dim() == mv.dim() && mu.spacing() == mv.spacing();
    if (ok)
      for (const auto& p : mu.sites())
        if (!mv.contains_site(p)) {
          ok = false;
          break;
        }
    if (!ok)
      bad("order_subset", "fibre of " + short_id(o.u) + " not inside " + short_id(o.v));
  }

  // Completeness: u in v ~ w forces a y with u ~ y in w.
  for (const auto& u : b.base)
    for (const auto& v : b.base) {
      if (!contained(u, v)) continue;
      for (const auto& w : b.base) {
        if (!equiv.count({v, w})) continue;
        bool found = false;
        for (const auto& y : b.base)
          if (equiv.count({u, y}) && contained(y, w)) {
            found = true;
            break;
          }
        if (!found)
          bad("completeness", short_id(u) + " in " + short_id(v) + " ~ " + short_id(w) +
                                  " has no mediating branch");
      }
    }
}

}  // namespace

BundleReport validate_basic(const QuantumFibreBundle& bundle) {
  BundleReport report;
  check_structure(bundle, report);
  const auto tables = chart_tables(bundle);
  check_charts(bundle, tables, report);
  check_overlaps(bundle, tables, report);
  return report;
}

BundleReport validate_full(const QuantumFibreBundle& bundle) {
  BundleReport report = validate_basic(bundle);
  check_relations(bundle, report);
  return report;
}

std::vector<double> coordinate(const QuantumFibreBundle& bundle, std::size_t i, QPoint q) {
  require(i < bundle.charts.size(), Errc::invalid_argument, "no such chart");
  const auto it = bundle.charts[i].coord.find(q);
  require(it != bundle.charts[i].coord.end() &&
              std::count(bundle.charts[i].members.begin(), bundle.charts[i].members.end(), q) > 0,
          Errc::not_in_chart, "point not in the chart");
  return it->second;
}

std::map<IntVec, IntVec> derive_identification(const QuantumFibreBundle& bundle, std::size_t i,
                                               const ConfigId& u, const ConfigId& v) {
  require(i < bundle.charts.size(), Errc::invalid_argument, "no such chart");
  const auto tables = chart_tables(bundle);
  const auto uit = tables[i].omega.find(u);
  const auto vit = tables[i].omega_inv.find(v);
  require(uit != tables[i].omega.end(), Errc::branch_not_in_chart,
          "first branch absent from the chart");
  require(vit != tables[i].omega_inv.end(), Errc::branch_not_in_chart,
          "second branch absent from the chart");
  std::map<IntVec, IntVec> out;
  for (const auto& [p, x] : uit->second) {
    const auto pit = vit->second.find(x);
    require(pit != vit->second.end(), Errc::invalid_argument,
            "chart does not pair the branches over the full grid");
    out.emplace(p, pit->second);
  }
  return out;
}

namespace {

// Signed axis permutation plus shift matching the whole table, smallest
// (perm, sign) in lexicographic order when degenerate.
LatticeMap fit_lattice_map(const std::map<IntVec, IntVec>& table, int d) {
  require(!table.empty(), Errc::invalid_argument, "empty identification table");
  std::vector<int> perm(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) perm[a] = a;
  std::sort(perm.begin(), perm.end());
  const auto& [p0, q0] = *table.begin();
  do {
    for (std::uint32_t mask = 0; mask < (1u << d); ++mask) {
      LatticeMap m;
      m.perm.resize(static_cast<std::size_t>(d));
      m.sign.resize(static_cast<std::size_t>(d));
      m.shift.resize(static_cast<std::size_t>(d));
      for (int a = 0; a < d; ++a) {
        m.perm[a] = perm[a];
        m.sign[a] = ((mask >> a) & 1u) ? -1 : 1;
        m.shift[a] = q0[a] - m.sign[a] * p0[perm[a]];
      }
      bool ok = true;
      for (const auto& [p, q] : table)
        if (m.apply(p) != q) {
          ok = false;
          break;
        }
      if (ok) return m;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  fail(Errc::invalid_argument, "derived identification is not lattice-exact");
}

}  // namespace

IdentificationFamily derived_family(const QuantumFibreBundle& bundle, std::size_t i) {
  require(i < bundle.charts.size(), Errc::invalid_argument, "no such chart");
  const auto tables = chart_tables(bundle);
  std::map<ConfigId, LatticePatch> regions;
  for (const auto& [u, fwd] : tables[i].omega) {
    const auto fit = bundle.fibres.find(u);
    require(fit != bundle.fibres.end(), Errc::branch_not_in_chart, "branch without a fibre");
    std::vector<IntVec> sites;
    sites.reserve(fwd.size());
    for (const auto& [p, x] : fwd) sites.push_back(p);
    regions.emplace(u, LatticePatch::from_sites(fit->second.dim(), fit->second.spacing(),
                                                std::move(sites)));
  }
  require(!regions.empty(), Errc::branch_not_in_chart, "chart covers no branch");
  std::map<std::pair<ConfigId, ConfigId>, Diffeo> maps;
  for (const auto& [u, ru] : regions)
    for (const auto& [v, rv] : regions) {
      if (u == v) continue;
      const auto table = derive_identification(bundle, i, u, v);
      maps.emplace(std::make_pair(u, v), Diffeo::lattice(fit_lattice_map(table, ru.dim())));
    }
  return IdentificationFamily::from_table(std::move(regions), std::move(maps));
}

QuantumTensorField contract(const QuantumTensorField& B, const QuantumTensorField& C,
                            const SlotPairing& pairing) {
  require(B.dim == C.dim, Errc::pairing_mismatch, "tensor dimensions differ");
  const int d = B.dim;
  std::vector<bool> usedB(static_cast<std::size_t>(B.rank()), false);
  std::vector<bool> usedC(static_cast<std::size_t>(C.rank()), false);
  for (const auto& [sb, sc] : pairing) {
    require(sb >= 0 && sb < B.rank() && sc >= 0 && sc < C.rank(), Errc::pairing_mismatch,
            "paired slot out of range");
    require(!usedB[sb] && !usedC[sc], Errc::pairing_mismatch, "slot paired twice");
    usedB[sb] = usedC[sc] = true;
    const bool b_contra = sb < B.contra;
    const bool c_contra = sc < C.contra;
    require(b_contra != c_contra, Errc::pairing_mismatch,
            "paired slots must have opposite variance");
  }

  std::vector<int> freeB, freeC;
  for (int s = 0; s < B.rank(); ++s)
    if (!usedB[s]) freeB.push_back(s);
  for (int s = 0; s < C.rank(); ++s)
    if (!usedC[s]) freeC.push_back(s);

  QuantumTensorField out;
  out.dim = d;
  for (const int s : freeB) (s < B.contra ? out.contra : out.cov) += 1;
  for (const int s : freeC) (s < C.contra ? out.contra : out.cov) += 1;

  // Result slot order: free contra of B, of C, then free cov of B, of C.
  std::vector<std::pair<bool, int>> slots;  // (from B, source slot)
  for (const int s : freeB)
    if (s < B.contra) slots.emplace_back(true, s);
  for (const int s : freeC)
    if (s < C.contra) slots.emplace_back(false, s);
  for (const int s : freeB)
    if (s >= B.contra) slots.emplace_back(true, s);
  for (const int s : freeC)
    if (s >= C.contra) slots.emplace_back(false, s);

  const auto strideB = [&](int s) {
    std::size_t r = 1;
    for (int k = s + 1; k < B.rank(); ++k) r *= static_cast<std::size_t>(d);
    return r;
  };
  const auto strideC = [&](int s) {
    std::size_t r = 1;
    for (int k = s + 1; k < C.rank(); ++k) r *= static_cast<std::size_t>(d);
    return r;
  };

  const std::size_t out_bs = out.block_size();
  for (const auto& [q, bval] : B.comps) {
    const auto cit = C.comps.find(q);
    require(cit != C.comps.end(), Errc::invalid_argument, "tensor fields cover different points");
    const auto& cval = cit->second;
    require(bval.size() == B.block_size() && cval.size() == C.block_size(),
            Errc::invalid_argument, "component block size mismatch");
    std::vector<double> res(out_bs, 0.0);
    std::vector<int> oidx(slots.size(), 0);
    for (std::size_t flat = 0; flat < out_bs; ++flat) {
      std::size_t rem = flat;
      for (std::size_t k = slots.size(); k-- > 0;) {
        oidx[k] = static_cast<int>(rem % static_cast<std::size_t>(d));
        rem /= static_cast<std::size_t>(d);
      }
      std::size_t baseB = 0, baseC = 0;
      for (std::size_t k = 0; k < slots.size(); ++k) {
        if (slots[k].first)
          baseB += static_cast<std::size_t>(oidx[k]) * strideB(slots[k].second);
        else
          baseC += static_cast<std::size_t>(oidx[k]) * strideC(slots[k].second);
      }
      double sum = 0.0;
      std::vector<int> cidx(pairing.size(), 0);
      for (;;) {
        std::size_t ib = baseB, ic = baseC;
        for (std::size_t k = 0; k < pairing.size(); ++k) {
          ib += static_cast<std::size_t>(cidx[k]) * strideB(pairing[k].first);
          ic += static_cast<std::size_t>(cidx[k]) * strideC(pairing[k].second);
        }
        sum += bval[ib] * cval[ic];
        std::size_t k = 0;
        while (k < pairing.size() && cidx[k] == d - 1) cidx[k++] = 0;
        if (k == pairing.size()) break;
        ++cidx[k];
      }
      res[flat] = sum;
    }
    out.comps.emplace(q, std::move(res));
  }
  require(B.comps.size() == C.comps.size(), Errc::invalid_argument,
          "tensor fields cover different points");
  return out;
}

ExtendedAState bundle_to_extended_state(const QuantumFibreBundle& bundle,
                                        const QuantumTensorField& A,
                                        const std::map<ConfigId, Complex>& weights,
                                        const std::string& quantity) {
  // Reverse pointmap: (branch, site) -> q.
  std::map<std::pair<ConfigId, IntVec>, QPoint> rev;
  for (const auto& [q, up] : bundle.pointmap) rev.emplace(up, q);

  std::vector<ConfigId> branches = bundle.base;
  std::sort(branches.begin(), branches.end());

  ExtendedAState state;
  for (const auto& u : branches) {
    const auto wit = weights.find(u);
    require(wit != weights.end(), Errc::missing_weight,
            "no weight for branch " + short_id(u));
    const auto fit = bundle.fibres.find(u);
    require(fit != bundle.fibres.end(), Errc::invalid_argument, "branch without a fibre");
    const auto& patch = fit->second;
    require(A.dim == patch.dim(), Errc::invalid_argument,
            "tensor dimension must match the fibre");

    CoeffSet coeffs{quantity, A.contra, A.cov, A.dim, {}};
    coeffs.values.reserve(patch.site_count() * A.block_size());
    for (const auto& p : patch.sites()) {
      const auto qit = rev.find({u, p});
      require(qit != rev.end(), Errc::invalid_argument, "fibre site missing from the pointmap");
      const auto ait = A.comps.find(qit->second);
      require(ait != A.comps.end() && ait->second.size() == A.block_size(),
              Errc::invalid_argument, "tensor field missing at a bundle point");
      coeffs.values.insert(coeffs.values.end(), ait->second.begin(), ait->second.end());
    }

    Configuration config = [&]() -> Configuration {
      const auto cit = bundle.configs.find(u);
      if (cit != bundle.configs.end()) return cit->second;
      // Constant Minkowski metric on the fibre.
      const int d = patch.dim();
      TensorData g{0, 2, {}};
      g.comps.reserve(patch.site_count() * static_cast<std::size_t>(d) * d);
      for (std::size_t s = 0; s < patch.site_count(); ++s)
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b) g.comps.push_back(a == b ? (a == 0 ? -1.0 : 1.0) : 0.0);
      return FieldConfig(patch, {{std::string(FieldConfig::kMetric), std::move(g)}});
    }();
    state.add_term(std::move(config), wit->second, std::move(coeffs));
  }
  return state;
}

}  // namespace qatlas
