#include "qatlas/generators.hpp"

#include <algorithm>
#include <numeric>

#include <Eigen/Dense>

namespace qatlas::gen {

namespace {

Eigen::MatrixXd eta(int d) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d);
  m(0, 0) = -1.0;
  return m;
}

Eigen::MatrixXd boost(int d, int axis, double v) {
  Eigen::MatrixXd L = Eigen::MatrixXd::Identity(d, d);
  const double g = 1.0 / std::sqrt(1.0 - v * v);
  L(0, 0) = g;
  L(0, axis) = -g * v;
  L(axis, 0) = -g * v;
  L(axis, axis) = g;
  return L;
}

}  // namespace

ExtendedAState random_field_astate(Rng& rng, int dim, std::size_t terms) {
  require(dim >= 1 && dim <= 4, Errc::invalid_argument, "dimension out of range");
  require(terms >= 1, Errc::invalid_argument, "need at least one term");
  const Rational h = rat(1, 10);
  ExtendedAState state;
  for (std::size_t t = 0; t < terms; ++t) {
    std::vector<Box> boxes;
    IntVec lo(static_cast<std::size_t>(dim)), hi(static_cast<std::size_t>(dim));
    for (int a = 0; a < dim; ++a) {
      lo[a] = rng.uniform_int(-4, -1);
      hi[a] = lo[a] + rng.uniform_int(2, 5);
    }
    boxes.push_back(Box{lo, hi});
    if (rng.uniform() < 0.3) {
      // Second component, disjoint along the first axis.
      IntVec lo2 = lo, hi2 = hi;
      lo2[0] = hi[0] + 2;
      hi2[0] = lo2[0] + (hi[0] - lo[0]);
      boxes.push_back(Box{lo2, hi2});
    }
    LatticePatch patch(dim, std::vector<Rational>(static_cast<std::size_t>(dim), h),
                       std::move(boxes));

    Eigen::MatrixXd A0 = Eigen::MatrixXd::Identity(dim, dim);
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b) A0(a, b) += 0.1 * rng.uniform(-1.0, 1.0);
    std::vector<Eigen::MatrixXd> Bk(static_cast<std::size_t>(dim));
    for (int k = 0; k < dim; ++k) {
      Bk[k] = Eigen::MatrixXd::Zero(dim, dim);
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) Bk[k](a, b) = 0.05 * rng.uniform(-1.0, 1.0);
    }

    TensorData g{0, 2, {}};
    TensorData phi{0, 0, {}};
    CoeffSet coeffs{"A", 0, 0, 1, {}};
    const Eigen::MatrixXd E = eta(dim);
    for (const auto& p : patch.sites()) {
      const auto c = patch.coords_of(p);
      Eigen::MatrixXd J = A0;
      for (int k = 0; k < dim; ++k) J += c[k] * Bk[k];
      const Eigen::MatrixXd m = J.transpose() * E * J;
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) g.comps.push_back(m(a, b));
      phi.comps.push_back(rng.uniform(-1.0, 1.0));
      coeffs.values.push_back(rng.uniform(-1.0, 1.0));
    }
    FieldConfig config(patch, {{std::string(FieldConfig::kMetric), std::move(g)},
                               {"phi", std::move(phi)}});
    const Complex w = std::polar(rng.uniform(0.2, 1.5), rng.uniform(0.0, 6.283185307179586));
    state.add_term(std::move(config), w, std::move(coeffs));
  }
  return state;
}

RestrictedQD random_lattice_qd(Rng& rng, const ExtendedAState& state) {
  RestrictedQD qd;
  for (const auto& [id, term] : state.terms()) {
    if (const auto* fc = std::get_if<FieldConfig>(&term.config)) {
      const int d = fc->patch().dim();
      LatticeMap m;
      m.perm.resize(static_cast<std::size_t>(d));
      std::iota(m.perm.begin(), m.perm.end(), 0);
      for (int a = d - 1; a > 0; --a)
        std::swap(m.perm[a], m.perm[rng.uniform_int(0, a)]);
      m.sign.resize(static_cast<std::size_t>(d));
      m.shift.resize(static_cast<std::size_t>(d));
      for (int a = 0; a < d; ++a) {
        m.sign[a] = rng.uniform() < 0.5 ? 1 : -1;
        m.shift[a] = rng.uniform_int(-5, 5);
      }
      qd.maps.emplace(id, Diffeo::lattice(m));
    } else {
      const auto& pc = std::get<PathConfig>(term.config);
      const Int P = pc.lattice().count;
      const auto [mn, mx] = std::minmax_element(pc.values().begin(), pc.values().end());
      LatticeMap m;
      m.perm = {0};
      const bool flip = rng.uniform() < 0.5;
      m.sign = {flip ? -1 : 1};
      if (flip) {
        // j' = -j + t stays in [0, P): t in [*mx, *mn + P - 1]
        m.shift = {rng.uniform_int(*mx, *mn + P - 1)};
      } else {
        m.shift = {rng.uniform_int(-*mn, P - 1 - *mx)};
      }
      qd.maps.emplace(id, Diffeo::lattice(m));
    }
  }
  return qd;
}

PhaseTable random_phase_table(Rng& rng, std::size_t pairs) {
  PhaseTable table;
  while (table.size() < 2 * pairs) {
    const ConfigId u{rng.next_u64(), rng.next_u64()};
    const ConfigId v{rng.next_u64(), rng.next_u64()};
    if (u == v || table.count({u, v})) continue;
    const double theta = rng.uniform(-3.0, 3.0);
    table[{u, v}] = theta;
    table[{v, u}] = -theta;
  }
  return table;
}

PhaseTable corrupt_phase_table(Rng& rng, PhaseTable table) {
  if (table.empty() || rng.uniform() < 0.5) {
    const ConfigId u{rng.next_u64(), rng.next_u64()};
    double theta = 0.0;
    while (theta == 0.0) theta = rng.uniform(-3.0, 3.0);
    table[{u, u}] = theta;
    return table;
  }
  const std::size_t pick = static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(table.size()) - 1));
  auto it = table.begin();
  std::advance(it, static_cast<std::ptrdiff_t>(pick));
  double bump = 0.0;
  while (bump == 0.0) bump = rng.uniform(-1.0, 1.0);
  table[{it->first.second, it->first.first}] = -it->second + bump;
  return table;
}

AlignmentTask random_alignment_task(Rng& rng, int dim, std::size_t branches) {
  require(dim == 2 || dim == 4, Errc::invalid_argument, "task family covers dim 2 and 4");
  require(branches >= 2, Errc::invalid_argument, "task needs at least two branches");
  const Rational h = rat(1, 50);
  const Int W = 6;
  IntVec rlo(static_cast<std::size_t>(dim), -W), rhi(static_cast<std::size_t>(dim), W);
  const LatticePatch reference(dim, std::vector<Rational>(static_cast<std::size_t>(dim), h),
                               {Box{rlo, rhi}});
  const Eigen::MatrixXd E = eta(dim);

  ExtendedAState state;
  std::map<ConfigId, BranchSeed> seeds;
  std::vector<ConfigId> ids;
  for (std::size_t u = 0; u < branches; ++u) {
    IntVec shift(static_cast<std::size_t>(dim), 0);
    if (u > 0)
      for (int a = 0; a < dim; ++a) shift[a] = rng.uniform_int(-2, 2);
    IntVec lo = rlo, hi = rhi;
    for (int a = 0; a < dim; ++a) {
      lo[a] += shift[a];
      hi[a] += shift[a];
    }
    LatticePatch region(dim, reference.spacing(), {Box{lo, hi}});

    // Metric: c * Lt (D + Q(dx)) L around the p1 image.
    const double c = rng.uniform(0.7, 1.5);
    Eigen::MatrixXd D = E;
    for (int a = 1; a < dim; ++a) {
      const double s = rng.uniform(0.8, 1.3);
      D(a, a) = s * s;
    }
    Eigen::MatrixXd L = boost(dim, 1 + static_cast<int>(rng.uniform_int(0, dim - 2)),
                              rng.uniform(-0.5, 0.5));
    if (dim == 4)
      L = boost(dim, 1 + static_cast<int>(rng.uniform_int(0, dim - 2)),
                rng.uniform(-0.5, 0.5)) * L;
    // Q symmetric in both the component and the coordinate pair.
    std::vector<Eigen::MatrixXd> Q(static_cast<std::size_t>(dim) * dim,
                                   Eigen::MatrixXd::Zero(dim, dim));
    for (int m = 0; m < dim; ++m)
      for (int n = m; n < dim; ++n) {
        Eigen::MatrixXd q(dim, dim);
        for (int a = 0; a < dim; ++a)
          for (int b = a; b < dim; ++b) q(b, a) = q(a, b) = 0.02 * c * rng.uniform(-1.0, 1.0);
        Q[m * dim + n] = q;
        Q[n * dim + m] = q;
      }

    Eigen::VectorXd center(dim);
    for (int a = 0; a < dim; ++a) center[a] = static_cast<double>(shift[a]) * h.to_double();

    TensorData g{0, 2, {}};
    g.comps.reserve(region.site_count() * static_cast<std::size_t>(dim) * dim);
    for (const auto& p : region.sites()) {
      const auto coords = region.coords_of(p);
      Eigen::VectorXd dx(dim);
      for (int a = 0; a < dim; ++a) dx[a] = coords[a] - center[a];
      Eigen::MatrixXd inner = D;
      for (int m = 0; m < dim; ++m)
        for (int n = 0; n < dim; ++n) inner(m, n) += dx.dot(Q[m * dim + n] * dx);
      const Eigen::MatrixXd met = c * (L.transpose() * inner * L);
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) g.comps.push_back(met(a, b));
    }
    FieldConfig config(region, {{std::string(FieldConfig::kMetric), g}});
    const ConfigId id = config_id(Configuration(config));
    ids.push_back(id);
    seeds.emplace(id, BranchSeed{region, Diffeo::lattice(LatticeMap::translation(shift))});
    const Complex w = std::polar(rng.uniform(0.5, 1.5), rng.uniform(0.0, 6.283185307179586));
    state.add_term(std::move(config), w, CoeffSet{"g", 0, 2, dim, std::move(g.comps)});
  }

  auto fam = IdentificationFamily::seeded(reference, std::move(seeds));
  std::vector<std::vector<double>> chart;
  chart.reserve(reference.site_count());
  for (const auto& p : reference.sites()) chart.push_back(reference.coords_of(p));
  QuantumCoordinateSystem qcs(std::move(fam), ids.front(), std::move(chart));
  QCPoint p1 = qcs.point_at(std::vector<double>(static_cast<std::size_t>(dim), 0.0));
  return AlignmentTask{std::move(state), std::move(qcs), std::move(p1), 0.1};
}

ContractionCase random_contraction(Rng& rng) {
  const int d = static_cast<int>(rng.uniform_int(2, 4));
  ContractionCase cs;
  cs.B.dim = cs.C.dim = d;
  const int rB = static_cast<int>(rng.uniform_int(0, 3));
  const int rC = static_cast<int>(rng.uniform_int(0, 3));
  cs.B.contra = static_cast<int>(rng.uniform_int(0, rB));
  cs.B.cov = rB - cs.B.contra;
  cs.C.contra = static_cast<int>(rng.uniform_int(0, rC));
  cs.C.cov = rC - cs.C.contra;

  std::vector<std::pair<int, int>> candidates;
  for (int sb = 0; sb < rB; ++sb)
    for (int sc = 0; sc < rC; ++sc)
      if ((sb < cs.B.contra) != (sc < cs.C.contra)) candidates.emplace_back(sb, sc);
  std::size_t want = static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(std::min<std::size_t>(candidates.size(), 2))));
  std::vector<bool> usedB(static_cast<std::size_t>(rB), false);
  std::vector<bool> usedC(static_cast<std::size_t>(rC), false);
  while (want > 0 && !candidates.empty()) {
    const std::size_t pick = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(candidates.size()) - 1));
    const auto [sb, sc] = candidates[pick];
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
    if (usedB[sb] || usedC[sc]) continue;
    usedB[sb] = usedC[sc] = true;
    cs.pairing.emplace_back(sb, sc);
    --want;
  }

  const std::size_t points = static_cast<std::size_t>(rng.uniform_int(1, 4));
  for (std::size_t q = 0; q < points; ++q) {
    std::vector<double> bv(cs.B.block_size()), cv(cs.C.block_size());
    for (double& x : bv) x = rng.uniform(-1.0, 1.0);
    for (double& x : cv) x = rng.uniform(-1.0, 1.0);
    cs.B.comps.emplace(static_cast<QPoint>(q), std::move(bv));
    cs.C.comps.emplace(static_cast<QPoint>(q), std::move(cv));
  }
  return cs;
}

}  // namespace qatlas::gen
