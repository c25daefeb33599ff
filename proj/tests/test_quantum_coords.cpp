#include "helpers.hpp"

#include <set>

using namespace qatlas;
using namespace qatlas::testutil;

namespace {

Diffeo translate2(Int a, Int b) {
  return Diffeo::lattice(LatticeMap::translation(IntVec{a, b}));
}

struct TwoBranchSetup {
  ExtendedAState state;
  std::vector<ConfigId> ids;  // ascending
  LatticePatch reference;
  QuantumCoordinateSystem qcs;
};

// Two field branches on separated boxes, identified by lattice translations
// from a shared reference window; chart = reference coordinates.
TwoBranchSetup make_setup() {
  ExtendedAState state;
  for (int off : {0, 10}) {
    LatticePatch patch = box_patch(2, off, off + 3);
    FieldConfig u = flat_with_scalar(patch, "phi", [off](const std::vector<double>& x) {
      return x[0] + 2.0 * x[1] + off;
    });
    CoeffSet coeffs{"A", 0, 0, 1, std::vector<double>(patch.site_count(), 1.0)};
    state.add_term(std::move(u), Complex{off ? 0.8 : 0.6, 0.0}, std::move(coeffs));
  }
  std::vector<ConfigId> ids;
  for (const auto& [id, t] : state.terms()) ids.push_back(id);

  LatticePatch reference = box_patch(2, 0, 2);
  std::map<ConfigId, BranchSeed> seeds;
  // Ids are sorted, not support-ordered; recover each branch's box offset.
  for (const ConfigId& id : ids) {
    const auto& patch = std::get<FieldConfig>(state.terms().at(id).config).patch();
    const Int off = patch.sites().front()[0];
    seeds.emplace(id, BranchSeed{box_patch(2, off, off + 2), translate2(off, off)});
  }
  IdentificationFamily fam = IdentificationFamily::seeded(reference, std::move(seeds));

  std::vector<std::vector<double>> chart;
  for (const auto& p : reference.sites()) chart.push_back(reference.coords_of(p));
  QuantumCoordinateSystem qcs(fam, ids[0], chart);
  return TwoBranchSetup{std::move(state), std::move(ids), std::move(reference), std::move(qcs)};
}

}  // namespace

TEST_SUITE("quantum_coords") {

TEST_CASE("site images read through coordinate maps") {
  LatticePatch source = box_patch(2, 0, 4);
  LatticePatch target = box_patch(2, 3, 7);

  SUBCASE("lattice translations act on indices") {
    CHECK(site_image(translate2(3, 3), IntVec{1, 2}, source, target) == IntVec{4, 5});
  }
  SUBCASE("analytic maps must land on lattice sites") {
    QuadraticMap on = QuadraticMap::affine(Eigen::Matrix2d::Identity(),
                                           Eigen::Vector2d(0.3, 0.3));
    CHECK(site_image(Diffeo::analytic(on), IntVec{1, 2}, source, target) == IntVec{4, 5});
    QuadraticMap off = QuadraticMap::affine(Eigen::Matrix2d::Identity(),
                                            Eigen::Vector2d(0.35, 0.3));
    CHECK_THROWS_WITH_AS(site_image(Diffeo::analytic(off), IntVec{1, 2}, source, target),
                         doctest::Contains("NotInvertible"), Error);
  }
  SUBCASE("dimension mismatches are rejected") {
    CHECK_THROWS_AS(site_image(Diffeo::identity(3), IntVec{1, 2}, source, target), Error);
  }
}

TEST_CASE("seeded families satisfy the cocycle by construction") {
  Rng rng(3);
  LatticePatch reference = box_patch(2, 0, 2);
  std::map<ConfigId, BranchSeed> seeds;
  for (int k = 0; k < 4; ++k) {
    const ConfigId id{rng.next_u64(), rng.next_u64()};
    const Int a = rng.uniform_int(-6, 6), b = rng.uniform_int(-6, 6);
    LatticePatch region(2, {rat(1, 10), rat(1, 10)}, {Box{IntVec{a, b}, IntVec{a + 2, b + 2}}});
    seeds.emplace(id, BranchSeed{std::move(region), translate2(a, b)});
  }
  const IdentificationFamily fam = IdentificationFamily::seeded(reference, seeds);
  CHECK(fam.branches().size() == 4);
  CHECK(fam.seeded_storage());
  CHECK(verify_consistency(fam).ok());

  // phi_{u->v} carries region(u) onto region(v) site by site.
  const ConfigId u = fam.branches()[0], v = fam.branches()[1];
  const Diffeo uv = fam.map(u, v);
  for (const auto& p : fam.region(u).sites())
    CHECK(fam.region(v).contains_site(site_image(uv, p, fam.region(u), fam.region(v))));
}

TEST_CASE("explicit tables can violate the cocycle") {
  const ConfigId a{1, 0}, b{2, 0}, c{3, 0};
  const std::map<ConfigId, LatticePatch> regions{
      {a, box_patch(2, 0, 2)}, {b, box_patch(2, 5, 7)}, {c, box_patch(2, -6, -4)}};

  auto straight_table = [&] {
    std::map<std::pair<ConfigId, ConfigId>, Diffeo> maps;
    auto put = [&](const ConfigId& u, const ConfigId& v, Int dx, Int dy) {
      maps.emplace(std::make_pair(u, v), translate2(dx, dy));
      maps.emplace(std::make_pair(v, u), translate2(-dx, -dy));
    };
    put(a, b, 5, 5);
    put(b, c, -11, -11);
    put(a, c, -6, -6);
    return maps;
  };

  SUBCASE("consistent table passes") {
    const auto fam = IdentificationFamily::from_table(regions, straight_table());
    CHECK_FALSE(fam.seeded_storage());
    CHECK(verify_consistency(fam).ok());
  }
  SUBCASE("broken triple is reported") {
    // Replace a->c with a quarter turn onto the same region: every pairwise
    // map stays a bijection, only the triple condition fails.
    auto maps = straight_table();
    const LatticeMap rot{{1, 0}, {-1, 1}, {-4, -6}};
    maps.at(std::make_pair(a, c)) = Diffeo::lattice(rot);
    maps.at(std::make_pair(c, a)) = Diffeo::lattice(rot.inverse());
    const auto fam = IdentificationFamily::from_table(regions, maps);
    const ConsistencyReport report = verify_consistency(fam);
    CHECK_FALSE(report.ok());
    CHECK(report.violations.size() >= 2);
    for (const auto& viol : report.violations) {
      // Only triple violations: u, v, w pairwise distinct, with a site offset.
      CHECK(viol.u != viol.v);
      CHECK(viol.v != viol.w);
      CHECK(viol.u != viol.w);
      CHECK(viol.max_deviation > 0.0);
    }
  }
  SUBCASE("non bijective maps are reported") {
    auto maps = straight_table();
    maps.at(std::make_pair(a, b)) = translate2(5, 4);  // image leaks below region(b)
    const auto fam = IdentificationFamily::from_table(regions, maps);
    const ConsistencyReport report = verify_consistency(fam);
    CHECK_FALSE(report.ok());
    bool saw_pair = false;
    for (const auto& viol : report.violations)
      if (viol.v == viol.w && viol.note.find("region") != std::string::npos) saw_pair = true;
    CHECK(saw_pair);
  }
}

TEST_CASE("coordinates read consistently across branches") {
  TwoBranchSetup s = make_setup();
  const auto& fam = s.qcs.identification();

  // Seed chart reads back directly.
  CHECK(s.qcs.coord_dim() == 2);
  const auto& seed_region = fam.region(s.qcs.seed_branch());
  for (std::size_t i = 0; i < seed_region.site_count(); ++i) {
    const auto x = s.qcs.coord_of(s.qcs.seed_branch(), seed_region.sites()[i]);
    CHECK(x == s.qcs.seed_chart()[i]);
  }

  // Identified points in the other branch carry the same coordinates.
  const ConfigId other = s.ids[0] == s.qcs.seed_branch() ? s.ids[1] : s.ids[0];
  const Diffeo to_other = fam.map(s.qcs.seed_branch(), other);
  for (const auto& p : seed_region.sites()) {
    const IntVec q = site_image(to_other, p, seed_region, fam.region(other));
    CHECK(s.qcs.coord_of(other, q) == s.qcs.coord_of(s.qcs.seed_branch(), p));
  }

  SUBCASE("point_at inverts coord_of") {
    for (const auto& p : seed_region.sites()) {
      const auto x = s.qcs.coord_of(s.qcs.seed_branch(), p);
      const QCPoint pt = s.qcs.point_at(x);
      CHECK(pt.x == x);
      REQUIRE(pt.branch_points.size() == fam.branches().size());
      for (const auto& [u, q] : pt.branch_points)
        CHECK(s.qcs.coord_of(u, q) == x);
    }
  }
  SUBCASE("outside points are errors") {
    CHECK_THROWS_WITH_AS(s.qcs.point_at({99.0, 99.0}), doctest::Contains("NotInvertible"),
                         Error);
    CHECK_THROWS_WITH_AS(s.qcs.coord_of(s.qcs.seed_branch(), IntVec{50, 50}),
                         doctest::Contains("BranchMismatch"), Error);
  }
}

TEST_CASE("classical transforms rename coordinates only") {
  TwoBranchSetup s = make_setup();


  QuadraticMap doubling = QuadraticMap::affine(2.0 * Eigen::Matrix2d::Identity(),
                                               Eigen::Vector2d(1.0, -1.0));
  const QuantumCoordinateSystem renamed =
      classical_coord_transform(s.qcs, Diffeo::analytic(doubling));

  // Same family object, untouched regions.
  CHECK(renamed.identification_ptr() == s.qcs.identification_ptr());
  CHECK(renamed.seed_branch() == s.qcs.seed_branch());

  const auto& region = s.qcs.identification().region(s.qcs.seed_branch());
  for (const auto& p : region.sites()) {
    const auto old_x = s.qcs.coord_of(s.qcs.seed_branch(), p);
    const auto new_x = renamed.coord_of(s.qcs.seed_branch(), p);
    REQUIRE(new_x.size() == 2);
    CHECK(close(new_x[0], 2.0 * old_x[0] + 1.0, 1e-12));
    CHECK(close(new_x[1], 2.0 * old_x[1] - 1.0, 1e-12));
  }

  CHECK_THROWS_AS(classical_coord_transform(s.qcs, Diffeo::identity(3)), Error);
}

TEST_CASE("quantum transforms move regions branch by branch") {
  TwoBranchSetup s = make_setup();
  const auto& fam = s.qcs.identification();

  SUBCASE("a uniform translation preserves the identification maps") {
    std::map<ConfigId, Diffeo> per_branch;
    for (const ConfigId& u : fam.branches()) per_branch.emplace(u, translate2(1, 2));
    const QuantumCoordinateSystem moved = quantum_coord_transform(s.qcs, per_branch);
    const auto& fam2 = moved.identification();
    CHECK(verify_consistency(fam2).ok());
    for (const ConfigId& u : fam2.branches()) {
      CHECK(fam2.region(u).sites().front() ==
            LatticeMap::translation(IntVec{1, 2}).apply(fam.region(u).sites().front()));
      // Chart values ride along: x'(phi(p)) = x(p).
      for (const auto& p : fam.region(u).sites())
        CHECK(moved.coord_of(u, LatticeMap::translation(IntVec{1, 2}).apply(p)) ==
              s.qcs.coord_of(u, p));
    }
    const ConfigId u = fam.branches()[0], v = fam.branches()[1];
    CHECK(fam2.map(u, v).fused_lattice() == fam.map(u, v).fused_lattice());
  }
  SUBCASE("asymmetric translations conjugate the identification maps") {
    std::map<ConfigId, Diffeo> per_branch;
    per_branch.emplace(fam.branches()[0], translate2(3, 0));
    per_branch.emplace(fam.branches()[1], translate2(0, 0));
    const QuantumCoordinateSystem moved = quantum_coord_transform(s.qcs, per_branch);
    const ConfigId u = fam.branches()[0], v = fam.branches()[1];
    CHECK(verify_consistency(moved.identification()).ok());
    CHECK_FALSE(moved.identification().map(u, v).fused_lattice() == fam.map(u, v).fused_lattice());
  }
  SUBCASE("every branch needs a map") {
    std::map<ConfigId, Diffeo> partial;
    partial.emplace(fam.branches()[0], translate2(1, 0));
    CHECK_THROWS_WITH_AS(quantum_coord_transform(s.qcs, partial),
                         doctest::Contains("BranchMismatch"), Error);
  }
}

TEST_CASE("coincidence mapping funnels branches onto one region") {
  TwoBranchSetup s = make_setup();
  const ConfigId target = s.qcs.seed_branch();

  const auto [stage1, mapped] = to_coincidence(s.state, s.qcs, target);

  // One map per original branch.
  CHECK(stage1.maps.size() == s.state.terms().size());
  for (const auto& [id, t] : s.state.terms()) CHECK(stage1.maps.count(id) == 1);
  CHECK(stage1.phase.is_zero());

  // Every mapped term lives exactly on the target region.
  const LatticePatch& target_region = s.qcs.identification().region(target);
  CHECK(mapped.terms().size() == 2);
  double norm_before = 0.0, norm_after = 0.0;
  for (const auto& [id, t] : s.state.terms()) norm_before += std::norm(t.weight);
  for (const auto& [id, term] : mapped.terms()) {
    norm_after += std::norm(term.weight);
    const auto& patch = std::get<FieldConfig>(term.config).patch();
    CHECK(patch == target_region);
    CHECK(term.coeffs.values.size() == target_region.site_count());
  }
  CHECK(close(norm_after, norm_before, 1e-15));

  CHECK_THROWS_WITH_AS(to_coincidence(s.state, s.qcs, ConfigId{9, 9}),
                       doctest::Contains("BranchMismatch"), Error);
}

TEST_CASE("atlas coverage audits branch supports") {
  TwoBranchSetup s = make_setup();
  std::map<ConfigId, LatticePatch> supports;
  for (const ConfigId& u : s.qcs.identification().branches())
    supports.emplace(u, s.qcs.identification().region(u));

  CHECK(atlas_coverage({s.qcs}, supports).ok());

  // Grow one support beyond its region: the overhang is reported.
  const ConfigId u = s.qcs.identification().branches().front();
  const auto& region = s.qcs.identification().region(u);
  const Int off = region.sites().front()[0];
  supports.at(u) = box_patch(2, off, off + 3);
  const CoverageReport report = atlas_coverage({s.qcs}, supports);
  CHECK_FALSE(report.ok());
  CHECK(report.uncovered.size() == supports.at(u).site_count() - region.site_count());
  for (const auto& gap : report.uncovered) {
    CHECK(gap.branch == u);
    CHECK_FALSE(region.contains_site(gap.site));
  }
}

}
