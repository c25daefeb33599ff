#include "helpers.hpp"

using namespace qatlas;
using namespace qatlas::testutil;

TEST_SUITE("configuration") {

TEST_CASE("time support enforces disjoint sorted intervals") {
  TimeSupport ts(0, rat(1, 4), {IndexInterval{0, 3}, IndexInterval{6, 8}});
  CHECK(ts.size() == 7);
  CHECK(ts.contains_index(3));
  CHECK(!ts.contains_index(5));
  CHECK(ts.indices() == std::vector<Int>{0, 1, 2, 3, 6, 7, 8});
  CHECK(ts.position_of(6) == 4);
  CHECK(!ts.position_of(4).has_value());

  CHECK_THROWS_AS(TimeSupport(0, rat(1, 4), {IndexInterval{0, 3}, IndexInterval{3, 5}}), Error);
  CHECK_THROWS_AS(TimeSupport(0, rat(1, 4), {IndexInterval{4, 2}}), Error);
  CHECK_THROWS_AS(TimeSupport(0, rat(-1, 4), {IndexInterval{0, 1}}), Error);
}

TEST_CASE("time support subset and grid identity") {
  TimeSupport big(0, rat(1, 4), {IndexInterval{0, 10}});
  TimeSupport small(0, rat(1, 4), {IndexInterval{2, 3}, IndexInterval{7, 9}});
  TimeSupport othergrid(0, rat(1, 5), {IndexInterval{2, 3}});
  CHECK(small.subset_of(big));
  CHECK(!big.subset_of(small));
  CHECK(!othergrid.subset_of(big));
  CHECK(big.index_of_time(rat(5, 4)) == 5);
  CHECK_THROWS_AS(big.index_of_time(rat(1, 3)), Error);
}

TEST_CASE("lattice patch canonical site enumeration") {
  LatticePatch patch(2, {rat(1, 10), rat(1, 10)},
                     {Box{{3, 0}, {4, 1}}, Box{{0, 0}, {1, 1}}});
  const auto& sites = patch.sites();
  CHECK(patch.site_count() == 8);
  CHECK(sites.front() == IntVec{0, 0});
  CHECK(sites.back() == IntVec{4, 1});
  CHECK(std::is_sorted(sites.begin(), sites.end()));
  CHECK(patch.site_index(IntVec{3, 1}) == 5);
  CHECK(!patch.site_index(IntVec{2, 0}).has_value());
  CHECK(patch.contains_site(IntVec{4, 0}));

  CHECK_THROWS_AS(LatticePatch(2, {rat(1, 10), rat(1, 10)},
                               {Box{{0, 0}, {2, 2}}, Box{{2, 2}, {3, 3}}}),
                  Error);
}

TEST_CASE("from_sites reproduces canonical order") {
  LatticePatch patch = box_patch(2, -1, 1);
  auto shuffled = patch.sites();
  std::swap(shuffled.front(), shuffled.back());
  LatticePatch rebuilt = LatticePatch::from_sites(2, patch.spacing(), shuffled);
  CHECK(rebuilt.sites() == patch.sites());
  CHECK(rebuilt.subset_of(patch));
  CHECK(patch.subset_of(rebuilt));
}

TEST_CASE("coords are spacing times index") {
  LatticePatch patch = box_patch(2, -2, 2, rat(1, 4));
  const auto c = patch.coords_of(IntVec{-2, 1});
  CHECK(c[0] == -0.5);
  CHECK(c[1] == 0.25);
}

TEST_CASE("path config values align with support") {
  PathConfig p = simple_path({5, 6, 7});
  CHECK(p.value_at(0) == 5);
  CHECK(p.value_at(2) == 7);
  CHECK(p.y_at(2) == doctest::Approx(-5.0 + 0.7).epsilon(1e-15));
  CHECK_THROWS_AS(p.value_at(3), Error);

  TimeSupport ts(0, rat(1, 4), {IndexInterval{0, 2}});
  PositionLattice lat{rat(-5, 1), rat(1, 10), 101};
  CHECK_THROWS_AS(PathConfig(ts, lat, {0, 1}), Error);      // size mismatch
  CHECK_THROWS_AS(PathConfig(ts, lat, {0, 1, 101}), Error); // off lattice
}

TEST_CASE("field config requires a Lorentzian symmetric metric") {
  LatticePatch patch = box_patch(2, 0, 1);
  CHECK_NOTHROW(flat_config(patch));
  CHECK_THROWS_AS(FieldConfig(patch, {}), Error);

  TensorData euclid{0, 2, {}};
  for (std::size_t s = 0; s < patch.site_count(); ++s)
    for (double v : {1.0, 0.0, 0.0, 1.0}) euclid.comps.push_back(v);
  CHECK_THROWS_WITH_AS(FieldConfig(patch, {{"g", euclid}}),
                       doctest::Contains("signature"), Error);

  TensorData asym{0, 2, {}};
  for (std::size_t s = 0; s < patch.site_count(); ++s)
    for (double v : {-1.0, 0.3, -0.3, 1.0}) asym.comps.push_back(v);
  CHECK_THROWS_AS(FieldConfig(patch, {{"g", asym}}), Error);

  TensorData g = eta_metric(patch);
  TensorData shortf{0, 0, std::vector<double>(patch.site_count() - 1, 0.0)};
  CHECK_THROWS_AS(FieldConfig(patch, {{"g", g}, {"phi", shortf}}), Error);
}

TEST_CASE("restrict copies values bitwise") {
  LatticePatch big = box_patch(1, 0, 5);
  FieldConfig v = flat_with_scalar(big, "phi", [](const std::vector<double>& x) {
    return 3.0 * x[0] + 0.125;
  });
  SUBCASE("identity restriction") {
    Configuration r = restrict_config(Configuration(v), SupportSpec(big));
    CHECK(std::get<FieldConfig>(r) == v);
  }
  SUBCASE("proper restriction picks the right sites") {
    LatticePatch sub = box_patch(1, 2, 3);
    Configuration r = restrict_config(Configuration(v), SupportSpec(sub));
    const auto& rc = std::get<FieldConfig>(r);
    CHECK(rc.patch().site_count() == 2);
    CHECK(rc.field("phi").comps == std::vector<double>{v.field("phi").comps[2],
                                                       v.field("phi").comps[3]});
  }
  SUBCASE("outside support fails") {
    LatticePatch out = box_patch(1, 4, 9);
    CHECK_THROWS_AS(restrict_config(Configuration(v), SupportSpec(out)), Error);
  }
}

TEST_CASE("restriction composes") {
  PathConfig v = simple_path({1, 2, 3, 4, 5, 6});
  TimeSupport s1(0, rat(1, 4), {IndexInterval{1, 4}});
  TimeSupport s2(0, rat(1, 4), {IndexInterval{2, 3}});
  Configuration once = restrict_config(Configuration(v), SupportSpec(s2));
  Configuration twice =
      restrict_config(restrict_config(Configuration(v), SupportSpec(s1)), SupportSpec(s2));
  CHECK(once == twice);
}

TEST_CASE("contains and bracket agree and are asymmetric") {
  PathConfig v = simple_path({1, 2, 3, 4});
  TimeSupport s(0, rat(1, 4), {IndexInterval{1, 2}});
  Configuration u = restrict_config(Configuration(v), SupportSpec(s));

  CHECK(contains(u, u));
  CHECK(contains(u, Configuration(v)));
  CHECK(!contains(Configuration(v), u));
  CHECK(bracket(u, Configuration(v)) == 1);
  CHECK(bracket(Configuration(v), u) == 0);

  PathConfig w = simple_path({1, 9, 3, 4});
  CHECK(!contains(u, Configuration(w)));
  CHECK(bracket(u, Configuration(w)) == 0);

  LatticePatch patch = box_patch(2, 0, 1);
  CHECK_THROWS_AS(contains(u, Configuration(flat_config(patch))), Error);
}

TEST_CASE("disjoint supports never contain") {
  PathConfig a = simple_path({1, 2});
  TimeSupport far(0, rat(1, 4), {IndexInterval{10, 11}});
  PathConfig b(far, a.lattice(), {1, 2});
  CHECK(bracket(Configuration(a), Configuration(b)) == 0);
  CHECK(bracket(Configuration(b), Configuration(a)) == 0);
}

TEST_CASE("containment is a partial order on a random catalog") {
  Rng rng(20260816);
  std::vector<Configuration> cat;
  PathConfig base = simple_path({3, 4, 5, 6, 7, 8, 9, 10});
  cat.emplace_back(base);
  for (int i = 0; i < 19; ++i) {
    const Int lo = rng.uniform_int(0, 6);
    const Int hi = rng.uniform_int(lo, 7);
    TimeSupport s(0, rat(1, 4), {IndexInterval{lo, hi}});
    Configuration u = restrict_config(Configuration(base), SupportSpec(s));
    if (rng.uniform() < 0.3) {
      // Mutate one value so not every pair is comparable.
      auto& pc = std::get<PathConfig>(u);
      auto vals = pc.values();
      vals[0] = (vals[0] + 1) % 101;
      u = PathConfig(pc.support(), pc.lattice(), vals);
    }
    cat.push_back(std::move(u));
  }
  for (const auto& u : cat) CHECK(contains(u, u));
  for (const auto& u : cat)
    for (const auto& v : cat) {
      CHECK((bracket(u, v) == 1) == contains(u, v));
      if (contains(u, v) && contains(v, u)) CHECK(u == v);
      for (const auto& w : cat)
        if (contains(u, v) && contains(v, w)) CHECK(contains(u, w));
    }
}

TEST_CASE("config ids are stable and catalog sorts them") {
  PathConfig p = simple_path({1, 2, 3});
  const ConfigId id = config_id(Configuration(p));
  CHECK(id == config_id(Configuration(simple_path({1, 2, 3}))));
  CHECK(id != config_id(Configuration(simple_path({1, 2, 4}))));
  CHECK(id_from_hex(to_hex(id)) == id);

  Catalog cat;
  const ConfigId a = cat.add(Configuration(p));
  const ConfigId b = cat.add(Configuration(simple_path({4, 5, 6})));
  cat.add(Configuration(p));  // duplicate collapses
  CHECK(cat.size() == 2);
  const auto ids = cat.ids();
  CHECK(std::is_sorted(ids.begin(), ids.end()));
  CHECK(cat.has(a));
  CHECK(std::get<PathConfig>(cat.at(b)).values() == std::vector<Int>{4, 5, 6});
}

}
