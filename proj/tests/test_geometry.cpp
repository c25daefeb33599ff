#include "helpers.hpp"

#include <numbers>

using namespace qatlas;
using namespace qatlas::testutil;

namespace {

LatticeMap random_lattice_map(Rng& rng, int d) {
  LatticeMap m;
  m.perm.resize(static_cast<std::size_t>(d));
  std::iota(m.perm.begin(), m.perm.end(), 0);
  for (int a = d - 1; a > 0; --a) std::swap(m.perm[a], m.perm[rng.uniform_int(0, a)]);
  for (int a = 0; a < d; ++a) {
    m.sign.push_back(rng.uniform() < 0.5 ? 1 : -1);
    m.shift.push_back(rng.uniform_int(-4, 4));
  }
  return m;
}

QuadraticMap random_quadratic(Rng& rng, int d) {
  QuadraticMap q = QuadraticMap::identity(d);
  for (int a = 0; a < d; ++a) {
    q.x0[a] = rng.uniform(-0.2, 0.2);
    q.c[a] = rng.uniform(-0.2, 0.2);
    for (int b = 0; b < d; ++b) q.A(a, b) += 0.15 * rng.uniform(-1.0, 1.0);
  }
  for (int mu = 0; mu < d; ++mu)
    for (int a = 0; a < d; ++a)
      for (int b = a; b < d; ++b)
        q.B[mu](b, a) = q.B[mu](a, b) = 0.05 * rng.uniform(-1.0, 1.0);
  return q;
}

Eigen::VectorXd random_point(Rng& rng, int d, double radius) {
  Eigen::VectorXd x(d);
  for (int a = 0; a < d; ++a) x[a] = rng.uniform(-radius, radius);
  return x;
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("lattice maps invert and compose exactly") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const int d = static_cast<int>(rng.uniform_int(1, 4));
    const LatticeMap f = random_lattice_map(rng, d);
    const LatticeMap g = random_lattice_map(rng, d);
    const LatticeMap h = random_lattice_map(rng, d);
    IntVec p(static_cast<std::size_t>(d));
    for (auto& c : p) c = rng.uniform_int(-9, 9);

    CHECK(f.apply_inverse(f.apply(p)) == p);
    CHECK(f.inverse().apply(f.apply(p)) == p);
    CHECK(LatticeMap::compose(g, f).apply(p) == g.apply(f.apply(p)));
    const LatticeMap left = LatticeMap::compose(LatticeMap::compose(h, g), f);
    const LatticeMap right = LatticeMap::compose(h, LatticeMap::compose(g, f));
    CHECK(left.apply(p) == right.apply(p));
    CHECK(LatticeMap::identity(d).apply(p) == p);
  }
}

TEST_CASE("lattice map validation") {
  CHECK_THROWS_AS(Diffeo::lattice(LatticeMap{{0, 0}, {1, 1}, {0, 0}}), Error);
  CHECK_THROWS_AS(Diffeo::lattice(LatticeMap{{0, 1}, {2, 1}, {0, 0}}), Error);
  CHECK_THROWS_AS(Diffeo::lattice(LatticeMap{{0, 1}, {1, 1}, {0}}), Error);
  CHECK_NOTHROW(Diffeo::lattice(LatticeMap::translation(IntVec{3, -2})));
}

TEST_CASE("quadratic maps evaluate, differentiate, and invert") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = static_cast<int>(rng.uniform_int(1, 4));
    const QuadraticMap q = random_quadratic(rng, d);
    const Eigen::VectorXd x = random_point(rng, d, 0.4);

    SUBCASE("jacobian matches finite differences") {}
    const Eigen::MatrixXd J = q.jacobian(x);
    const double eps = 1e-6;
    for (int b = 0; b < d; ++b) {
      Eigen::VectorXd xp = x, xm = x;
      xp[b] += eps;
      xm[b] -= eps;
      const Eigen::VectorXd col = (q.apply(xp) - q.apply(xm)) / (2 * eps);
      for (int a = 0; a < d; ++a) CHECK(close(J(a, b), col[a], 2e-9));
    }

    const Eigen::VectorXd y = q.apply(x);
    const Eigen::VectorXd back = q.apply_inverse(y);
    CHECK((back - x).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("quadratic map validation") {
  QuadraticMap q = QuadraticMap::identity(2);
  q.A << 1, 2, 2, 4;  // singular
  CHECK_THROWS_AS(Diffeo::analytic(q), Error);
  QuadraticMap r = QuadraticMap::identity(2);
  r.B[0](0, 1) = 0.3;  // asymmetric
  CHECK_THROWS_AS(Diffeo::analytic(r), Error);
}

TEST_CASE("diffeo chains act like their leg composition") {
  Rng rng(23);
  const std::vector<Rational> spacing{rat(1, 10), rat(1, 10), rat(1, 10)};
  for (int trial = 0; trial < 15; ++trial) {
    const int d = 3;
    const Diffeo f = Diffeo::lattice(random_lattice_map(rng, d));
    const Diffeo g = Diffeo::analytic(random_quadratic(rng, d));
    const Diffeo fg = Diffeo::compose(g, f);
    const Eigen::VectorXd x = random_point(rng, d, 0.4);

    const Eigen::VectorXd via_chain = fg.apply(x, spacing);
    const Eigen::VectorXd via_steps = g.apply(f.apply(x, spacing), spacing);
    CHECK((via_chain - via_steps).cwiseAbs().maxCoeff() < 1e-13);

    const Eigen::VectorXd round = fg.apply_inverse(fg.apply(x, spacing), spacing);
    CHECK((round - x).cwiseAbs().maxCoeff() < 1e-11);

    CHECK(!fg.lattice_exact());
    CHECK(f.lattice_exact());

    // Chain rule: D(g after f)(x) = Dg(f(x)) Df(x).
    const Eigen::MatrixXd J = fg.jacobian(x, spacing);
    const Eigen::MatrixXd Jref = g.jacobian(f.apply(x, spacing), spacing) * f.jacobian(x, spacing);
    CHECK((J - Jref).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("fused lattice equals leg by leg action") {
  Rng rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = static_cast<int>(rng.uniform_int(1, 4));
    const Diffeo f = Diffeo::lattice(random_lattice_map(rng, d));
    const Diffeo g = Diffeo::lattice(random_lattice_map(rng, d));
    const Diffeo chain = Diffeo::compose(g, f.inverse());
    const LatticeMap fused = chain.fused_lattice();
    IntVec p(static_cast<std::size_t>(d));
    for (auto& c : p) c = rng.uniform_int(-9, 9);
    CHECK(fused.apply(p) == chain.apply_index(p));
    CHECK(chain.apply_index_inverse(chain.apply_index(p)) == p);
  }
}

TEST_CASE("hessian of a quadratic chain matches finite differences") {
  Rng rng(31);
  const int d = 2;
  const std::vector<Rational> spacing{rat(1, 10), rat(1, 10)};
  const Diffeo f = Diffeo::analytic(random_quadratic(rng, d));
  const Diffeo g = Diffeo::analytic(random_quadratic(rng, d));
  const Diffeo chain = Diffeo::compose(g, f);
  const Eigen::VectorXd x = random_point(rng, d, 0.3);
  const auto H = chain.hessian(x, spacing);
  const double eps = 1e-5;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      Eigen::VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
      xpp[a] += eps; xpp[b] += eps;
      xpm[a] += eps; xpm[b] -= eps;
      xmp[a] -= eps; xmp[b] += eps;
      xmm[a] -= eps; xmm[b] -= eps;
      const Eigen::VectorXd fd = (chain.apply(xpp, spacing) - chain.apply(xpm, spacing) -
                                  chain.apply(xmp, spacing) + chain.apply(xmm, spacing)) /
                                 (4 * eps * eps);
      for (int mu = 0; mu < d; ++mu) CHECK(close(H[mu](a, b), fd[mu], 5e-5));
    }
}

TEST_CASE("tensor blocks transform slot by slot") {
  Rng rng(37);
  const int d = 3;
  Eigen::MatrixXd J(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) J(a, b) = (a == b) + 0.2 * rng.uniform(-1, 1);
  const Eigen::MatrixXd Jinv = J.inverse();

  SUBCASE("scalars are unchanged") {
    const std::vector<double> s{2.5};
    CHECK(transform_tensor(s, 0, 0, d, J, Jinv) == s);
  }
  SUBCASE("vectors contract with the forward jacobian") {
    std::vector<double> v{1.0, -2.0, 0.5};
    const auto out = transform_tensor(v, 1, 0, d, J, Jinv);
    const Eigen::Map<const Eigen::VectorXd> vin(v.data(), d);
    const Eigen::VectorXd want = J * vin;
    for (int a = 0; a < d; ++a) CHECK(close(out[a], want[a], 1e-14));
  }
  SUBCASE("covectors contract with the inverse") {
    std::vector<double> w{0.3, 1.0, -0.7};
    const auto out = transform_tensor(w, 0, 1, d, J, Jinv);
    const Eigen::Map<const Eigen::VectorXd> win(w.data(), d);
    const Eigen::VectorXd want = Jinv.transpose() * win;
    for (int a = 0; a < d; ++a) CHECK(close(out[a], want[a], 1e-14));
  }
  SUBCASE("rank two covariant blocks transform as Jinv^T g Jinv") {
    std::vector<double> g(static_cast<std::size_t>(d) * d);
    for (auto& x : g) x = rng.uniform(-1, 1);
    const auto out = transform_tensor(g, 0, 2, d, J, Jinv);
    const Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>> G(g.data());
    const Eigen::MatrixXd want = Jinv.transpose() * G * Jinv;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        CHECK(close(out[static_cast<std::size_t>(a) * d + b], want(a, b), 1e-14));
  }
  SUBCASE("identity jacobian fixes mixed tensors") {
    std::vector<double> t(static_cast<std::size_t>(d) * d * d);
    for (auto& x : t) x = rng.uniform(-1, 1);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
    CHECK(transform_tensor(t, 1, 2, d, I, I) == t);
  }
}

TEST_CASE("lattice pullback relocates supports exactly") {
  LatticePatch patch = box_patch(2, 0, 2);
  FieldConfig u = flat_with_scalar(patch, "phi", [](const std::vector<double>& x) {
    return x[0] + 10.0 * x[1];
  });
  const Diffeo t = Diffeo::lattice(LatticeMap::translation(IntVec{5, -1}));
  const FieldConfig moved = pullback_config(t, u);
  CHECK(moved.patch().sites().front() == IntVec{5, -1});
  CHECK(moved.patch().sites().back() == IntVec{7, 1});
  // Scalars relocate without value change; site order is preserved.
  CHECK(moved.field("phi").comps == u.field("phi").comps);
  CHECK(moved.metric().comps == u.metric().comps);

  const FieldConfig back = pullback_config(t.inverse(), moved);
  CHECK(back == u);
}

TEST_CASE("axis swap permutes metric components") {
  LatticePatch patch = box_patch(2, -1, 1);
  TensorData g{0, 2, {}};
  for (std::size_t s = 0; s < patch.site_count(); ++s)
    for (double v : {-1.0, 0.0, 0.0, 4.0}) g.comps.push_back(v);
  FieldConfig u(patch, {{"g", g}});
  // Swapping axes turns diag(-1, 4) into diag(4, -1); that flips which axis is
  // timelike but keeps the signature, so the pullback stays constructible.
  LatticeMap swap{{1, 0}, {1, 1}, {0, 0}};
  const FieldConfig out = pullback_config(Diffeo::lattice(swap), u);
  const auto block = out.block("g", 0);
  CHECK(block[0] == 4.0);
  CHECK(block[3] == -1.0);
}

TEST_CASE("analytic pullback produces the image support") {
  LatticePatch patch = box_patch(2, -4, 4);
  FieldConfig u = flat_with_scalar(patch, "phi", [](const std::vector<double>& x) {
    return 2.0 * x[0] - x[1] + 0.25;
  });

  SUBCASE("half cell translation resamples linear fields exactly") {
    QuadraticMap shift = QuadraticMap::affine(Eigen::Matrix2d::Identity(),
                                              Eigen::Vector2d(0.05, 0.0));
    const FieldConfig out = pullback_config(Diffeo::analytic(shift), u);
    // phi'(x') = phi(x' - 0.05 e0).
    for (std::size_t i = 0; i < out.patch().site_count(); ++i) {
      const auto c = out.patch().coords_of(out.patch().sites()[i]);
      const double want = 2.0 * (c[0] - 0.05) - c[1] + 0.25;
      CHECK(close(out.field("phi").comps[i], want, 1e-12));
    }
  }
  SUBCASE("contraction shrinks the support, expansion grows it") {
    QuadraticMap half = QuadraticMap::affine(0.5 * Eigen::Matrix2d::Identity(),
                                             Eigen::Vector2d::Zero());
    const FieldConfig shrunk = pullback_config(Diffeo::analytic(half), u);
    CHECK(shrunk.patch().site_count() < patch.site_count());
    for (const auto& p : shrunk.patch().sites()) {
      CHECK(std::abs(p[0]) <= 2);
      CHECK(std::abs(p[1]) <= 2);
    }

    QuadraticMap twice = QuadraticMap::affine(2.0 * Eigen::Matrix2d::Identity(),
                                              Eigen::Vector2d::Zero());
    const FieldConfig grown = pullback_config(Diffeo::analytic(twice), u);
    CHECK(grown.patch().site_count() > patch.site_count());
    CHECK(grown.patch().contains_site(IntVec{8, -8}));
  }
  SUBCASE("pure rotation by pi/2 relocates like the matching site map") {
    Eigen::Matrix2d R;
    R << 0, -1, 1, 0;
    const FieldConfig a =
        pullback_config(Diffeo::analytic(QuadraticMap::affine(R, Eigen::Vector2d::Zero())), u);
    const FieldConfig b =
        pullback_config(Diffeo::lattice(LatticeMap{{1, 0}, {-1, 1}, {0, 0}}), u);
    CHECK(a.patch().sites() == b.patch().sites());
    for (std::size_t i = 0; i < a.patch().site_count(); ++i)
      CHECK(close(a.field("phi").comps[i], b.field("phi").comps[i], 1e-12));
  }
}

TEST_CASE("pullback is contravariant on the shared support") {
  Rng rng(41);
  LatticePatch patch = box_patch(2, -5, 5);
  FieldConfig u = flat_with_scalar(patch, "phi", [](const std::vector<double>& x) {
    return std::sin(x[0]) * std::cos(x[1]);
  });
  for (int trial = 0; trial < 5; ++trial) {
    QuadraticMap fa = QuadraticMap::identity(2);
    QuadraticMap fb = QuadraticMap::identity(2);
    for (int a = 0; a < 2; ++a) {
      fa.c[a] = rng.uniform(-0.1, 0.1);
      fb.c[a] = rng.uniform(-0.1, 0.1);
      for (int b = 0; b < 2; ++b) {
        fa.A(a, b) += 0.05 * rng.uniform(-1, 1);
        fb.A(a, b) += 0.05 * rng.uniform(-1, 1);
      }
    }
    const Diffeo f = Diffeo::analytic(fa);
    const Diffeo g = Diffeo::analytic(fb);
    const FieldConfig two_step = pullback_config(g, pullback_config(f, u));
    const FieldConfig composed = pullback_config(Diffeo::compose(g, f), u);
    // Supports may differ by a boundary ring; values must agree where both exist.
    std::size_t compared = 0;
    for (std::size_t i = 0; i < two_step.patch().site_count(); ++i) {
      const auto j = composed.patch().site_index(two_step.patch().sites()[i]);
      if (!j) continue;
      // Interpolation error compounds differently per route near the rim.
      const auto& site = two_step.patch().sites()[i];
      if (std::abs(site[0]) > 3 || std::abs(site[1]) > 3) continue;
      ++compared;
      CHECK(close(two_step.field("phi").comps[i], composed.field("phi").comps[*j], 1e-5));
    }
    CHECK(compared > 9);
  }
}

TEST_CASE("analytic image that misses every lattice cell is rejected") {
  // A single-site support shifted by half a cell interpolates nowhere.
  LatticePatch patch = box_patch(1, 2, 2);
  FieldConfig u = flat_config(patch);
  QuadraticMap shift = QuadraticMap::affine(Eigen::MatrixXd::Identity(1, 1),
                                            0.05 * Eigen::VectorXd::Ones(1));
  CHECK_THROWS_WITH_AS(pullback_config(Diffeo::analytic(shift), u),
                       doctest::Contains("misses the lattice"), Error);
  CHECK_THROWS_WITH_AS(Diffeo::analytic(QuadraticMap::affine(
                           1e-18 * Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1))),
                       doctest::Contains("invertible"), Error);
}

TEST_CASE("christoffel symbols of flat and quadratic metrics") {
  SUBCASE("flat metric has vanishing symbols") {
    FieldConfig u = flat_config(box_patch(2, -2, 2));
    const auto G = christoffel(u, IntVec{0, 0});
    for (double x : G) CHECK(x == 0.0);
  }
  SUBCASE("quadratic metric matches the closed form") {
    // g = eta + diag(q x1^2, q x0^2): dg is linear, central differences exact.
    const double q = 0.3;
    LatticePatch patch = box_patch(2, -3, 3, rat(1, 8));
    TensorData g{0, 2, {}};
    for (const auto& p : patch.sites()) {
      const auto x = patch.coords_of(p);
      g.comps.push_back(-1.0 + q * x[1] * x[1]);
      g.comps.push_back(0.0);
      g.comps.push_back(0.0);
      g.comps.push_back(1.0 + q * x[0] * x[0]);
    }
    FieldConfig u(patch, {{"g", g}});
    const auto G = christoffel(u, IntVec{1, 1});
    const auto x = patch.coords_of(IntVec{1, 1});
    const double g00 = -1.0 + q * x[1] * x[1];
    const double g11 = 1.0 + q * x[0] * x[0];
    // Independent evaluation of Gamma^l_{mn} = 1/2 g^{ll}(d_m g_nl + d_n g_ml - d_l g_mn).
    const double d1g00 = 2 * q * x[1];
    const double d0g11 = 2 * q * x[0];
    const int d = 2;
    auto idx = [d](int l, int m, int n) { return (l * d + m) * d + n; };
    CHECK(close(G[idx(0, 0, 1)], 0.5 / g00 * d1g00, 1e-12));
    CHECK(close(G[idx(0, 1, 0)], 0.5 / g00 * d1g00, 1e-12));
    CHECK(close(G[idx(0, 1, 1)], 0.0, 1e-12));
    CHECK(close(G[idx(1, 1, 0)], 0.5 / g11 * d0g11, 1e-12));
    CHECK(close(G[idx(1, 0, 0)], 0.0, 1e-12));
    CHECK(close(G[idx(0, 0, 0)], 0.0, 1e-12));
  }
  SUBCASE("boundary sites are rejected") {
    FieldConfig u = flat_config(box_patch(2, -2, 2));
    CHECK_THROWS_WITH_AS(christoffel(u, IntVec{2, 0}), doctest::Contains("BoundarySite"), Error);
  }
}

TEST_CASE("minkowski frame diagonalizes Lorentzian metrics") {
  Rng rng(43);
  for (int trial = 0; trial < 25; ++trial) {
    const int d = static_cast<int>(rng.uniform_int(2, 4));
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(d, d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) A(a, b) += 0.3 * rng.uniform(-1, 1);
    Eigen::MatrixXd eta = Eigen::MatrixXd::Identity(d, d);
    eta(0, 0) = -1;
    const Eigen::MatrixXd g = A.transpose() * eta * A;
    const Eigen::MatrixXd J = minkowski_frame(g);
    CHECK((J.transpose() * g * J - eta).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("already flat needs no frame change") {
    Eigen::MatrixXd eta = Eigen::MatrixXd::Identity(3, 3);
    eta(0, 0) = -1;
    CHECK((minkowski_frame(eta) - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("euclidean signature is rejected") {
    CHECK_THROWS_WITH_AS(minkowski_frame(Eigen::MatrixXd::Identity(2, 2)),
                         doctest::Contains("signature"), Error);
  }
}

}
