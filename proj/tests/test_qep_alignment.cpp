#include "helpers.hpp"

#include <cmath>

using namespace qatlas;
using namespace qatlas::testutil;

namespace {

// Quadratic Lorentzian metric sampled on a box: g = eta + dg.x + 1/2 x.d2g.x.
struct QuadraticMetric {
  Eigen::MatrixXd g0;
  std::vector<Eigen::MatrixXd> dg;
  std::vector<std::vector<Eigen::MatrixXd>> d2g;

  Eigen::MatrixXd at(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd g = g0;
    const int d = static_cast<int>(g0.rows());
    for (int mu = 0; mu < d; ++mu) {
      g += x[mu] * dg[mu];
      for (int nu = 0; nu < d; ++nu) g += 0.5 * x[mu] * x[nu] * d2g[mu][nu];
    }
    return g;
  }
};

QuadraticMetric random_quadratic_metric(Rng& rng, int d, double scale) {
  QuadraticMetric q;
  q.g0 = Eigen::MatrixXd::Identity(d, d);
  q.g0(0, 0) = -1.0;
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      if (a != b) q.g0(a, b) = q.g0(b, a) = 0.05 * scale * rng.uniform(-1, 1);
    }
  q.dg.assign(static_cast<std::size_t>(d), Eigen::MatrixXd::Zero(d, d));
  q.d2g.assign(static_cast<std::size_t>(d),
               std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(d),
                                            Eigen::MatrixXd::Zero(d, d)));
  for (int mu = 0; mu < d; ++mu)
    for (int a = 0; a < d; ++a)
      for (int b = a; b < d; ++b) {
        q.dg[mu](a, b) = q.dg[mu](b, a) = 0.3 * scale * rng.uniform(-1, 1);
      }
  for (int mu = 0; mu < d; ++mu)
    for (int nu = mu; nu < d; ++nu) {
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
      for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) m(a, b) = m(b, a) = 0.2 * scale * rng.uniform(-1, 1);
      q.d2g[mu][nu] = m;
      q.d2g[nu][mu] = m;
    }
  return q;
}

FieldConfig sample_metric(const QuadraticMetric& q, const LatticePatch& patch) {
  const int d = patch.dim();
  TensorData g{0, 2, {}};
  g.comps.reserve(patch.site_count() * static_cast<std::size_t>(d) * d);
  for (const auto& p : patch.sites()) {
    const auto c = patch.coords_of(p);
    const Eigen::MatrixXd m = q.at(Eigen::Map<const Eigen::VectorXd>(c.data(), d));
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) g.comps.push_back(m(a, b));
  }
  return FieldConfig(patch, {{"g", g}});
}

MetricModel model_of(const QuadraticMetric& q, Eigen::VectorXd center) {
  // Recentre the Taylor data: g, dg, d2g evaluated at the new center.
  MetricModel m;
  const int d = static_cast<int>(q.g0.rows());
  m.center = center;
  m.g0 = q.at(center);
  m.dg.assign(static_cast<std::size_t>(d), Eigen::MatrixXd());
  for (int mu = 0; mu < d; ++mu) {
    Eigen::MatrixXd s = q.dg[mu];
    for (int nu = 0; nu < d; ++nu) s += center[nu] * q.d2g[mu][nu];
    m.dg[mu] = s;
  }
  m.d2g = q.d2g;
  return m;
}

}  // namespace

TEST_SUITE("qep_alignment") {

TEST_CASE("taylor models read quadratic metrics exactly") {
  Rng rng(3);
  for (int trial = 0; trial < 6; ++trial) {
    const int d = 2 + 2 * (trial % 2);
    const QuadraticMetric q = random_quadratic_metric(rng, d, 0.5);
    const LatticePatch patch = box_patch(d, -3, 3, rat(1, 20));
    const FieldConfig u = sample_metric(q, patch);
    const IntVec site(static_cast<std::size_t>(d), 1);

    const MetricModel m = local_metric_model(u, site);
    const auto c = patch.coords_of(site);
    const Eigen::Map<const Eigen::VectorXd> center(c.data(), d);
    const MetricModel want = model_of(q, center);

    CHECK((m.center - center).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((m.g0 - want.g0).cwiseAbs().maxCoeff() < 1e-12);
    for (int mu = 0; mu < d; ++mu) {
      CHECK((m.dg[mu] - want.dg[mu]).cwiseAbs().maxCoeff() < 1e-10);
      for (int nu = 0; nu < d; ++nu)
        CHECK((m.d2g[mu][nu] - want.d2g[mu][nu]).cwiseAbs().maxCoeff() < 1e-8);
    }

    // Model evaluation away from the center matches the sampled law.
    Eigen::VectorXd x = center;
    x[0] += 0.07;
    x[d - 1] -= 0.04;
    CHECK((m.eval(x) - q.at(x)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("model christoffel symbols match the lattice evaluation") {
  Rng rng(5);
  const QuadraticMetric q = random_quadratic_metric(rng, 2, 0.6);
  const LatticePatch patch = box_patch(2, -3, 3, rat(1, 20));
  const FieldConfig u = sample_metric(q, patch);
  const IntVec site{0, 0};

  const MetricModel m = local_metric_model(u, site);
  const auto from_model = m.christoffel_at_center();
  const auto from_lattice = christoffel(u, site);
  REQUIRE(from_model.size() == from_lattice.size());
  for (std::size_t i = 0; i < from_model.size(); ++i)
    CHECK(close(from_model[i], from_lattice[i], 1e-10));
}

TEST_CASE("branch evaluators chain through coordinate changes") {
  Rng rng(7);
  const QuadraticMetric q = random_quadratic_metric(rng, 2, 0.4);
  MetricModel m = model_of(q, Eigen::Vector2d(0.1, -0.1));

  BranchEvaluator base{m, Diffeo::identity(2), {rat(1, 10), rat(1, 10)}};
  const Eigen::Vector2d x(0.14, -0.06);
  CHECK((base.eval(x) - q.at(x)).cwiseAbs().maxCoeff() < 1e-14);

  // After a coordinate change x' = f(x), the pulled-back metric at x' = f(x)
  // must reproduce D^T g(x) D with D = d(to_old)/dx'.
  QuadraticMap f = QuadraticMap::identity(2);
  f.A << 1.2, 0.1, -0.2, 0.9;
  f.c << 0.02, -0.01;
  f.B[0](0, 0) = 0.05;
  const Diffeo fwd = Diffeo::analytic(f);
  const BranchEvaluator chained = base.composed_with(fwd.inverse());

  const Eigen::VectorXd xp = fwd.apply(x, base.spacing);
  const Eigen::MatrixXd D = fwd.inverse().jacobian(xp, base.spacing);
  const Eigen::MatrixXd want = D.transpose() * q.at(x) * D;
  CHECK((chained.eval(xp) - want).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("alignment flattens generated two branch tasks") {
  Rng rng(11);
  const AlignmentTask task = gen::random_alignment_task(rng, 2, 2);
  const AlignmentOutcome out = align_at_point(task);

  CHECK(out.report.branches.size() == 2);
  CHECK(out.report.eta_residual <= 1e-10 * out.report.metric_scale);
  CHECK(out.report.pair_residual <= 1e-10 * out.report.metric_scale);
  CHECK(out.report.first_diff_residual <= 1e-6 * out.report.metric_scale);
  REQUIRE(out.report.slope.has_value());
  CHECK(*out.report.slope >= 1.9);

  SUBCASE("stage two fixes the validation point") {
    const Eigen::VectorXd p1 = out.aligned.p1_coords();
    for (const auto& [id, phi] : out.stage2.maps) {
      const Eigen::VectorXd moved = phi.apply(p1, out.aligned.evaluators.front().second.spacing);
      CHECK((moved - p1).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("deviations shrink quadratically through the probe ladder") {
    REQUIRE(out.report.probe_radii.size() == 3);
    CHECK(close(out.report.probe_radii[1], out.report.probe_radii[0] / 10.0, 1e-15));
    CHECK(out.report.probe_deviations[0] >= out.report.probe_deviations[1]);
    CHECK(out.report.probe_deviations[1] >= out.report.probe_deviations[2]);
  }
}

TEST_CASE("alignment handles four dimensional tasks") {
  Rng rng(13);
  const AlignmentTask task = gen::random_alignment_task(rng, 4, 2);
  const AlignmentOutcome out = align_at_point(task);
  CHECK(out.report.eta_residual <= 1e-10 * out.report.metric_scale);
  CHECK(out.report.first_diff_residual <= 1e-6 * out.report.metric_scale);
  REQUIRE(out.report.slope.has_value());
  CHECK(*out.report.slope >= 1.9);
}

TEST_CASE("lightcones coincide after alignment and not before boosts") {
  Rng rng(17);
  const LatticePatch patch = box_patch(2, -4, 4, rat(1, 50));
  const IntVec origin{0, 0};
  Eigen::MatrixXd eta = Eigen::MatrixXd::Identity(2, 2);
  eta(0, 0) = -1.0;

  MetricModel flat;
  flat.center = Eigen::Vector2d::Zero();
  flat.g0 = eta;
  flat.dg.assign(2, Eigen::MatrixXd::Zero(2, 2));
  flat.d2g.assign(2, std::vector<Eigen::MatrixXd>(2, Eigen::MatrixXd::Zero(2, 2)));

  SUBCASE("conformally related metrics share the cone") {
    MetricModel scaled = flat;
    scaled.g0 = 3.7 * eta;
    const AlignedGState gs = AlignedGState::from_models(
        patch, origin,
        {{Complex{1.0, 0.0}, flat, Diffeo::identity(2)},
         {Complex{1.0, 0.0}, scaled, Diffeo::identity(2)}});
    CHECK(lightcone_coincidence(gs));

    // Conformal alignment equalizes the factors to the smaller one.
    const AlignedGState fixed = align_conformal(gs);
    const Eigen::VectorXd p1 = fixed.p1_coords();
    Eigen::MatrixXd g0 = fixed.evaluators[0].second.eval(p1);
    Eigen::MatrixXd g1 = fixed.evaluators[1].second.eval(p1);
    CHECK((g0 - g1).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((g0 - eta).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("a boost conjugate tilts one cone away") {
    // diag(-1, 4) has lightlike directions dx/dt = 1/2, not 1.
    MetricModel squeezed = flat;
    squeezed.g0 = eta;
    squeezed.g0(1, 1) = 4.0;
    const AlignedGState gs = AlignedGState::from_models(
        patch, origin,
        {{Complex{1.0, 0.0}, flat, Diffeo::identity(2)},
         {Complex{1.0, 0.0}, squeezed, Diffeo::identity(2)}});
    CHECK_FALSE(lightcone_coincidence(gs));
  }
  SUBCASE("full alignment restores the shared cone") {
    Rng inner(19);
    const AlignmentTask task = gen::random_alignment_task(inner, 2, 3);
    const AlignmentOutcome out = align_at_point(task);
    CHECK(lightcone_coincidence(out.aligned));
  }
}

TEST_CASE("alignment reports are reproducible from the aligned state") {
  Rng rng(23);
  const AlignmentTask task = gen::random_alignment_task(rng, 2, 2);
  const AlignmentOutcome out = align_at_point(task);
  const AlignmentReport again = check_alignment(out.aligned, task.radius);
  CHECK(again.eta_residual == out.report.eta_residual);
  CHECK(again.pair_residual == out.report.pair_residual);
  CHECK(again.probe_deviations == out.report.probe_deviations);
}

TEST_CASE("euclidean metrics cannot align") {
  MetricModel euclid;
  euclid.center = Eigen::Vector2d::Zero();
  euclid.g0 = Eigen::MatrixXd::Identity(2, 2);
  euclid.dg.assign(2, Eigen::MatrixXd::Zero(2, 2));
  euclid.d2g.assign(2, std::vector<Eigen::MatrixXd>(2, Eigen::MatrixXd::Zero(2, 2)));
  CHECK_THROWS_WITH_AS(
      AlignedGState::from_models(box_patch(2, -2, 2), IntVec{0, 0},
                                 {{Complex{1.0, 0.0}, euclid, Diffeo::identity(2)}}),
      doctest::Contains("signature"), Error);
}

}
