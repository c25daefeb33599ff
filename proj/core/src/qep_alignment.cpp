#include "qatlas/qep_alignment.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace qatlas {

// ------------------------------------------------------------- MetricModel

Eigen::MatrixXd MetricModel::eval(const Eigen::VectorXd& x) const {
  const int d = dim();
  require(x.size() == d, Errc::invalid_argument, "dimension mismatch");
  const Eigen::VectorXd dx = x - center;
  Eigen::MatrixXd g = g0;
  for (int mu = 0; mu < d; ++mu) g += dx[mu] * dg[mu];
  for (int mu = 0; mu < d; ++mu)
    for (int nu = 0; nu < d; ++nu) g += 0.5 * dx[mu] * dx[nu] * d2g[mu][nu];
  return g;
}

std::vector<double> MetricModel::christoffel_at_center() const {
  const int d = dim();
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(g0);
  require(lu.isInvertible(), Errc::singular_metric, "metric not invertible at center");
  const Eigen::MatrixXd ginv = lu.inverse();
  std::vector<double> out(static_cast<std::size_t>(d) * d * d, 0.0);
  for (int l = 0; l < d; ++l)
    for (int m = 0; m < d; ++m)
      for (int n = 0; n < d; ++n) {
        double s = 0.0;
        for (int sig = 0; sig < d; ++sig)
          s += ginv(l, sig) * (dg[m](sig, n) + dg[n](sig, m) - dg[sig](m, n));
        out[(static_cast<std::size_t>(l) * d + m) * d + n] = 0.5 * s;
      }
  return out;
}

MetricModel local_metric_model(const FieldConfig& u, const IntVec& site) {
  const auto& patch = u.patch();
  const int d = patch.dim();
  require(patch.contains_site(site), Errc::invalid_argument, "site outside the patch");
  // The mixed-derivative stencil needs the full Chebyshev-1 neighborhood.
  require(patch.has_margin(site, 1), Errc::boundary_site,
          "second-order stencil needs a one-site margin");
  MetricModel m;
  const auto c = patch.coords_of(site);
  m.center = Eigen::Map<const Eigen::VectorXd>(c.data(), d);
  m.g0 = metric_at(u, site);
  m.dg.resize(d);
  m.d2g.assign(d, std::vector<Eigen::MatrixXd>(d));
  for (int mu = 0; mu < d; ++mu) {
    const double h = patch.spacing()[mu].to_double();
    IntVec plus = site, minus = site;
    ++plus[mu];
    --minus[mu];
    const Eigen::MatrixXd gp = metric_at(u, plus), gm = metric_at(u, minus);
    m.dg[mu] = (gp - gm) / (2.0 * h);
    m.d2g[mu][mu] = (gp - 2.0 * m.g0 + gm) / (h * h);
  }
  for (int mu = 0; mu < d; ++mu)
    for (int nu = mu + 1; nu < d; ++nu) {
      const double hm = patch.spacing()[mu].to_double();
      const double hn = patch.spacing()[nu].to_double();
      IntVec pp = site, pm = site, mp = site, mm = site;
      ++pp[mu], ++pp[nu];
      ++pm[mu], --pm[nu];
      --mp[mu], ++mp[nu];
      --mm[mu], --mm[nu];
      m.d2g[mu][nu] = (metric_at(u, pp) - metric_at(u, pm) - metric_at(u, mp) + metric_at(u, mm)) /
                      (4.0 * hm * hn);
      m.d2g[nu][mu] = m.d2g[mu][nu];
    }
  return m;
}

// --------------------------------------------------------- BranchEvaluator

Eigen::MatrixXd BranchEvaluator::eval(const Eigen::VectorXd& x) const {
  if (to_old.legs().empty()) return model.eval(x);
  const Eigen::VectorXd y = to_old.apply(x, spacing);
  const Eigen::MatrixXd D = to_old.jacobian(x, spacing);
  return D.transpose() * model.eval(y) * D;
}

BranchEvaluator BranchEvaluator::composed_with(const Diffeo& newer_to_old) const {
  BranchEvaluator out = *this;
  out.to_old = Diffeo::compose(to_old, newer_to_old);
  return out;
}

// ----------------------------------------------------------- AlignedGState

Eigen::VectorXd AlignedGState::p1_coords() const {
  const auto c = patch.coords_of(p1_site);
  return Eigen::Map<const Eigen::VectorXd>(c.data(), patch.dim());
}

AlignedGState AlignedGState::from_models(
    LatticePatch patch, IntVec p1_site,
    const std::vector<std::tuple<Complex, MetricModel, Diffeo>>& branches) {
  require(patch.contains_site(p1_site), Errc::invalid_argument, "p1 outside the patch");
  AlignedGState gs{ExtendedAState{}, {}, patch, p1_site};
  const int d = patch.dim();
  std::vector<std::pair<ConfigId, BranchEvaluator>> evals;
  for (const auto& [weight, model, chain] : branches) {
    BranchEvaluator ev{model, chain, patch.spacing()};
    TensorData g{0, 2, {}};
    g.comps.reserve(patch.site_count() * static_cast<std::size_t>(d) * d);
    for (const auto& site : patch.sites()) {
      const auto c = patch.coords_of(site);
      const Eigen::MatrixXd m = ev.eval(Eigen::Map<const Eigen::VectorXd>(c.data(), d));
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) g.comps.push_back(m(a, b));
    }
    FieldConfig config(patch, {{std::string(FieldConfig::kMetric), g}});
    CoeffSet coeffs{std::string(FieldConfig::kMetric), 0, 2, d, g.comps};
    const ConfigId id = config_id(Configuration(config));
    gs.state.add_term(std::move(config), weight, std::move(coeffs));
    evals.emplace_back(id, std::move(ev));
  }
  std::stable_sort(evals.begin(), evals.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  gs.evaluators = std::move(evals);
  return gs;
}

// ---------------------------------------------------------- align_at_point

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

// psi(x') = x1 + J (x' - x1) - 1/2 Gamma[J dx', J dx']; the branch map is its
// inverse, so pulled-back metrics are eta + O(dx^2) at x1.
QuadraticMap normal_coordinate_map(const Eigen::VectorXd& x1, const Eigen::MatrixXd& J,
                                   const std::vector<double>& gamma) {
  const int d = static_cast<int>(x1.size());
  QuadraticMap psi;
  psi.x0 = x1;
  psi.A = J;
  psi.c = x1;
  psi.B.assign(d, Eigen::MatrixXd::Zero(d, d));
  for (int mu = 0; mu < d; ++mu)
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        double s = 0.0;
        for (int sig = 0; sig < d; ++sig)
          for (int tau = 0; tau < d; ++tau)
            s += gamma[(static_cast<std::size_t>(mu) * d + sig) * d + tau] * J(sig, a) * J(tau, b);
        psi.B[mu](a, b) = -s;
      }
  // enforce exact symmetry against rounding in the double loop
  for (int mu = 0; mu < d; ++mu) psi.B[mu] = 0.5 * (psi.B[mu] + psi.B[mu].transpose()).eval();
  return psi;
}

}  // namespace

AlignmentOutcome align_at_point(const AlignmentTask& task) {
  const auto& fam = task.qcs.identification();
  const ConfigId target = task.qcs.seed_branch();

  // Stage 1: bring every branch onto the target region.
  auto [stage1, coincident] = to_coincidence(task.state, task.qcs, target);

  // The common patch and the fixed point in it.
  const LatticePatch& patch = fam.region(target);
  IntVec p1_site;
  bool found = false;
  for (const auto& [u, p] : task.p1.branch_points)
    if (u == target) {
      p1_site = p;
      found = true;
    }
  require(found, Errc::branch_mismatch, "p1 carries no point for the target branch");
  require(patch.has_margin(p1_site, 2), Errc::boundary_site,
          "p1 must sit two sites clear of the region boundary");
  const auto c1 = patch.coords_of(p1_site);
  const Eigen::VectorXd x1 = Eigen::Map<const Eigen::VectorXd>(c1.data(), patch.dim());

  // Stage 2: per-branch normal-coordinate map from the local metric model.
  struct Pending {
    ConfigId coincident_id;
    MetricModel model;
    Diffeo psi;
    Eigen::MatrixXd J;
    std::vector<Eigen::MatrixXd> B;
  };
  std::vector<Pending> pending;
  for (const auto& [id, term] : coincident.terms()) {
    const auto& config = std::get<FieldConfig>(term.config);
    require(config.patch().contains_site(p1_site), Errc::branch_mismatch,
            "coincident branch does not cover p1");
    MetricModel model = local_metric_model(config, p1_site);
    const Eigen::MatrixXd J = minkowski_frame(model.g0);
    const QuadraticMap psi = normal_coordinate_map(x1, J, model.christoffel_at_center());
    pending.push_back(
        Pending{id, std::move(model), Diffeo::analytic(psi), J, psi.B});
  }

  RestrictedQD stage2;
  for (const auto& p : pending) stage2.maps.emplace(p.coincident_id, p.psi.inverse());

  AlignedGState aligned{apply_restricted(stage2, coincident), {}, patch, p1_site};
  AlignmentReport partial;
  std::set<ConfigId> seen;
  for (const auto& p : pending) {
    // The aligned term of this branch: its coincident config mapped by psi^-1.
    const auto& term = coincident.at(p.coincident_id);
    auto [moved, coeffs] =
        transform_branch(stage2.maps.at(p.coincident_id), term.config, term.coeffs);
    const ConfigId aligned_id = config_id(moved);
    if (!seen.insert(aligned_id).second) continue;
    aligned.evaluators.emplace_back(aligned_id,
                                    BranchEvaluator{p.model, p.psi, patch.spacing()});
    partial.branches.push_back(BranchAlignment{aligned_id, p.J, p.B});
  }
  std::stable_sort(aligned.evaluators.begin(), aligned.evaluators.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::stable_sort(partial.branches.begin(), partial.branches.end(),
                   [](const auto& a, const auto& b) { return a.branch < b.branch; });

  AlignmentReport report = check_alignment(aligned, task.radius);
  report.branches = std::move(partial.branches);

  AlignmentOutcome outcome{std::move(stage1), std::move(stage2), std::move(aligned),
                           std::move(report)};
  return outcome;
}

// --------------------------------------------------------- check_alignment

AlignmentReport check_alignment(const AlignedGState& gs, double radius) {
  require(radius > 0.0, Errc::invalid_argument, "radius must be positive");
  require(gs.patch.has_margin(gs.p1_site, 2), Errc::insufficient_margin,
          "p1 must sit two sites clear of the boundary");
  const int d = gs.patch.dim();
  const std::size_t n = gs.evaluators.size();
  require(n >= 1, Errc::invalid_argument, "no branches to check");
  const Eigen::VectorXd x1 = gs.p1_coords();

  AlignmentReport report;
  const Eigen::MatrixXd eta = MinkowskiMetric{d}.matrix();

  std::vector<Eigen::MatrixXd> at_p1(n);
  for (std::size_t i = 0; i < n; ++i) at_p1[i] = gs.evaluators[i].second.eval(x1);
  double scale = 0.0;
  for (const auto& g : at_p1) scale = std::max(scale, max_abs(g));
  report.metric_scale = std::max(scale, 1e-300);
  for (std::size_t i = 0; i < n; ++i) {
    report.eta_residual = std::max(report.eta_residual, max_abs(at_p1[i] - eta));
    for (std::size_t j = i + 1; j < n; ++j)
      report.pair_residual = std::max(report.pair_residual, max_abs(at_p1[i] - at_p1[j]));
  }

  // First differences at step radius/100 on every axis.
  const double h = radius / 100.0;
  for (int mu = 0; mu < d; ++mu) {
    Eigen::VectorXd plus = x1, minus = x1;
    plus[mu] += h;
    minus[mu] -= h;
    std::vector<Eigen::MatrixXd> diff(n);
    for (std::size_t i = 0; i < n; ++i)
      diff[i] = (gs.evaluators[i].second.eval(plus) - gs.evaluators[i].second.eval(minus)) /
                (2.0 * h);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        report.first_diff_residual = std::max(report.first_diff_residual,
                                              max_abs(diff[i] - diff[j]));
  }

  // Pairwise deviation at three radii along axis and diagonal probes.
  std::vector<Eigen::VectorXd> directions;
  for (int mu = 0; mu < d; ++mu) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
    e[mu] = 1.0;
    directions.push_back(e);
    directions.push_back(-e);
  }
  directions.push_back(Eigen::VectorXd::Ones(d) / std::sqrt(static_cast<double>(d)));
  directions.push_back(-Eigen::VectorXd::Ones(d) / std::sqrt(static_cast<double>(d)));

  report.probe_radii = {radius, radius / 10.0, radius / 100.0};
  for (const double r : report.probe_radii) {
    double dev = 0.0;
    for (const auto& dir : directions) {
      const Eigen::VectorXd x = x1 + r * dir;
      std::vector<Eigen::MatrixXd> g(n);
      for (std::size_t i = 0; i < n; ++i) g[i] = gs.evaluators[i].second.eval(x);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) dev = std::max(dev, max_abs(g[i] - g[j]));
    }
    report.probe_deviations.push_back(dev);
  }

  // Log-log least-squares slope; skipped when deviations sit at rounding level.
  bool fit = n >= 2;
  for (const double dev : report.probe_deviations)
    if (dev <= 1e-14 * report.metric_scale) fit = false;
  if (fit) {
    const std::size_t k = report.probe_radii.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const double lx = std::log(report.probe_radii[i]);
      const double ly = std::log(report.probe_deviations[i]);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    const double denom = static_cast<double>(k) * sxx - sx * sx;
    report.slope = (static_cast<double>(k) * sxy - sx * sy) / denom;
  }
  return report;
}

// ---------------------------------------------------- lightcone / conformal

namespace {

// Conformal factor of g against the reference, or nullopt when the cones
// differ. Ratio fit in the Frobenius inner product.
std::optional<double> conformal_factor(const Eigen::MatrixXd& g, const Eigen::MatrixXd& ref) {
  const double denom = (ref.cwiseProduct(ref)).sum();
  const double lambda = (g.cwiseProduct(ref)).sum() / denom;
  if (!(lambda > 0.0)) return std::nullopt;
  const double resid = max_abs(g - lambda * ref);
  if (resid > 1e-9 * std::max(1.0, max_abs(g))) return std::nullopt;
  return lambda;
}

void check_lorentzian(const Eigen::MatrixXd& g) {
  const int d = static_cast<int>(g.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (g + g.transpose()));
  int neg = 0;
  const double scale = std::max(1.0, max_abs(g));
  for (int i = 0; i < d; ++i) {
    require(std::abs(es.eigenvalues()[i]) > 1e-12 * scale, Errc::wrong_signature,
            "metric is degenerate at p1");
    if (es.eigenvalues()[i] < 0.0) ++neg;
  }
  require(neg == 1, Errc::wrong_signature, "metric signature is not (-,+,...,+)");
}

}  // namespace

bool lightcone_coincidence(const AlignedGState& gs) {
  require(!gs.evaluators.empty(), Errc::invalid_argument, "no branches");
  const Eigen::VectorXd x1 = gs.p1_coords();
  Eigen::MatrixXd ref;
  for (std::size_t i = 0; i < gs.evaluators.size(); ++i) {
    const Eigen::MatrixXd g = gs.evaluators[i].second.eval(x1);
    check_lorentzian(g);
    if (i == 0) {
      ref = g;
      continue;
    }
    if (!conformal_factor(g, ref).has_value()) return false;
  }
  return true;
}

AlignedGState align_conformal(const AlignedGState& gs) {
  require(!gs.evaluators.empty(), Errc::invalid_argument, "no branches");
  const Eigen::VectorXd x1 = gs.p1_coords();
  const std::size_t n = gs.evaluators.size();
  std::vector<Eigen::MatrixXd> at_p1(n);
  for (std::size_t i = 0; i < n; ++i) at_p1[i] = gs.evaluators[i].second.eval(x1);
  const Eigen::MatrixXd& ref0 = at_p1.front();
  std::vector<double> lambda(n);
  for (std::size_t i = 0; i < n; ++i) {
    check_lorentzian(at_p1[i]);
    const auto l = conformal_factor(at_p1[i], ref0);
    require(l.has_value(), Errc::cones_not_aligned,
            "branch cones disagree at p1; align first");
    lambda[i] = *l;
  }
  // Scale everything down to the smallest factor: contractions keep every
  // preimage inside the patch.
  const double lambda_min = *std::min_element(lambda.begin(), lambda.end());

  const int d = gs.patch.dim();
  RestrictedQD scaling;
  std::vector<std::pair<ConfigId, Diffeo>> chains;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = std::sqrt(lambda_min / lambda[i]);  // psi linear part
    QuadraticMap psi =
        QuadraticMap::affine(s * Eigen::MatrixXd::Identity(d, d), (1.0 - s) * x1);
    psi.x0 = Eigen::VectorXd::Zero(d);
    const Diffeo psi_chain = Diffeo::analytic(psi);
    const ConfigId id = gs.evaluators[i].first;
    if (scaling.maps.count(id) == 0) scaling.maps.emplace(id, psi_chain.inverse());
    chains.emplace_back(id, psi_chain);
  }

  AlignedGState out{apply_restricted(scaling, gs.state), {}, gs.patch, gs.p1_site};
  for (std::size_t i = 0; i < n; ++i)
    out.evaluators.emplace_back(
        config_id(transform_branch(scaling.maps.at(gs.evaluators[i].first),
                                   gs.state.at(gs.evaluators[i].first).config)),
        gs.evaluators[i].second.composed_with(chains[i].second));
  std::stable_sort(out.evaluators.begin(), out.evaluators.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

}  // namespace qatlas
