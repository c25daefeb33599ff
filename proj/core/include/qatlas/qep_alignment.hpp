#pragma once

#include "qatlas/quantum_coords.hpp"

#include <optional>
#include <tuple>

namespace qatlas {

// Exact second-order Taylor model of a metric around a center point.
struct MetricModel {
  Eigen::VectorXd center;
  Eigen::MatrixXd g0;
  std::vector<Eigen::MatrixXd> dg;                // dg[mu] = d_mu g at center
  std::vector<std::vector<Eigen::MatrixXd>> d2g;  // d2g[mu][nu], symmetric in (mu,nu)

  int dim() const noexcept { return static_cast<int>(g0.rows()); }
  Eigen::MatrixXd eval(const Eigen::VectorXd& x) const;
  // Levi-Civita symbols of the model at its center, flat (1,2) layout.
  std::vector<double> christoffel_at_center() const;
};

// Taylor model read off the lattice by central differences; exact whenever
// the sampled metric is quadratic in the coordinates.
MetricModel local_metric_model(const FieldConfig& u, const IntVec& site);

// Closed-form branch metric in current coordinates: to_old carries a current
// point back to model coordinates, g(x) = D^T g_model(to_old(x)) D with
// D = Dto_old(x).
struct BranchEvaluator {
  MetricModel model;
  Diffeo to_old;                  // identity chain means the model applies directly
  std::vector<Rational> spacing;  // coordinate spacing of the current patch

  Eigen::MatrixXd eval(const Eigen::VectorXd& x) const;
  BranchEvaluator composed_with(const Diffeo& newer_to_old) const;
};

// Aligned extended g-state: lattice terms plus the exact per-branch
// evaluators the residual measurements run on.
struct AlignedGState {
  ExtendedAState state;
  std::vector<std::pair<ConfigId, BranchEvaluator>> evaluators;  // ascending term id
  LatticePatch patch;
  IntVec p1_site;

  Eigen::VectorXd p1_coords() const;
  // Test constructor: samples each model through its chain onto the patch.
  static AlignedGState from_models(
      LatticePatch patch, IntVec p1_site,
      const std::vector<std::tuple<Complex, MetricModel, Diffeo>>& branches);
};

struct AlignmentTask {
  ExtendedAState state;  // extended g-state, branch ids matching qcs branches
  QuantumCoordinateSystem qcs;
  QCPoint p1;
  double radius = 0.1;
};

struct BranchAlignment {
  ConfigId branch;  // aligned term id
  Eigen::MatrixXd jacobian;
  std::vector<Eigen::MatrixXd> quadratic;
};

struct AlignmentReport {
  std::vector<BranchAlignment> branches;
  double metric_scale = 1.0;
  double eta_residual = 0.0;        // max_u |g_u(p1) - eta|
  double pair_residual = 0.0;       // max_{u,v} |g_u(p1) - g_v(p1)|
  double first_diff_residual = 0.0; // max pairwise central-difference gap
  std::vector<double> probe_radii;
  std::vector<double> probe_deviations;  // max pairwise deviation per radius
  std::optional<double> slope;           // log-log fit; absent when deviations vanish
};

struct AlignmentOutcome {
  RestrictedQD stage1;
  RestrictedQD stage2;
  AlignedGState aligned;
  AlignmentReport report;
};

// Stage 1 carries every branch onto the identification target; stage 2
// applies per-branch normal-coordinate maps x -> p1 + J dx - 1/2 Gamma[J dx]^2
// inverted, leaving p1 fixed and making branch metrics agree to first order.
AlignmentOutcome align_at_point(const AlignmentTask& task);

// Zeroth/first-order residuals at p1 plus a log-log slope of the pairwise
// metric deviation over radii {radius, radius/10, radius/100}.
AlignmentReport check_alignment(const AlignedGState& gs, double radius);

// True iff all branch metrics at p1 agree up to positive conformal factors.
bool lightcone_coincidence(const AlignedGState& gs);

// Per-branch isotropic scaling fixing p1 that equalizes conformal factors to
// the smallest one (so every scaling contracts and stays on the patch).
AlignedGState align_conformal(const AlignedGState& gs);

}  // namespace qatlas
