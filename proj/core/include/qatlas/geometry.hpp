#pragma once

#include "qatlas/configuration.hpp"

#include <Eigen/Dense>

#include <span>
#include <variant>
#include <vector>

namespace qatlas {

// Signed axis permutation with integer translation on site indices:
// q[a] = sign[a] * p[perm[a]] + shift[a].
struct LatticeMap {
  std::vector<int> perm;
  std::vector<int> sign;
  IntVec shift;

  int dim() const noexcept { return static_cast<int>(perm.size()); }
  void validate() const;
  IntVec apply(const IntVec& p) const;
  IntVec apply_inverse(const IntVec& q) const;
  LatticeMap inverse() const;

  static LatticeMap identity(int dim);
  static LatticeMap translation(IntVec shift);
  // outer after inner, fused in closed form
  static LatticeMap compose(const LatticeMap& outer, const LatticeMap& inner);

  friend bool operator==(const LatticeMap&, const LatticeMap&) = default;
};

// x'^mu = A^mu_nu (x - x0)^nu + 1/2 B^mu_{ab} (x - x0)^a (x - x0)^b + c^mu,
// A invertible, each B[mu] symmetric. Jacobian and inverse are closed-form
// (Newton seeded by the affine inverse).
struct QuadraticMap {
  Eigen::VectorXd x0;
  Eigen::MatrixXd A;
  std::vector<Eigen::MatrixXd> B;
  Eigen::VectorXd c;

  int dim() const noexcept { return static_cast<int>(A.rows()); }
  void validate() const;
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;
  Eigen::VectorXd apply_inverse(const Eigen::VectorXd& q) const;

  static QuadraticMap affine(Eigen::MatrixXd A, Eigen::VectorXd c);
  static QuadraticMap identity(int dim);
};

// Chain of invertible legs applied left to right; a leg is a lattice-exact
// map or an analytic quadratic map, optionally flagged as inverted.
class Diffeo {
public:
  struct Leg {
    std::variant<LatticeMap, QuadraticMap> map;
    bool inverted = false;
  };

  static Diffeo identity(int dim);
  static Diffeo lattice(LatticeMap m);
  static Diffeo analytic(QuadraticMap m);
  static Diffeo compose(const Diffeo& outer, const Diffeo& inner);

  int dim() const noexcept { return dim_; }
  const std::vector<Leg>& legs() const noexcept { return legs_; }
  bool lattice_exact() const noexcept;
  Diffeo inverse() const;

  // Exact site action; every leg must be lattice-exact.
  IntVec apply_index(const IntVec& p) const;
  IntVec apply_index_inverse(const IntVec& q) const;
  // Fuses all legs into one lattice map; every leg must be lattice-exact.
  LatticeMap fused_lattice() const;

  // Coordinate action; lattice legs act through the axis spacing, which must
  // agree between permuted axes.
  Eigen::VectorXd apply(const Eigen::VectorXd& x, const std::vector<Rational>& spacing) const;
  Eigen::VectorXd apply_inverse(const Eigen::VectorXd& q, const std::vector<Rational>& spacing) const;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x, const std::vector<Rational>& spacing) const;
  // Second derivative H[mu](a,b) of the composite map at x.
  std::vector<Eigen::MatrixXd> hessian(const Eigen::VectorXd& x,
                                       const std::vector<Rational>& spacing) const;

private:
  int dim_ = 0;
  std::vector<Leg> legs_;
};

struct MinkowskiMetric {
  int dim = 2;
  Eigen::MatrixXd matrix() const;
  std::vector<double> flat() const;  // row-major covariant components
};

// One contraction per slot: contravariant slots with J_fwd = dx'/dx,
// covariant slots with J_inv = dx/dx'. Slot order preserved.
std::vector<double> transform_tensor(std::span<const double> block, int contra, int cov, int dim,
                                     const Eigen::MatrixXd& J_fwd, const Eigen::MatrixXd& J_inv);

// Relocates the support through phi and transforms components with Jacobian
// factors. Lattice-exact chains act exactly on sites; chains with analytic
// legs produce the image support at lattice resolution (every site whose
// preimage cell interpolates inside the source patch) and resample at the
// preimages by multilinear interpolation (preimages within 1e-9 of a site
// read the site exactly).
FieldConfig pullback_config(const Diffeo& phi, const FieldConfig& u);

// Levi-Civita symbols from central differences of the metric; flat layout
// G[l*d*d + m*d + n] for Gamma^l_{mn}. Exact for metrics quadratic in the
// coordinates.
std::vector<double> christoffel(const FieldConfig& u, const IntVec& site);

Eigen::MatrixXd metric_at(const FieldConfig& u, const IntVec& site);

// J with J^T g J = eta via symmetric eigendecomposition. Columns: the
// negative-eigenvalue direction first, positive ones sorted by eigenvalue
// (ties by largest-entry row), each sign-fixed so its largest-magnitude
// entry is positive.
Eigen::MatrixXd minkowski_frame(const Eigen::MatrixXd& g);

}  // namespace qatlas
