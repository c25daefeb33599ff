#pragma once

#include "qatlas/extended_state.hpp"

#include <optional>
#include <vector>

namespace qatlas {

// Discretized one-particle system: position lattice y_j = y_min + j*dy with
// P = lattice.count sites, time grid t_k = t0 + k*dt with N = slices steps.
struct ParticleModel {
  double mass = 1.0;
  double hbar = 1.0;
  Potential potential = Potential::zero;
  double omega = 0.0;
  Rational t0 = 0;
  Rational dt = rat(1, 1);
  Int slices = 1;
  PositionLattice lattice;

  void validate() const;
  double V(double y) const noexcept {
    return potential == Potential::zero ? 0.0 : 0.5 * mass * omega * omega * y * y;
  }
  double duration() const { return (dt * Rational(slices)).to_double(); }
  TimeSupport support() const { return TimeSupport(t0, dt, {IndexInterval{0, slices}}); }
  LagrangianSpec lagrangian() const { return LagrangianSpec{mass, potential, omega}; }
  // Lattice index of y, which must be a lattice point.
  Int index_of(double y) const;
};

inline constexpr std::size_t kEnumerationCap = 1'000'000;

// All lattice paths between the boundary's fixed endpoints; count P^(N-1).
std::vector<PathConfig> enumerate_paths(const ParticleModel& model, const BoundarySpec& boundary,
                                        std::size_t cap = kEnumerationCap);

// Left-endpoint discretized action over a single-interval path.
double action(const ParticleModel& model, const PathConfig& u);

inline constexpr Int kMaxSites = 2048;
inline constexpr Int kMaxSlices = 4096;

// Literal transfer-matrix product on the modeled window. One-step kernel
// sqrt(m/(2 pi i hbar dt)) * exp(i [m (y_a - y_b)^2 / (2 dt) - V(y_b) dt] / hbar),
// result scaled by dy^(N-1). Exact algebra (composition, enumeration
// equivalence) holds here; continuum convergence does not, see
// docs/propagators.md.
Complex propagator_direct(const ParticleModel& model, double y_i, double y_f);
// Full column K(y_f, .; y_i) over all lattice endpoints, one evolution.
std::vector<Complex> propagator_direct_column(const ParticleModel& model, double y_i);

struct BandLimitedOptions {
  int threads = 1;
  // Guard width per side: hbar*q_c*T/m * guard_scale + 10% of the window,
  // unless guard_halfwidth overrides it outright.
  double guard_scale = 1.0;
  std::optional<double> guard_halfwidth;
};

// Same stepping with the one-step kernel band-limited to |q| <= pi/dy and the
// window padded by guard sites; converges to the continuum propagator.
Complex propagator_band_limited(const ParticleModel& model, double y_i, double y_f,
                                const BandLimitedOptions& opts = {});
std::vector<Complex> propagator_band_limited_column(const ParticleModel& model, double y_i,
                                                    const BandLimitedOptions& opts = {});

// Closed-form continuum propagator for the zero and harmonic potentials;
// formulas in docs/propagators.md.
Complex analytic_propagator(const ParticleModel& model, double y_i, double y_f);

}  // namespace qatlas
