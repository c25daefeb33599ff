#pragma once

#include "qatlas/generators.hpp"
#include "qatlas/serialize.hpp"

#include <doctest.h>

namespace qatlas::testutil {

inline LatticePatch box_patch(int dim, Int lo, Int hi, Rational h = rat(1, 10)) {
  return LatticePatch(dim, std::vector<Rational>(static_cast<std::size_t>(dim), h),
                      {Box{IntVec(static_cast<std::size_t>(dim), lo),
                           IntVec(static_cast<std::size_t>(dim), hi)}});
}

inline TensorData eta_metric(const LatticePatch& patch) {
  const int d = patch.dim();
  TensorData g{0, 2, {}};
  g.comps.reserve(patch.site_count() * static_cast<std::size_t>(d) * d);
  for (std::size_t s = 0; s < patch.site_count(); ++s)
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) g.comps.push_back(a == b ? (a == 0 ? -1.0 : 1.0) : 0.0);
  return g;
}

inline FieldConfig flat_config(const LatticePatch& patch) {
  return FieldConfig(patch, {{"g", eta_metric(patch)}});
}

// Flat metric plus one scalar field set by fn(coords).
template <typename Fn>
FieldConfig flat_with_scalar(const LatticePatch& patch, const std::string& name, Fn&& fn) {
  TensorData f{0, 0, {}};
  f.comps.reserve(patch.site_count());
  for (const auto& p : patch.sites()) f.comps.push_back(fn(patch.coords_of(p)));
  return FieldConfig(patch, {{"g", eta_metric(patch)}, {name, std::move(f)}});
}

inline PathConfig simple_path(std::vector<Int> values, Rational dt = rat(1, 4),
                              Rational y_min = rat(-5, 1), Rational dy = rat(1, 10),
                              Int count = 101) {
  const Int last = static_cast<Int>(values.size()) - 1;
  TimeSupport support(0, dt, {IndexInterval{0, last}});
  return PathConfig(std::move(support), PositionLattice{y_min, dy, count}, std::move(values));
}

inline bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline bool close(const Complex& a, const Complex& b, double tol) {
  return std::abs(a - b) <= tol;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1e-300, std::abs(want));
}

}  // namespace qatlas::testutil
