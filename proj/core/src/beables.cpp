#include "qatlas/beables.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/Dense>

#include "qatlas/rng.hpp"

namespace qatlas {

namespace {

Eigen::MatrixXd metric_matrix(const FieldConfig& u, std::size_t site_idx) {
  const int d = u.patch().dim();
  const auto& g = u.metric();
  Eigen::MatrixXd m(d, d);
  const double* blk = g.comps.data() + site_idx * static_cast<std::size_t>(d) * d;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) m(a, b) = blk[a * d + b];
  return m;
}

// S-tuples over interior sites, one per site, in canonical site order.
std::vector<std::vector<double>> scalar_tuples(const FieldConfig& u, const ScalarList& S) {
  const auto& patch = u.patch();
  const int d = patch.dim();
  std::vector<std::size_t> interior;
  for (std::size_t i = 0; i < patch.site_count(); ++i)
    if (patch.has_margin(patch.sites()[i], 1)) interior.push_back(i);
  require(!interior.empty(), Errc::boundary_only_support,
          "no interior sites to evaluate scalars on");

  for (const auto& sc : S)
    require(u.has_field(sc.field), Errc::unknown_quantity, "scalar references a missing field");

  std::vector<std::vector<double>> tuples(interior.size());
  std::vector<Eigen::MatrixXd> ginv(interior.size());
  const bool need_inv = std::any_of(S.begin(), S.end(), [](const ScalarConstructor& sc) {
    return sc.kind == ScalarConstructor::Kind::norm2 ||
           sc.kind == ScalarConstructor::Kind::grad_norm2;
  });
  if (need_inv)
    for (std::size_t k = 0; k < interior.size(); ++k) {
      const Eigen::FullPivLU<Eigen::MatrixXd> lu(metric_matrix(u, interior[k]));
      require(lu.isInvertible(), Errc::singular_metric, "metric not invertible at a site");
      ginv[k] = lu.inverse();
    }

  for (std::size_t k = 0; k < interior.size(); ++k) {
    const std::size_t i = interior[k];
    const IntVec& p = patch.sites()[i];
    auto& tup = tuples[k];
    tup.reserve(S.size());
    for (const auto& sc : S) {
      const TensorData& f = u.field(sc.field);
      switch (sc.kind) {
        case ScalarConstructor::Kind::field_value: {
          require(f.rank() == 0, Errc::kind_mismatch, "field_value needs a rank-0 field");
          tup.push_back(f.comps[i]);
          break;
        }
        case ScalarConstructor::Kind::metric_trace: {
          require(f.contra == 0 && f.cov == 2, Errc::kind_mismatch,
                  "metric_trace needs a rank-(0,2) field");
          const double* blk = f.comps.data() + i * static_cast<std::size_t>(d) * d;
          double tr = 0.0;
          for (int a = 0; a < d; ++a) tr += blk[a * d + a];
          tup.push_back(tr);
          break;
        }
        case ScalarConstructor::Kind::norm2: {
          require(f.contra == 0 && f.cov == 1, Errc::kind_mismatch,
                  "norm2 needs a rank-(0,1) field");
          const double* w = f.comps.data() + i * static_cast<std::size_t>(d);
          double s = 0.0;
          for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) s += ginv[k](a, b) * w[a] * w[b];
          tup.push_back(s);
          break;
        }
        case ScalarConstructor::Kind::grad_norm2: {
          require(f.rank() == 0, Errc::kind_mismatch, "grad_norm2 needs a rank-0 field");
          Eigen::VectorXd df(d);
          IntVec q = p;
          for (int a = 0; a < d; ++a) {
            q[a] = p[a] + 1;
            const double fp = f.comps[*patch.site_index(q)];
            q[a] = p[a] - 1;
            const double fm = f.comps[*patch.site_index(q)];
            q[a] = p[a];
            df[a] = (fp - fm) / (2.0 * patch.spacing()[a].to_double());
          }
          tup.push_back(df.dot(ginv[k] * df));
          break;
        }
      }
    }
  }
  return tuples;
}

std::int64_t adjacency_components(const LatticePatch& patch) {
  const std::size_t n = patch.site_count();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  const auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  IntVec q;
  for (std::size_t i = 0; i < n; ++i) {
    q = patch.sites()[i];
    for (int a = 0; a < patch.dim(); ++a) {
      ++q[a];
      if (const auto j = patch.site_index(q)) {
        const std::size_t ri = find(i), rj = find(*j);
        if (ri != rj) parent[ri] = rj;
      }
      --q[a];
    }
  }
  std::int64_t c = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (find(i) == i) ++c;
  return c;
}

double tuple_pairs(std::vector<std::vector<double>> tuples) {
  std::sort(tuples.begin(), tuples.end());
  double pairs = 0.0;
  std::size_t i = 0;
  while (i < tuples.size()) {
    std::size_t j = i + 1;
    while (j < tuples.size() && tuples[j] == tuples[i]) ++j;
    const double m = static_cast<double>(j - i);
    pairs += m * (m - 1.0) / 2.0;
    i = j;
  }
  return pairs;
}

}  // namespace

std::set<std::vector<double>> scalar_plot(const FieldConfig& u, const ScalarList& S) {
  auto tuples = scalar_tuples(u, S);
  return {tuples.begin(), tuples.end()};
}

BeableFn coincidence_counter(ScalarList S) {
  return BeableFn{
      "coincidence_counter", true,
      [S = std::move(S)](const ExtendedAState& state) -> BeableValue {
        double total = 0.0;
        for (const auto& [id, term] : state.terms()) {
          if (const auto* fc = std::get_if<FieldConfig>(&term.config)) {
            total += tuple_pairs(scalar_tuples(*fc, S));
          } else {
            // Path case: coincidences of the position value over the support.
            const auto& pc = std::get<PathConfig>(term.config);
            std::vector<std::vector<double>> tuples;
            tuples.reserve(pc.values().size());
            for (const Int v : pc.values()) tuples.push_back({static_cast<double>(v)});
            total += tuple_pairs(std::move(tuples));
          }
        }
        return {total};
      }};
}

BeableFn support_signature() {
  return BeableFn{
      "support_signature", true,
      [](const ExtendedAState& state) -> BeableValue {
        std::vector<std::pair<double, double>> sig;
        for (const auto& [id, term] : state.terms()) {
          if (const auto* fc = std::get_if<FieldConfig>(&term.config)) {
            sig.emplace_back(static_cast<double>(fc->patch().site_count()),
                             static_cast<double>(adjacency_components(fc->patch())));
          } else {
            const auto& sup = std::get<PathConfig>(term.config).support();
            sig.emplace_back(static_cast<double>(sup.size()),
                             static_cast<double>(sup.intervals().size()));
          }
        }
        std::sort(sig.begin(), sig.end());
        BeableValue out;
        out.reserve(sig.size() * 2);
        for (const auto& [n, c] : sig) {
          out.push_back(n);
          out.push_back(c);
        }
        return out;
      }};
}

BeableFn region_plot(ScalarList S) {
  return BeableFn{
      "region_plot", false,
      [S = std::move(S)](const ExtendedAState& state) -> BeableValue {
        std::set<std::vector<double>> plot;
        for (const auto& [id, term] : state.terms()) {
          const auto* fc = std::get_if<FieldConfig>(&term.config);
          require(fc != nullptr, Errc::kind_mismatch, "region plot needs field terms");
          auto part = scalar_plot(*fc, S);
          plot.insert(part.begin(), part.end());
        }
        BeableValue out;
        for (const auto& tup : plot) out.insert(out.end(), tup.begin(), tup.end());
        return out;
      }};
}

BeableFn fixed_site_value(IntVec site, std::string field, std::size_t comp) {
  return BeableFn{
      "fixed_site_value", false,
      [site = std::move(site), field = std::move(field), comp](const ExtendedAState& state)
          -> BeableValue {
        double v = 0.0;
        for (const auto& [id, term] : state.terms()) {
          const auto* fc = std::get_if<FieldConfig>(&term.config);
          if (fc == nullptr || !fc->has_field(field)) continue;
          const auto idx = fc->patch().site_index(site);
          if (!idx) continue;
          const TensorData& f = fc->field(field);
          const std::size_t bs = tensor_block_size(fc->patch().dim(), f.rank());
          require(comp < bs, Errc::invalid_argument, "component index out of range");
          v += f.comps[*idx * bs + comp];
        }
        return {v};
      }};
}

InvarianceReport is_beable_sampled(const BeableFn& B, const ExtendedAState& state,
                                   const QDSampler& sampler, std::size_t n,
                                   std::uint64_t root_seed) {
  require(n >= 1, Errc::invalid_argument, "need at least one sample");
  require(static_cast<bool>(B.fn), Errc::invalid_argument, "beable has no functional");
  require(static_cast<bool>(sampler), Errc::sampler_failure, "no sampler provided");

  const BeableValue before = B.fn(state);
  InvarianceReport report;
  report.samples = n;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t seed = splitmix64(root_seed + 0x9e3779b97f4a7c15ULL * (i + 1));
    ExtendedAState after;
    try {
      const RestrictedQD qd = sampler(seed, state);
      after = apply_restricted(qd, state);
    } catch (const Error&) {
      fail(Errc::sampler_failure, "sampler produced an inapplicable quantum diffeomorphism");
    }
    const BeableValue now = B.fn(after);
    double dev = 0.0;
    if (now.size() != before.size()) {
      dev = std::numeric_limits<double>::infinity();
    } else {
      for (std::size_t k = 0; k < now.size(); ++k)
        dev = std::max(dev, std::abs(now[k] - before[k]));
    }
    report.max_deviation = std::max(report.max_deviation, dev);
    const bool violated = B.discrete ? dev != 0.0 : dev > 1e-9;
    if (violated) report.violations.push_back(InvarianceViolation{i, dev});
  }
  return report;
}

namespace {

bool plot_in_region(const Configuration& config, const ScalarList& S, const ScalarRegion& A) {
  const auto* fc = std::get_if<FieldConfig>(&config);
  require(fc != nullptr, Errc::kind_mismatch, "region selection needs field terms");
  std::set<std::vector<double>> plot;
  try {
    plot = scalar_plot(*fc, S);
  } catch (const Error& e) {
    if (e.code() == Errc::boundary_only_support) return true;  // empty plot
    throw;
  }
  for (const auto& tup : plot) {
    bool inside = false;
    for (const auto& box : A) {
      require(box.lo.size() == tup.size() && box.hi.size() == tup.size(), Errc::invalid_argument,
              "region box dimension must match the scalar list");
      bool in = true;
      for (std::size_t k = 0; k < tup.size(); ++k)
        if (!(box.lo[k] <= tup[k] && tup[k] <= box.hi[k])) {
          in = false;
          break;
        }
      if (in) {
        inside = true;
        break;
      }
    }
    if (!inside) return false;
  }
  return true;
}

}  // namespace

ExtendedState select_region(const ExtendedState& state, const ScalarList& S,
                            const ScalarRegion& A) {
  ExtendedState out;
  for (const auto& [id, term] : state.terms())
    if (plot_in_region(term.config, S, A)) out.add_term(term.config, term.weight);
  return out;
}

ExtendedAState select_region(const ExtendedAState& state, const ScalarList& S,
                             const ScalarRegion& A) {
  ExtendedAState out;
  for (const auto& [id, term] : state.terms())
    if (plot_in_region(term.config, S, A)) out.add_term(term.config, term.weight, term.coeffs);
  return out;
}

bool beable_constraint(const BeableFn& B, const BeableValue& beta, const ExtendedAState& state) {
  require(static_cast<bool>(B.fn), Errc::invalid_argument, "beable has no functional");
  const BeableValue v = B.fn(state);
  if (v.size() != beta.size()) return false;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double dev = std::abs(v[k] - beta[k]);
    if (B.discrete ? dev != 0.0 : dev > 1e-9) return false;
  }
  return true;
}

}  // namespace qatlas
