#include "qatlas/quantum_diffeo.hpp"

#include <cmath>

namespace qatlas {

// ------------------------------------------------------------------ PhaseFn

PhaseFn PhaseFn::from_table(const std::vector<std::tuple<ConfigId, ConfigId, double>>& entries) {
  PhaseFn fn;
  for (const auto& [u, v, theta] : entries) {
    require(std::isfinite(theta), Errc::bad_phase_table, "phase must be finite");
    if (u == v) {
      require(theta == 0.0, Errc::bad_phase_table, "theta(u,u) must be 0");
      continue;
    }
    const auto [it, fresh] = fn.table_.emplace(std::make_pair(u, v), theta);
    require(fresh ? true : it->second == theta, Errc::bad_phase_table,
            "conflicting duplicate phase entry");
    const auto [rit, rfresh] = fn.table_.emplace(std::make_pair(v, u), -theta);
    require(rfresh ? true : rit->second + theta == 0.0, Errc::bad_phase_table,
            "phase table violates antisymmetry");
  }
  return fn;
}

PhaseFn PhaseFn::merged(const PhaseFn& a, const PhaseFn& b) {
  PhaseFn fn;
  fn.table_ = a.table_;
  for (const auto& [key, theta] : b.table_) {
    const auto [it, fresh] = fn.table_.emplace(key, theta);
    require(fresh || it->second == theta, Errc::bad_phase_table,
            "phase tables disagree on a shared pair");
  }
  return fn;
}

double PhaseFn::operator()(const ConfigId& u, const ConfigId& v) const {
  if (u == v) return 0.0;
  const auto it = table_.find(std::make_pair(u, v));
  return it == table_.end() ? 0.0 : it->second;
}

// ---------------------------------------------------------------- GeneralQD

void GeneralQD::validate() const {
  for (const auto& [id, alts] : maps) {
    require(!alts.empty(), Errc::bad_normalization, "branch family must be nonempty");
    double s = 0.0;
    for (const auto& alt : alts) {
      require(std::isfinite(alt.a), Errc::bad_normalization, "family weights must be finite");
      s += alt.a * alt.a;
    }
    require(std::abs(s - 1.0) <= 1e-12, Errc::bad_normalization,
            "branch family weights must satisfy sum a^2 = 1");
  }
}

// ----------------------------------------------------------- branch action

namespace {

PathConfig transform_path(const Diffeo& phi, const PathConfig& p) {
  require(phi.dim() == 1, Errc::invalid_argument, "path branches need 1-D maps");
  require(phi.lattice_exact(), Errc::invalid_argument,
          "path branches admit lattice-exact maps only");
  const LatticeMap m = phi.fused_lattice();
  std::vector<Int> values = p.values();
  for (auto& j : values) {
    j = m.sign[0] * j + m.shift[0];
    require(j >= 0 && j < p.lattice().count, Errc::not_invertible_on_patch,
            "map leaves the position lattice");
  }
  return PathConfig(p.support(), p.lattice(), std::move(values));
}

std::string scratch_field_name(const FieldConfig& f) {
  std::string name = "__qd_coeff";
  while (f.has_field(name)) name.push_back('_');
  return name;
}

}  // namespace

Configuration transform_branch(const Diffeo& phi, const Configuration& u) {
  if (const auto* p = std::get_if<PathConfig>(&u)) return transform_path(phi, *p);
  return pullback_config(phi, std::get<FieldConfig>(u));
}

std::pair<Configuration, CoeffSet> transform_branch(const Diffeo& phi, const Configuration& u,
                                                    const CoeffSet& coeffs) {
  if (const auto* p = std::get_if<PathConfig>(&u)) {
    PathConfig moved = transform_path(phi, *p);
    // Position maps leave time-indexed blocks in place; components pick up
    // the constant 1-D Jacobian (a sign) once per slot.
    CoeffSet out = coeffs;
    if (coeffs.contra + coeffs.cov > 0) {
      const LatticeMap m = phi.fused_lattice();
      const double factor = std::pow(static_cast<double>(m.sign[0]), coeffs.contra + coeffs.cov);
      if (factor != 1.0)
        for (auto& v : out.values) v = -v;
    }
    return {Configuration(std::move(moved)), std::move(out)};
  }
  const auto& f = std::get<FieldConfig>(u);
  const std::string scratch = scratch_field_name(f);
  auto fields = f.fields();
  fields.emplace(scratch, TensorData{coeffs.contra, coeffs.cov, coeffs.values});
  const FieldConfig moved = pullback_config(phi, FieldConfig(f.patch(), std::move(fields)));
  CoeffSet out{coeffs.quantity, coeffs.contra, coeffs.cov, moved.patch().dim(),
               moved.field(scratch).comps};
  auto out_fields = moved.fields();
  out_fields.erase(scratch);
  return {Configuration(FieldConfig(moved.patch(), std::move(out_fields))), std::move(out)};
}

// ------------------------------------------------------------------- apply

namespace {

Complex phase_factor(const PhaseFn& phase, const ConfigId& u, const ConfigId& v) {
  const double theta = phase(u, v);
  // exact unit weight at theta = 0 keeps lattice round-trips bitwise
  if (theta == 0.0) return Complex{1.0, 0.0};
  return std::polar(1.0, theta);
}

const Diffeo& branch_map(const RestrictedQD& qd, const ConfigId& id) {
  const auto it = qd.maps.find(id);
  require(it != qd.maps.end(), Errc::missing_branch_map,
          "no branch map for config " + to_hex(id));
  return it->second;
}

}  // namespace

ExtendedAState apply_restricted(const RestrictedQD& qd, const ExtendedAState& state) {
  ExtendedAState out;
  for (const auto& [id, term] : state.terms()) {
    const Diffeo& phi = branch_map(qd, id);
    auto [moved, coeffs] = transform_branch(phi, term.config, term.coeffs);
    const ConfigId image = config_id(moved);
    const Complex w = term.weight * phase_factor(qd.phase, id, image);
    out.add_term(std::move(moved), w, std::move(coeffs));
  }
  return out;
}

ExtendedState apply_restricted(const RestrictedQD& qd, const ExtendedState& state) {
  ExtendedState out;
  for (const auto& [id, term] : state.terms()) {
    const Diffeo& phi = branch_map(qd, id);
    Configuration moved = transform_branch(phi, term.config);
    const ConfigId image = config_id(moved);
    const Complex w = term.weight * phase_factor(qd.phase, id, image);
    out.add_term(std::move(moved), w);
  }
  return out;
}

ExtendedAState apply_general(const GeneralQD& qd, const ExtendedAState& state) {
  qd.validate();
  ExtendedAState out;
  for (const auto& [id, term] : state.terms()) {
    const auto it = qd.maps.find(id);
    require(it != qd.maps.end(), Errc::missing_branch_map,
            "no branch family for config " + to_hex(id));
    for (const auto& alt : it->second) {
      auto [moved, coeffs] = transform_branch(alt.map, term.config, term.coeffs);
      const ConfigId image = config_id(moved);
      const Complex w = term.weight * alt.a * phase_factor(qd.phase, id, image);
      out.add_term(std::move(moved), w, std::move(coeffs));
    }
  }
  return out;
}

ExtendedState apply_general(const GeneralQD& qd, const ExtendedState& state) {
  qd.validate();
  ExtendedState out;
  for (const auto& [id, term] : state.terms()) {
    const auto it = qd.maps.find(id);
    require(it != qd.maps.end(), Errc::missing_branch_map,
            "no branch family for config " + to_hex(id));
    for (const auto& alt : it->second) {
      Configuration moved = transform_branch(alt.map, term.config);
      const ConfigId image = config_id(moved);
      out.add_term(std::move(moved), term.weight * alt.a * phase_factor(qd.phase, id, image));
    }
  }
  return out;
}

// ----------------------------------------------------------------- algebra

namespace {

int config_dim(const Configuration& c) {
  if (std::holds_alternative<PathConfig>(c)) return 1;
  return std::get<FieldConfig>(c).patch().dim();
}

}  // namespace

RestrictedQD identity_qd(const Catalog& catalog) {
  RestrictedQD qd;
  for (const ConfigId& id : catalog.ids())
    qd.maps.emplace(id, Diffeo::identity(config_dim(catalog.at(id))));
  return qd;
}

GeneralQD as_general(const RestrictedQD& qd) {
  GeneralQD g;
  g.phase = qd.phase;
  for (const auto& [id, phi] : qd.maps) g.maps.emplace(id, std::vector<GeneralQD::Alt>{{1.0, phi}});
  return g;
}

RestrictedQD compose(const RestrictedQD& first, const RestrictedQD& second,
                     const Catalog& catalog) {
  RestrictedQD out;
  out.phase = PhaseFn::merged(first.phase, second.phase);
  for (const ConfigId& id : catalog.ids()) {
    const auto it = first.maps.find(id);
    if (it == first.maps.end()) continue;
    const ConfigId image = config_id(transform_branch(it->second, catalog.at(id)));
    const auto jt = second.maps.find(image);
    require(jt != second.maps.end(), Errc::domain_mismatch,
            "second map is undefined on an image branch");
    out.maps.emplace(id, Diffeo::compose(jt->second, it->second));
  }
  return out;
}

GeneralQD compose(const GeneralQD& first, const GeneralQD& second, const Catalog& catalog) {
  first.validate();
  second.validate();
  GeneralQD out;
  out.phase = PhaseFn::merged(first.phase, second.phase);
  for (const ConfigId& id : catalog.ids()) {
    const auto it = first.maps.find(id);
    if (it == first.maps.end()) continue;
    std::vector<GeneralQD::Alt> alts;
    for (const auto& a1 : it->second) {
      const ConfigId image = config_id(transform_branch(a1.map, catalog.at(id)));
      const auto jt = second.maps.find(image);
      require(jt != second.maps.end(), Errc::domain_mismatch,
              "second family is undefined on an image branch");
      for (const auto& a2 : jt->second)
        alts.push_back(GeneralQD::Alt{a1.a * a2.a, Diffeo::compose(a2.map, a1.map)});
    }
    out.maps.emplace(id, std::move(alts));
  }
  return out;
}

namespace {

template <typename State>
RestrictedQD reverse_impl(const RestrictedQD& qd, const State& state) {
  RestrictedQD out;
  out.phase = qd.phase;
  for (const auto& [id, term] : state.terms()) {
    const Diffeo& phi = branch_map(qd, id);
    const ConfigId image = config_id(transform_branch(phi, term.config));
    const auto [it, fresh] = out.maps.emplace(image, phi.inverse());
    require(fresh, Errc::irreversible, "two branches collide under this action");
  }
  return out;
}

}  // namespace

RestrictedQD reverse_for(const RestrictedQD& qd, const ExtendedAState& state) {
  return reverse_impl(qd, state);
}

RestrictedQD reverse_for(const RestrictedQD& qd, const ExtendedState& state) {
  return reverse_impl(qd, state);
}

}  // namespace qatlas
