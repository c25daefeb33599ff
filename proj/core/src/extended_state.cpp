#include "qatlas/extended_state.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qatlas {

namespace {

void check_weight(Complex w) {
  require(std::isfinite(w.real()) && std::isfinite(w.imag()), Errc::invalid_argument,
          "non-finite term weight");
}

struct KahanC {
  Complex sum{0.0, 0.0};
  Complex c{0.0, 0.0};
  void add(Complex v) {
    const Complex y = v - c;
    const Complex t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

// ------------------------------------------------------------- ExtendedState

void ExtendedState::add_term(Configuration config, Complex weight) {
  check_weight(weight);
  const ConfigId id = config_id(config);
  auto it = terms_.find(id);
  if (it == terms_.end()) {
    terms_.emplace(id, Term{std::move(config), weight});
    return;
  }
  require(it->second.config == config, Errc::invalid_argument, "config id collision");
  it->second.weight += weight;
  check_weight(it->second.weight);
}

const Term& ExtendedState::at(const ConfigId& id) const {
  auto it = terms_.find(id);
  require(it != terms_.end(), Errc::invalid_argument, "no term with id " + to_hex(id));
  return it->second;
}

ExtendedState ExtendedState::normalized() const {
  ExtendedState out;
  for (const auto& [id, term] : terms_)
    if (term.weight != Complex{0.0, 0.0}) out.terms_.emplace(id, term);
  return out;
}

ExtendedState ExtendedState::scaled(Complex factor) const {
  check_weight(factor);
  ExtendedState out = *this;
  for (auto& [id, term] : out.terms_) term.weight *= factor;
  return out;
}

ExtendedState ExtendedState::sum(const ExtendedState& a, const ExtendedState& b) {
  ExtendedState out = a;
  for (const auto& [id, term] : b.terms_) out.add_term(term.config, term.weight);
  return out;
}

bool operator==(const ExtendedState& a, const ExtendedState& b) {
  if (a.terms_.size() != b.terms_.size()) return false;
  auto ia = a.terms_.begin();
  auto ib = b.terms_.begin();
  for (; ia != a.terms_.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return false;
    if (ia->second.weight != ib->second.weight) return false;
    if (!(ia->second.config == ib->second.config)) return false;
  }
  return true;
}

// ------------------------------------------------------------ ExtendedAState

void ExtendedAState::add_term(Configuration config, Complex weight, CoeffSet coeffs) {
  check_weight(weight);
  std::size_t sites = 0;
  if (const auto* p = std::get_if<PathConfig>(&config)) {
    sites = p->support().size();
    require(coeffs.dim == 1, Errc::invalid_argument, "path coefficient sets are 1-dimensional");
  } else {
    const auto& f = std::get<FieldConfig>(config);
    sites = f.patch().site_count();
    require(coeffs.dim == f.patch().dim(), Errc::invalid_argument,
            "coefficient set dimension must match the patch");
  }
  require(coeffs.values.size() == sites * coeffs.block_size(), Errc::invalid_argument,
          "coefficient set must cover the support exactly");
  const ConfigId id = config_id(config);
  auto it = terms_.find(id);
  if (it == terms_.end()) {
    terms_.emplace(id, ATerm{std::move(config), weight, std::move(coeffs)});
    return;
  }
  require(it->second.config == config, Errc::invalid_argument, "config id collision");
  require(it->second.coeffs == coeffs, Errc::ambiguous,
          "coincident terms carry conflicting coefficient sets");
  it->second.weight += weight;
  check_weight(it->second.weight);
}

const ATerm& ExtendedAState::at(const ConfigId& id) const {
  auto it = terms_.find(id);
  require(it != terms_.end(), Errc::invalid_argument, "no term with id " + to_hex(id));
  return it->second;
}

ExtendedState ExtendedAState::drop_coeffs() const {
  ExtendedState out;
  for (const auto& [id, term] : terms_) out.add_term(term.config, term.weight);
  return out;
}

ExtendedAState ExtendedAState::normalized() const {
  ExtendedAState out;
  for (const auto& [id, term] : terms_)
    if (term.weight != Complex{0.0, 0.0}) out.terms_.emplace(id, term);
  return out;
}

// ------------------------------------------------------------------- project

namespace {

CoeffSet restrict_coeffs(const ATerm& term, const Configuration& restricted);

}  // namespace

ATerm restrict_term(const ATerm& term, const SupportSpec& target) {
  Configuration restricted = restrict_config(term.config, target);
  CoeffSet coeffs = restrict_coeffs(term, restricted);
  return ATerm{std::move(restricted), term.weight, std::move(coeffs)};
}

namespace {

CoeffSet restrict_coeffs(const ATerm& term, const Configuration& restricted) {
  const CoeffSet& src = term.coeffs;
  CoeffSet out{src.quantity, src.contra, src.cov, src.dim, {}};
  const std::size_t bs = src.block_size();
  if (const auto* p = std::get_if<PathConfig>(&term.config)) {
    const auto& rp = std::get<PathConfig>(restricted);
    out.values.reserve(rp.support().size() * bs);
    for (const Int k : rp.support().indices()) {
      const std::size_t pos = *p->support().position_of(k);
      for (std::size_t b = 0; b < bs; ++b) out.values.push_back(src.values[pos * bs + b]);
    }
    return out;
  }
  const auto& f = std::get<FieldConfig>(term.config);
  const auto& rf = std::get<FieldConfig>(restricted);
  out.values.reserve(rf.patch().site_count() * bs);
  for (const auto& site : rf.patch().sites()) {
    const std::size_t pos = *f.patch().site_index(site);
    for (std::size_t b = 0; b < bs; ++b) out.values.push_back(src.values[pos * bs + b]);
  }
  return out;
}

// Restriction-and-merge of every containing term onto one support target.
void project_support(const ExtendedAState& state, const SupportSpec& target,
                     const std::optional<PathBoundary>& endpoint_filter, ExtendedAState& out) {
  bool contained_somewhere = false;
  // Keyed by restricted config id: weights add, coefficient values must agree.
  std::map<ConfigId, ATerm> rows;
  for (const auto& [id, term] : state.terms()) {
    bool applies = false;
    if (const auto* ts = std::get_if<TimeSupport>(&target))
      applies = kind_of(term.config) == ConfigKind::path &&
                ts->subset_of(*path_support(term.config));
    else
      applies = kind_of(term.config) == ConfigKind::field &&
                std::get<LatticePatch>(target).subset_of(*field_patch(term.config));
    if (!applies) continue;
    contained_somewhere = true;
    Configuration restricted = restrict_config(term.config, target);
    if (endpoint_filter.has_value()) {
      const auto& rp = std::get<PathConfig>(restricted);
      const auto& iv = rp.support().intervals();
      if (endpoint_filter->j_i && rp.value_at(iv.front().lo) != *endpoint_filter->j_i) continue;
      if (endpoint_filter->j_f && rp.value_at(iv.back().hi) != *endpoint_filter->j_f) continue;
    }
    CoeffSet coeffs = restrict_coeffs(term, restricted);
    const ConfigId rid = config_id(restricted);
    auto it = rows.find(rid);
    if (it == rows.end()) {
      rows.emplace(rid, ATerm{std::move(restricted), term.weight, std::move(coeffs)});
    } else {
      require(it->second.coeffs == coeffs, Errc::ambiguous,
              "target is contained in terms with conflicting restricted values");
      it->second.weight += term.weight;
    }
  }
  require(contained_somewhere, Errc::not_contained,
          "projection target is contained in no term of the state");
  for (auto& [rid, row] : rows) out.add_term(std::move(row.config), row.weight, std::move(row.coeffs));
}

}  // namespace

ExtendedAState project(const ExtendedAState& state, const ProjectionTarget& target) {
  ExtendedAState out;
  if (const auto* supports = std::get_if<std::vector<SupportSpec>>(&target)) {
    require(!supports->empty(), Errc::invalid_argument, "projection needs at least one target");
    // Exact duplicate targets contribute once.
    std::vector<const SupportSpec*> uniq;
    for (const auto& s : *supports) {
      bool dup = false;
      for (const auto* t : uniq)
        if (*t == s) {
          dup = true;
          break;
        }
      if (!dup) uniq.push_back(&s);
    }
    for (const auto* s : uniq) project_support(state, *s, std::nullopt, out);
    return out;
  }
  const auto& boundary = std::get<BoundarySpec>(target);
  if (const auto* pb = std::get_if<PathBoundary>(&boundary)) {
    require(pb->t_i < pb->t_f, Errc::invalid_argument, "boundary needs t_i < t_f");
    // The window is resolved per term grid; all path terms must share one grid.
    const TimeSupport* grid = nullptr;
    for (const auto& [id, term] : state.terms())
      if (kind_of(term.config) == ConfigKind::path) {
        grid = path_support(term.config);
        break;
      }
    require(grid != nullptr, Errc::not_contained, "no path term to project onto a window");
    const Int ki = grid->index_of_time(pb->t_i);
    const Int kf = grid->index_of_time(pb->t_f);
    const TimeSupport window(grid->origin(), grid->step(), {IndexInterval{ki, kf}});
    ExtendedAState out2;
    project_support(state, SupportSpec{window}, *pb, out2);
    return out2;
  }
  // Field boundary: keep terms whose named field matches every condition.
  const auto& fb = std::get<FieldBoundary>(boundary);
  bool any = false;
  for (const auto& [id, term] : state.terms()) {
    const auto* f = std::get_if<FieldConfig>(&term.config);
    if (f == nullptr || !f->has_field(fb.field)) continue;
    bool match = true;
    for (const auto& [site, want] : fb.site_values) {
      if (!f->patch().contains_site(site)) {
        match = false;
        break;
      }
      const auto got = f->block_at(fb.field, site);
      if (got.size() != want.size() || !std::equal(got.begin(), got.end(), want.begin())) {
        match = false;
        break;
      }
    }
    if (match) {
      any = true;
      out.add_term(term.config, term.weight, term.coeffs);
    }
  }
  require(any, Errc::not_contained, "no term satisfies the boundary condition");
  return out;
}

// ----------------------------------------------------------------- extract_A

ExtendedAState extract_A(const ExtendedState& state, const Extractor& extractor) {
  ExtendedAState out;
  for (const auto& [id, term] : state.terms()) {
    if (const auto* lag = std::get_if<LagrangianSpec>(&extractor)) {
      const auto* p = std::get_if<PathConfig>(&term.config);
      require(p != nullptr, Errc::unknown_quantity,
              "Lagrangian extraction applies to path configurations");
      const double dt = p->support().step().to_double();
      CoeffSet coeffs{"L", 0, 0, 1, {}};
      coeffs.values.reserve(p->support().size());
      for (const auto& iv : p->support().intervals()) {
        for (Int k = iv.lo; k < iv.hi; ++k) {
          const double v = (p->y_at(k + 1) - p->y_at(k)) / dt;
          coeffs.values.push_back(0.5 * lag->mass * v * v - lag->V(p->y_at(k)));
        }
        coeffs.values.push_back(0.0);  // interval-final site carries no step
      }
      out.add_term(term.config, term.weight, std::move(coeffs));
      continue;
    }
    const auto& want = std::get<FieldQuantity>(extractor);
    const auto* f = std::get_if<FieldConfig>(&term.config);
    require(f != nullptr, Errc::unknown_quantity,
            "field extraction applies to field configurations");
    require(f->has_field(want.name), Errc::unknown_quantity,
            "no field named \"" + want.name + "\"");
    const TensorData& data = f->field(want.name);
    CoeffSet coeffs{want.name, data.contra, data.cov, f->patch().dim(), data.comps};
    out.add_term(term.config, term.weight, std::move(coeffs));
  }
  return out;
}

// ------------------------------------------------------------------- exp_int

ExtendedState exp_int(const ExtendedAState& stateL, const ExpIntOptions& opts) {
  require(opts.hbar > 0.0, Errc::invalid_argument, "exp_int needs hbar > 0");
  ExtendedState out;
  for (const auto& [id, term] : stateL.terms()) {
    require(term.coeffs.scalar(), Errc::non_scalar_coeff,
            "exp_int needs scalar coefficient sets");
    double measure = 0.0;
    std::size_t steps = 0;
    std::size_t interval_count = 0;
    double dy = 0.0;
    if (const auto* p = std::get_if<PathConfig>(&term.config)) {
      measure = p->support().step().to_double();
      for (const auto& iv : p->support().intervals())
        steps += static_cast<std::size_t>(iv.hi - iv.lo);
      interval_count = p->support().intervals().size();
      dy = p->lattice().dy.to_double();
    } else {
      const auto& f = std::get<FieldConfig>(term.config);
      measure = 1.0;
      for (const auto& s : f.patch().spacing()) measure *= s.to_double();
      require(opts.norm == ExpIntOptions::Norm::unit, Errc::invalid_argument,
              "transfer-matrix normalization applies to path terms");
    }
    // Fixed-order compensated sum; interval-final sites hold 0 by convention.
    double action = 0.0, comp = 0.0;
    for (const double L : term.coeffs.values) {
      const double y = L * measure - comp;
      const double t = action + y;
      comp = (t - action) - y;
      action = t;
    }
    Complex norm{1.0, 0.0};
    if (opts.norm == ExpIntOptions::Norm::transfer_matrix) {
      // principal sqrt(m / (2 pi i hbar dt)) per step, dy per interior site
      const double a = opts.mass / (2.0 * std::numbers::pi * opts.hbar * measure);
      const Complex per_step = std::sqrt(std::abs(a)) * std::polar(1.0, -std::numbers::pi / 4.0);
      norm = std::pow(per_step, static_cast<double>(steps));
      norm *= std::pow(dy, static_cast<double>(steps - interval_count));
    }
    out.add_term(term.config, term.weight * norm * std::polar(1.0, action / opts.hbar));
  }
  return out;
}

// ----------------------------------------------------------------- amplitude

namespace {

bool selector_matches(const Term& term, const BoundarySpec& selector) {
  if (const auto* pb = std::get_if<PathBoundary>(&selector)) {
    const auto* p = std::get_if<PathConfig>(&term.config);
    if (p == nullptr || !p->support().single_interval()) return false;
    const auto& iv = p->support().intervals().front();
    Int ki = 0, kf = 0;
    try {
      ki = p->support().index_of_time(pb->t_i);
      kf = p->support().index_of_time(pb->t_f);
    } catch (const Error&) {
      return false;  // off-grid boundary cannot match this term
    }
    if (iv.lo != ki || iv.hi != kf) return false;
    if (pb->j_i && p->value_at(ki) != *pb->j_i) return false;
    if (pb->j_f && p->value_at(kf) != *pb->j_f) return false;
    return true;
  }
  const auto& fb = std::get<FieldBoundary>(selector);
  const auto* f = std::get_if<FieldConfig>(&term.config);
  if (f == nullptr || !f->has_field(fb.field)) return false;
  for (const auto& [site, want] : fb.site_values) {
    if (!f->patch().contains_site(site)) return false;
    const auto got = f->block_at(fb.field, site);
    if (got.size() != want.size() || !std::equal(got.begin(), got.end(), want.begin()))
      return false;
  }
  return true;
}

}  // namespace

Complex amplitude(const ExtendedState& stateS, const BoundarySpec& selector) {
  if (const auto* pb = std::get_if<PathBoundary>(&selector))
    require(pb->t_i < pb->t_f, Errc::invalid_argument, "selector needs t_i < t_f");
  KahanC acc;
  bool any = false;
  for (const auto& [id, term] : stateS.terms()) {
    if (!selector_matches(term, selector)) continue;
    any = true;
    acc.add(term.weight);
  }
  require(any, Errc::empty_selection, "selector matches no term");
  return acc.sum;
}

}  // namespace qatlas
