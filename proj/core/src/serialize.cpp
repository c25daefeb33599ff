#include "qatlas/serialize.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>

namespace qatlas {

namespace {

void append_number(std::string& out, double x) {
  if (!std::isfinite(x)) {
    out += "null";
    return;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  out += buf;
}

void write_json(const Json& j, std::string& out, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent) * (depth + 1), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent) * depth, ' ');
  switch (j.type()) {
    case Json::value_t::null:
      out += "null";
      break;
    case Json::value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      break;
    case Json::value_t::number_integer: {
      char buf[24];
      std::snprintf(buf, sizeof buf, "%" PRId64, j.get<std::int64_t>());
      out += buf;
      break;
    }
    case Json::value_t::number_unsigned: {
      char buf[24];
      std::snprintf(buf, sizeof buf, "%" PRIu64, j.get<std::uint64_t>());
      out += buf;
      break;
    }
    case Json::value_t::number_float:
      append_number(out, j.get<double>());
      break;
    case Json::value_t::string:
      out += Json(j.get<std::string>()).dump();
      break;
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        break;
      }
      out += "[\n";
      bool first = true;
      for (const auto& item : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad;
        write_json(item, out, indent, depth + 1);
      }
      out += "\n" + close_pad + "]";
      break;
    }
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        break;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ",\n";
        first = false;
        out += pad + Json(key).dump() + ": ";
        write_json(value, out, indent, depth + 1);
      }
      out += "\n" + close_pad + "}";
      break;
    }
    default:
      fail(Errc::schema_error, "unsupported json value type");
  }
}

Json mat_json(const Eigen::MatrixXd& M) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vec_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::MatrixXd mat_from(const Json& j) {
  require(j.is_array() && !j.empty() && j[0].is_array(), Errc::schema_error,
          "matrix must be an array of rows");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    require(j[r].size() == static_cast<std::size_t>(cols), Errc::schema_error,
            "ragged matrix rows");
    for (Eigen::Index c = 0; c < cols; ++c) M(r, c) = j[r][c].get<double>();
  }
  return M;
}

Eigen::VectorXd evec_from(const Json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

const Json& member(const Json& j, const char* key) {
  require(j.is_object() && j.contains(key), Errc::schema_error,
          std::string("missing field \"") + key + "\"");
  return j.at(key);
}

Json complex_json(const Complex& z) { return Json::array({z.real(), z.imag()}); }

Complex complex_from(const Json& j) {
  require(j.is_array() && j.size() == 2, Errc::schema_error, "complex value must be [re, im]");
  return Complex(j[0].get<double>(), j[1].get<double>());
}

}  // namespace

std::string dump_json(const Json& j, int indent) {
  std::string out;
  write_json(j, out, indent, 0);
  out += "\n";
  return out;
}

Json json_of(const Rational& r) { return Json::array({r.num(), r.den()}); }

Rational rational_from(const Json& j) {
  require(j.is_array() && j.size() == 2, Errc::schema_error, "rational must be [num, den]");
  return rat(j[0].get<std::int64_t>(), j[1].get<std::int64_t>());
}

Json json_of(const LatticePatch& patch) {
  Json spacing = Json::array();
  for (const auto& s : patch.spacing()) spacing.push_back(json_of(s));
  Json boxes = Json::array();
  for (const auto& b : patch.boxes()) boxes.push_back(Json{{"lo", b.lo}, {"hi", b.hi}});
  return Json{{"dim", patch.dim()}, {"spacing", std::move(spacing)}, {"boxes", std::move(boxes)}};
}

LatticePatch patch_from(const Json& j) {
  std::vector<Rational> spacing;
  for (const auto& s : member(j, "spacing")) spacing.push_back(rational_from(s));
  std::vector<Box> boxes;
  for (const auto& b : member(j, "boxes"))
    boxes.push_back(Box{member(b, "lo").get<IntVec>(), member(b, "hi").get<IntVec>()});
  return LatticePatch(member(j, "dim").get<int>(), std::move(spacing), std::move(boxes));
}

Json json_of(const TensorData& t) {
  return Json{{"contra", t.contra}, {"cov", t.cov}, {"comps", t.comps}};
}

Json json_of(const TimeSupport& ts) {
  Json intervals = Json::array();
  for (const auto& iv : ts.intervals()) intervals.push_back(Json::array({iv.lo, iv.hi}));
  return Json{{"origin", json_of(ts.origin())},
              {"step", json_of(ts.step())},
              {"intervals", std::move(intervals)}};
}

Json json_of(const Configuration& c) {
  if (const auto* fc = std::get_if<FieldConfig>(&c)) {
    Json fields = Json::object();
    for (const auto& [name, data] : fc->fields()) fields[name] = json_of(data);
    return Json{{"type", "field"}, {"patch", json_of(fc->patch())}, {"fields", std::move(fields)}};
  }
  const auto& pc = std::get<PathConfig>(c);
  return Json{{"type", "path"},
              {"support", json_of(pc.support())},
              {"lattice", Json{{"y_min", json_of(pc.lattice().y_min)},
                               {"dy", json_of(pc.lattice().dy)},
                               {"count", pc.lattice().count}}},
              {"values", pc.values()}};
}

Configuration config_from(const Json& j) {
  const std::string type = member(j, "type").get<std::string>();
  if (type == "field") {
    std::map<std::string, TensorData> fields;
    for (const auto& [name, data] : member(j, "fields").items()) {
      fields.emplace(name, TensorData{member(data, "contra").get<int>(),
                                      member(data, "cov").get<int>(),
                                      member(data, "comps").get<std::vector<double>>()});
    }
    return FieldConfig(patch_from(member(j, "patch")), std::move(fields));
  }
  require(type == "path", Errc::schema_error, "config type must be \"field\" or \"path\"");
  const Json& sup = member(j, "support");
  std::vector<IndexInterval> intervals;
  for (const auto& iv : member(sup, "intervals"))
    intervals.push_back(IndexInterval{iv[0].get<Int>(), iv[1].get<Int>()});
  TimeSupport support(rational_from(member(sup, "origin")), rational_from(member(sup, "step")),
                      std::move(intervals));
  const Json& lat = member(j, "lattice");
  PositionLattice lattice{rational_from(member(lat, "y_min")), rational_from(member(lat, "dy")),
                          member(lat, "count").get<Int>()};
  return PathConfig(std::move(support), std::move(lattice),
                    member(j, "values").get<std::vector<Int>>());
}

Json json_of(const CoeffSet& a) {
  return Json{{"quantity", a.quantity},
              {"contra", a.contra},
              {"cov", a.cov},
              {"dim", a.dim},
              {"values", a.values}};
}

CoeffSet coeffs_from(const Json& j) {
  return CoeffSet{member(j, "quantity").get<std::string>(), member(j, "contra").get<int>(),
                  member(j, "cov").get<int>(), member(j, "dim").get<int>(),
                  member(j, "values").get<std::vector<double>>()};
}

Json json_of(const ExtendedState& s) {
  Json terms = Json::array();
  for (const auto& [id, term] : s.terms()) {
    terms.push_back(Json{{"id", to_hex(id)},
                         {"weight", complex_json(term.weight)},
                         {"config", json_of(term.config)}});
  }
  return Json{{"terms", std::move(terms)}};
}

ExtendedState state_from(const Json& j) {
  ExtendedState s;
  for (const auto& t : member(j, "terms"))
    s.add_term(config_from(member(t, "config")), complex_from(member(t, "weight")));
  return s;
}

Json json_of(const ExtendedAState& s) {
  Json terms = Json::array();
  for (const auto& [id, term] : s.terms()) {
    terms.push_back(Json{{"id", to_hex(id)},
                         {"weight", complex_json(term.weight)},
                         {"coeffs", json_of(term.coeffs)},
                         {"config", json_of(term.config)}});
  }
  return Json{{"terms", std::move(terms)}};
}

ExtendedAState astate_from(const Json& j) {
  ExtendedAState s;
  for (const auto& t : member(j, "terms"))
    s.add_term(config_from(member(t, "config")), complex_from(member(t, "weight")),
               coeffs_from(member(t, "coeffs")));
  return s;
}

Json json_of(const LatticeMap& m) {
  return Json{{"perm", m.perm}, {"sign", m.sign}, {"shift", m.shift}};
}

LatticeMap lattice_map_from(const Json& j) {
  LatticeMap m{member(j, "perm").get<std::vector<int>>(),
               member(j, "sign").get<std::vector<int>>(), member(j, "shift").get<IntVec>()};
  m.validate();
  return m;
}

Json json_of(const QuadraticMap& m) {
  Json B = Json::array();
  for (const auto& b : m.B) B.push_back(mat_json(b));
  return Json{{"x0", vec_json(m.x0)},
              {"A", mat_json(m.A)},
              {"B", std::move(B)},
              {"c", vec_json(m.c)}};
}

QuadraticMap quadratic_map_from(const Json& j) {
  QuadraticMap m;
  m.x0 = evec_from(member(j, "x0"));
  m.A = mat_from(member(j, "A"));
  for (const auto& b : member(j, "B")) m.B.push_back(mat_from(b));
  m.c = evec_from(member(j, "c"));
  m.validate();
  return m;
}

Json json_of(const Diffeo& phi) {
  Json legs = Json::array();
  for (const auto& leg : phi.legs()) {
    Json entry;
    if (const auto* lm = std::get_if<LatticeMap>(&leg.map)) {
      entry = Json{{"kind", "lattice"}, {"map", json_of(*lm)}};
    } else {
      entry = Json{{"kind", "quadratic"}, {"map", json_of(std::get<QuadraticMap>(leg.map))}};
    }
    entry["inverted"] = leg.inverted;
    legs.push_back(std::move(entry));
  }
  return Json{{"dim", phi.dim()}, {"legs", std::move(legs)}};
}

Diffeo diffeo_from(const Json& j) {
  const int dim = member(j, "dim").get<int>();
  Diffeo out = Diffeo::identity(dim);
  for (const auto& entry : member(j, "legs")) {
    const std::string kind = member(entry, "kind").get<std::string>();
    Diffeo leg = kind == "lattice"
                     ? Diffeo::lattice(lattice_map_from(member(entry, "map")))
                     : Diffeo::analytic(quadratic_map_from(member(entry, "map")));
    require(kind == "lattice" || kind == "quadratic", Errc::schema_error,
            "diffeo leg kind must be \"lattice\" or \"quadratic\"");
    if (entry.contains("inverted") && entry["inverted"].get<bool>()) leg = leg.inverse();
    out = Diffeo::compose(leg, out);
  }
  return out;
}

Json json_of(const RestrictedQD& qd) {
  Json maps = Json::object();
  for (const auto& [id, phi] : qd.maps) maps[to_hex(id)] = json_of(phi);
  Json phase = Json::array();
  for (const auto& [pair, theta] : qd.phase.table())
    if (pair.first < pair.second)
      phase.push_back(Json::array({to_hex(pair.first), to_hex(pair.second), theta}));
  return Json{{"maps", std::move(maps)}, {"phase", std::move(phase)}};
}

RestrictedQD restricted_qd_from(const Json& j) {
  RestrictedQD qd;
  for (const auto& [hex, m] : member(j, "maps").items())
    qd.maps.emplace(id_from_hex(hex), diffeo_from(m));
  std::vector<std::tuple<ConfigId, ConfigId, double>> entries;
  if (j.contains("phase")) {
    for (const auto& e : j.at("phase")) {
      require(e.is_array() && e.size() == 3, Errc::schema_error,
              "phase entry must be [u, v, theta]");
      entries.emplace_back(id_from_hex(e[0].get<std::string>()),
                           id_from_hex(e[1].get<std::string>()), e[2].get<double>());
    }
  }
  qd.phase = PhaseFn::from_table(entries);
  return qd;
}

Json json_of(const QuantumFibreBundle& bundle) {
  Json projection = Json::array();
  for (const auto& [q, id] : bundle.projection)
    projection.push_back(Json::array({q, to_hex(id)}));
  Json fibres = Json::object();
  for (const auto& [id, patch] : bundle.fibres) fibres[to_hex(id)] = json_of(patch);
  Json pointmap = Json::array();
  for (const auto& [q, loc] : bundle.pointmap)
    pointmap.push_back(Json::array({q, to_hex(loc.first), loc.second}));
  Json charts = Json::array();
  for (const auto& chart : bundle.charts) {
    Json coord = Json::array();
    for (const auto& [q, x] : chart.coord) coord.push_back(Json::array({q, x}));
    charts.push_back(Json{{"members", chart.members}, {"coord", std::move(coord)}});
  }
  Json equiv = Json::array();
  for (const auto& e : bundle.equiv)
    equiv.push_back(Json{{"u", to_hex(e.u)}, {"v", to_hex(e.v)}, {"witness", json_of(e.witness)}});
  Json order = Json::array();
  for (const auto& o : bundle.order) order.push_back(Json::array({to_hex(o.u), to_hex(o.v)}));
  Json base = Json::array();
  for (const auto& id : bundle.base) base.push_back(to_hex(id));
  Json configs = Json::object();
  for (const auto& [id, c] : bundle.configs) configs[to_hex(id)] = json_of(c);
  return Json{{"total", bundle.total},
              {"base", std::move(base)},
              {"projection", std::move(projection)},
              {"fibres", std::move(fibres)},
              {"pointmap", std::move(pointmap)},
              {"grid", bundle.grid},
              {"charts", std::move(charts)},
              {"equiv", std::move(equiv)},
              {"order", std::move(order)},
              {"configs", std::move(configs)}};
}

QuantumFibreBundle bundle_from(const Json& j) {
  QuantumFibreBundle b;
  b.total = member(j, "total").get<std::vector<QPoint>>();
  for (const auto& hex : member(j, "base")) b.base.push_back(id_from_hex(hex.get<std::string>()));
  for (const auto& e : member(j, "projection"))
    b.projection.emplace(e[0].get<QPoint>(), id_from_hex(e[1].get<std::string>()));
  for (const auto& [hex, patch] : member(j, "fibres").items())
    b.fibres.emplace(id_from_hex(hex), patch_from(patch));
  for (const auto& e : member(j, "pointmap"))
    b.pointmap.emplace(e[0].get<QPoint>(),
                       std::make_pair(id_from_hex(e[1].get<std::string>()), e[2].get<IntVec>()));
  b.grid = member(j, "grid").get<std::vector<std::vector<double>>>();
  for (const auto& cj : member(j, "charts")) {
    BundleChart chart;
    chart.members = member(cj, "members").get<std::vector<QPoint>>();
    for (const auto& e : member(cj, "coord"))
      chart.coord.emplace(e[0].get<QPoint>(), e[1].get<std::vector<double>>());
    b.charts.push_back(std::move(chart));
  }
  if (j.contains("equiv"))
    for (const auto& e : j.at("equiv"))
      b.equiv.push_back(EquivPair{id_from_hex(member(e, "u").get<std::string>()),
                                  id_from_hex(member(e, "v").get<std::string>()),
                                  lattice_map_from(member(e, "witness"))});
  if (j.contains("order"))
    for (const auto& e : j.at("order"))
      b.order.push_back(OrderPair{id_from_hex(e[0].get<std::string>()),
                                  id_from_hex(e[1].get<std::string>())});
  if (j.contains("configs"))
    for (const auto& [hex, c] : j.at("configs").items())
      b.configs.emplace(id_from_hex(hex), config_from(c));
  return b;
}

Json json_of(const QuantumTensorField& field) {
  Json comps = Json::array();
  for (const auto& [q, block] : field.comps) comps.push_back(Json::array({q, block}));
  return Json{{"dim", field.dim},
              {"contra", field.contra},
              {"cov", field.cov},
              {"comps", std::move(comps)}};
}

QuantumTensorField tensor_field_from(const Json& j) {
  QuantumTensorField f;
  f.dim = member(j, "dim").get<int>();
  f.contra = member(j, "contra").get<int>();
  f.cov = member(j, "cov").get<int>();
  for (const auto& e : member(j, "comps"))
    f.comps.emplace(e[0].get<QPoint>(), e[1].get<std::vector<double>>());
  return f;
}

SlotPairing pairing_from(const Json& j) {
  SlotPairing p;
  for (const auto& e : j) {
    require(e.is_array() && e.size() == 2, Errc::schema_error, "pairing entry must be [b, c]");
    p.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  return p;
}

Json json_of(const AlignmentReport& r) {
  Json branches = Json::array();
  for (const auto& b : r.branches) {
    Json quads = Json::array();
    for (const auto& q : b.quadratic) quads.push_back(mat_json(q));
    branches.push_back(Json{{"branch", to_hex(b.branch)},
                            {"jacobian", mat_json(b.jacobian)},
                            {"quadratic", std::move(quads)}});
  }
  Json out{{"branches", std::move(branches)},
           {"metric_scale", r.metric_scale},
           {"eta_residual", r.eta_residual},
           {"pair_residual", r.pair_residual},
           {"first_diff_residual", r.first_diff_residual},
           {"probe_radii", r.probe_radii},
           {"probe_deviations", r.probe_deviations}};
  out["slope"] = r.slope ? Json(*r.slope) : Json();
  return out;
}

Json json_of(const ConsistencyReport& r) {
  Json violations = Json::array();
  for (const auto& v : r.violations)
    violations.push_back(Json{{"u", to_hex(v.u)},
                              {"v", to_hex(v.v)},
                              {"w", to_hex(v.w)},
                              {"max_deviation", v.max_deviation},
                              {"note", v.note}});
  return Json{{"ok", r.ok()}, {"violations", std::move(violations)}};
}

Json json_of(const BundleReport& r) {
  auto list = [](const std::vector<BundleViolation>& vs) {
    Json out = Json::array();
    for (const auto& v : vs) out.push_back(Json{{"axiom", v.axiom}, {"detail", v.detail}});
    return out;
  };
  return Json{{"ok", r.ok()}, {"violations", list(r.violations)}, {"smoothness", list(r.smoothness)}};
}

Json json_of(const InvarianceReport& r) {
  Json violations = Json::array();
  for (const auto& v : r.violations)
    violations.push_back(Json{{"sample", v.sample}, {"deviation", v.deviation}});
  return Json{{"ok", r.ok()},
              {"samples", r.samples},
              {"max_deviation", r.max_deviation},
              {"violations", std::move(violations)}};
}

}  // namespace qatlas
