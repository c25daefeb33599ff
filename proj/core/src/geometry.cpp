#include "qatlas/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace qatlas {

// ---------------------------------------------------------------- LatticeMap

void LatticeMap::validate() const {
  const std::size_t d = perm.size();
  require(d > 0 && sign.size() == d && shift.size() == d, Errc::invalid_argument,
          "lattice map field sizes must agree");
  std::vector<bool> seen(d, false);
  for (std::size_t a = 0; a < d; ++a) {
    require(perm[a] >= 0 && static_cast<std::size_t>(perm[a]) < d && !seen[perm[a]],
            Errc::invalid_argument, "perm must be a permutation");
    seen[perm[a]] = true;
    require(sign[a] == 1 || sign[a] == -1, Errc::invalid_argument, "signs must be +-1");
  }
}

IntVec LatticeMap::apply(const IntVec& p) const {
  require(p.size() == perm.size(), Errc::invalid_argument, "dimension mismatch");
  IntVec q(p.size());
  for (std::size_t a = 0; a < p.size(); ++a) q[a] = sign[a] * p[perm[a]] + shift[a];
  return q;
}

IntVec LatticeMap::apply_inverse(const IntVec& q) const {
  require(q.size() == perm.size(), Errc::invalid_argument, "dimension mismatch");
  IntVec p(q.size());
  for (std::size_t a = 0; a < q.size(); ++a)
    p[perm[a]] = sign[a] * (q[a] - shift[a]);  // sign is its own inverse
  return p;
}

LatticeMap LatticeMap::inverse() const {
  const std::size_t d = perm.size();
  LatticeMap inv;
  inv.perm.resize(d);
  inv.sign.resize(d);
  inv.shift.resize(d);
  for (std::size_t a = 0; a < d; ++a) {
    inv.perm[perm[a]] = static_cast<int>(a);
    inv.sign[perm[a]] = sign[a];
    inv.shift[perm[a]] = -sign[a] * shift[a];
  }
  return inv;
}

LatticeMap LatticeMap::identity(int dim) {
  LatticeMap m;
  m.perm.resize(dim);
  m.sign.assign(dim, 1);
  m.shift.assign(dim, 0);
  for (int a = 0; a < dim; ++a) m.perm[a] = a;
  return m;
}

LatticeMap LatticeMap::translation(IntVec shift) {
  LatticeMap m = identity(static_cast<int>(shift.size()));
  m.shift = std::move(shift);
  return m;
}

LatticeMap LatticeMap::compose(const LatticeMap& outer, const LatticeMap& inner) {
  require(outer.dim() == inner.dim(), Errc::invalid_argument, "dimension mismatch");
  const std::size_t d = outer.perm.size();
  LatticeMap m;
  m.perm.resize(d);
  m.sign.resize(d);
  m.shift.resize(d);
  for (std::size_t a = 0; a < d; ++a) {
    m.perm[a] = inner.perm[outer.perm[a]];
    m.sign[a] = outer.sign[a] * inner.sign[outer.perm[a]];
    m.shift[a] = outer.sign[a] * inner.shift[outer.perm[a]] + outer.shift[a];
  }
  return m;
}

// -------------------------------------------------------------- QuadraticMap

void QuadraticMap::validate() const {
  const int d = dim();
  require(d > 0 && A.cols() == d && x0.size() == d && c.size() == d, Errc::invalid_argument,
          "quadratic map shapes must agree");
  require(B.size() == static_cast<std::size_t>(d), Errc::invalid_argument,
          "need one quadratic block per output axis");
  for (const auto& b : B) {
    require(b.rows() == d && b.cols() == d, Errc::invalid_argument, "quadratic block shape");
    require((b - b.transpose()).cwiseAbs().maxCoeff() == 0.0, Errc::invalid_argument,
            "quadratic blocks must be symmetric");
  }
  require(std::abs(A.determinant()) > 1e-12, Errc::invalid_argument,
          "linear part must be invertible");
}

Eigen::VectorXd QuadraticMap::apply(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd d = x - x0;
  Eigen::VectorXd out = A * d + c;
  for (int mu = 0; mu < dim(); ++mu) out[mu] += 0.5 * d.dot(B[mu] * d);
  return out;
}

Eigen::MatrixXd QuadraticMap::jacobian(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd d = x - x0;
  Eigen::MatrixXd J = A;
  for (int mu = 0; mu < dim(); ++mu) J.row(mu) += (B[mu] * d).transpose();
  return J;
}

Eigen::VectorXd QuadraticMap::apply_inverse(const Eigen::VectorXd& q) const {
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  Eigen::VectorXd x = x0 + lu.solve(q - c);
  const double scale = std::max(1.0, q.norm());
  for (int it = 0; it < 64; ++it) {
    const Eigen::VectorXd r = q - apply(x);
    if (r.norm() <= 1e-14 * scale) return x;
    const Eigen::MatrixXd J = jacobian(x);
    const Eigen::FullPivLU<Eigen::MatrixXd> jlu(J);
    require(jlu.isInvertible(), Errc::not_invertible_on_patch,
            "map is singular along the inversion path");
    x += jlu.solve(r);
  }
  fail(Errc::not_invertible_on_patch, "inverse iteration did not converge");
}

QuadraticMap QuadraticMap::affine(Eigen::MatrixXd A, Eigen::VectorXd c) {
  QuadraticMap m;
  const int d = static_cast<int>(A.rows());
  m.x0 = Eigen::VectorXd::Zero(d);
  m.A = std::move(A);
  m.B.assign(d, Eigen::MatrixXd::Zero(d, d));
  m.c = std::move(c);
  return m;
}

QuadraticMap QuadraticMap::identity(int dim) {
  return affine(Eigen::MatrixXd::Identity(dim, dim), Eigen::VectorXd::Zero(dim));
}

// -------------------------------------------------------------------- Diffeo

Diffeo Diffeo::identity(int dim) {
  Diffeo d;
  d.dim_ = dim;
  return d;
}

Diffeo Diffeo::lattice(LatticeMap m) {
  m.validate();
  Diffeo d;
  d.dim_ = m.dim();
  d.legs_.push_back(Leg{std::move(m), false});
  return d;
}

Diffeo Diffeo::analytic(QuadraticMap m) {
  m.validate();
  Diffeo d;
  d.dim_ = m.dim();
  d.legs_.push_back(Leg{std::move(m), false});
  return d;
}

Diffeo Diffeo::compose(const Diffeo& outer, const Diffeo& inner) {
  require(outer.dim_ == inner.dim_, Errc::invalid_argument, "dimension mismatch");
  Diffeo d;
  d.dim_ = inner.dim_;
  d.legs_ = inner.legs_;
  d.legs_.insert(d.legs_.end(), outer.legs_.begin(), outer.legs_.end());
  // Adjacent non-inverted lattice legs fuse exactly.
  std::vector<Leg> fused;
  for (auto& leg : d.legs_) {
    if (!fused.empty() && !fused.back().inverted && !leg.inverted &&
        std::holds_alternative<LatticeMap>(fused.back().map) &&
        std::holds_alternative<LatticeMap>(leg.map)) {
      fused.back().map = LatticeMap::compose(std::get<LatticeMap>(leg.map),
                                             std::get<LatticeMap>(fused.back().map));
      continue;
    }
    fused.push_back(std::move(leg));
  }
  d.legs_ = std::move(fused);
  return d;
}

bool Diffeo::lattice_exact() const noexcept {
  for (const auto& leg : legs_)
    if (!std::holds_alternative<LatticeMap>(leg.map)) return false;
  return true;
}

Diffeo Diffeo::inverse() const {
  Diffeo d;
  d.dim_ = dim_;
  d.legs_.reserve(legs_.size());
  for (auto it = legs_.rbegin(); it != legs_.rend(); ++it)
    d.legs_.push_back(Leg{it->map, !it->inverted});
  return d;
}

IntVec Diffeo::apply_index(const IntVec& p) const {
  require(lattice_exact(), Errc::invalid_argument, "index action needs a lattice-exact chain");
  IntVec x = p;
  for (const auto& leg : legs_) {
    const auto& m = std::get<LatticeMap>(leg.map);
    x = leg.inverted ? m.apply_inverse(x) : m.apply(x);
  }
  return x;
}

IntVec Diffeo::apply_index_inverse(const IntVec& q) const { return inverse().apply_index(q); }

LatticeMap Diffeo::fused_lattice() const {
  require(lattice_exact(), Errc::invalid_argument, "fusion needs a lattice-exact chain");
  LatticeMap acc = LatticeMap::identity(dim_);
  for (const auto& leg : legs_) {
    const auto& m = std::get<LatticeMap>(leg.map);
    acc = LatticeMap::compose(leg.inverted ? m.inverse() : m, acc);
  }
  return acc;
}

namespace {

// Coordinate form of a lattice map: permuted axes must share spacing so the
// linear part is a pure signed permutation.
QuadraticMap lattice_coord_map(const LatticeMap& m, const std::vector<Rational>& spacing) {
  require(spacing.size() == static_cast<std::size_t>(m.dim()), Errc::invalid_argument,
          "spacing dimension mismatch");
  const int d = m.dim();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd c(d);
  for (int a = 0; a < d; ++a) {
    require(spacing[m.perm[a]] == spacing[a], Errc::invalid_argument,
            "permuted axes must share spacing for coordinate action");
    A(a, m.perm[a]) = static_cast<double>(m.sign[a]);
    c[a] = static_cast<double>(m.shift[a]) * spacing[a].to_double();
  }
  return QuadraticMap::affine(std::move(A), std::move(c));
}

QuadraticMap leg_coord_map(const Diffeo::Leg& leg, const std::vector<Rational>& spacing) {
  if (const auto* lm = std::get_if<LatticeMap>(&leg.map)) return lattice_coord_map(*lm, spacing);
  return std::get<QuadraticMap>(leg.map);
}

}  // namespace

Eigen::VectorXd Diffeo::apply(const Eigen::VectorXd& x, const std::vector<Rational>& spacing) const {
  Eigen::VectorXd v = x;
  for (const auto& leg : legs_) {
    const QuadraticMap m = leg_coord_map(leg, spacing);
    v = leg.inverted ? m.apply_inverse(v) : m.apply(v);
  }
  return v;
}

Eigen::VectorXd Diffeo::apply_inverse(const Eigen::VectorXd& q,
                                      const std::vector<Rational>& spacing) const {
  return inverse().apply(q, spacing);
}

Eigen::MatrixXd Diffeo::jacobian(const Eigen::VectorXd& x,
                                 const std::vector<Rational>& spacing) const {
  Eigen::MatrixXd J = Eigen::MatrixXd::Identity(dim_, dim_);
  Eigen::VectorXd v = x;
  for (const auto& leg : legs_) {
    const QuadraticMap m = leg_coord_map(leg, spacing);
    if (leg.inverted) {
      const Eigen::VectorXd pre = m.apply_inverse(v);
      const Eigen::MatrixXd Jm = m.jacobian(pre);
      const Eigen::FullPivLU<Eigen::MatrixXd> lu(Jm);
      require(lu.isInvertible(), Errc::not_invertible_on_patch, "singular leg Jacobian");
      J = lu.solve(J);
      v = pre;
    } else {
      J = m.jacobian(v) * J;
      v = m.apply(v);
    }
  }
  return J;
}

std::vector<Eigen::MatrixXd> Diffeo::hessian(const Eigen::VectorXd& x,
                                             const std::vector<Rational>& spacing) const {
  // Chain rule: for f after g, H_f∘g[mu] = Dg^T Hf[mu](g) Dg + sum_s Df[mu,s] Hg[s].
  const int d = dim_;
  std::vector<Eigen::MatrixXd> H(d, Eigen::MatrixXd::Zero(d, d));
  Eigen::MatrixXd J = Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd v = x;
  for (const auto& leg : legs_) {
    QuadraticMap m = leg_coord_map(leg, spacing);
    Eigen::VectorXd next;
    Eigen::MatrixXd Jm;
    std::vector<Eigen::MatrixXd> Hm(d);
    if (leg.inverted) {
      next = m.apply_inverse(v);
      const Eigen::MatrixXd Jf = m.jacobian(next);
      const Eigen::FullPivLU<Eigen::MatrixXd> lu(Jf);
      require(lu.isInvertible(), Errc::not_invertible_on_patch, "singular leg Jacobian");
      Jm = lu.inverse();
      // Second derivative of the inverse: -Jm^T B[s] Jm contracted with Jm.
      for (int mu = 0; mu < d; ++mu) {
        Hm[mu] = Eigen::MatrixXd::Zero(d, d);
        for (int s = 0; s < d; ++s) Hm[mu] -= Jm(mu, s) * (Jm.transpose() * m.B[s] * Jm);
      }
    } else {
      next = m.apply(v);
      Jm = m.jacobian(v);
      for (int mu = 0; mu < d; ++mu) Hm[mu] = m.B[mu];
    }
    std::vector<Eigen::MatrixXd> Hout(d);
    for (int mu = 0; mu < d; ++mu) {
      Hout[mu] = J.transpose() * Hm[mu] * J;
      for (int s = 0; s < d; ++s) Hout[mu] += Jm(mu, s) * H[s];
    }
    H = std::move(Hout);
    J = Jm * J;
    v = next;
  }
  return H;
}

// ----------------------------------------------------------- MinkowskiMetric

Eigen::MatrixXd MinkowskiMetric::matrix() const {
  Eigen::MatrixXd eta = Eigen::MatrixXd::Identity(dim, dim);
  eta(0, 0) = -1.0;
  return eta;
}

std::vector<double> MinkowskiMetric::flat() const {
  std::vector<double> out(static_cast<std::size_t>(dim) * dim, 0.0);
  for (int a = 0; a < dim; ++a) out[static_cast<std::size_t>(a) * dim + a] = a == 0 ? -1.0 : 1.0;
  return out;
}

// ---------------------------------------------------------- transform_tensor

std::vector<double> transform_tensor(std::span<const double> block, int contra, int cov, int dim,
                                     const Eigen::MatrixXd& J_fwd, const Eigen::MatrixXd& J_inv) {
  const int rank = contra + cov;
  const std::size_t size = tensor_block_size(dim, rank);
  require(block.size() == size, Errc::invalid_argument, "component block size mismatch");
  require(J_fwd.rows() == dim && J_fwd.cols() == dim && J_inv.rows() == dim && J_inv.cols() == dim,
          Errc::invalid_argument, "Jacobian shape mismatch");
  std::vector<double> cur(block.begin(), block.end());
  if (rank == 0) return cur;
  std::vector<double> next(size);
  std::size_t stride = size / static_cast<std::size_t>(dim);  // slot 0 stride
  for (int slot = 0; slot < rank; ++slot) {
    const bool is_contra = slot < contra;
    std::fill(next.begin(), next.end(), 0.0);
    // outer runs over indices before the slot, inner over indices after it
    const std::size_t outer = size / (stride * static_cast<std::size_t>(dim));
    for (std::size_t o = 0; o < outer; ++o)
      for (int anew = 0; anew < dim; ++anew)
        for (int aold = 0; aold < dim; ++aold) {
          const double f = is_contra ? J_fwd(anew, aold) : J_inv(aold, anew);
          if (f == 0.0) continue;
          const std::size_t src = (o * dim + static_cast<std::size_t>(aold)) * stride;
          const std::size_t dst = (o * dim + static_cast<std::size_t>(anew)) * stride;
          for (std::size_t i = 0; i < stride; ++i) next[dst + i] += f * cur[src + i];
        }
    cur.swap(next);
    stride /= static_cast<std::size_t>(dim);
  }
  return cur;
}

// --------------------------------------------------------------- pullback

namespace {

FieldConfig pullback_lattice(const Diffeo& phi, const FieldConfig& u) {
  const LatticeMap m = phi.fused_lattice();
  const auto& patch = u.patch();
  const int d = patch.dim();
  // Coordinate Jacobian of a spacing-compatible lattice map is the constant
  // signed permutation; lattice_coord_map also enforces the compatibility.
  const QuadraticMap coord = lattice_coord_map(m, patch.spacing());
  const Eigen::MatrixXd J = coord.A;
  const Eigen::MatrixXd Jinv = J.transpose();  // signed permutations are orthogonal

  std::vector<IntVec> new_sites;
  new_sites.reserve(patch.site_count());
  for (const auto& p : patch.sites()) new_sites.push_back(m.apply(p));
  LatticePatch out_patch = LatticePatch::from_sites(d, patch.spacing(), new_sites);

  std::map<std::string, TensorData> out_fields;
  for (const auto& [name, data] : u.fields()) {
    TensorData out{data.contra, data.cov, {}};
    const std::size_t bs = tensor_block_size(d, data.rank());
    out.comps.resize(patch.site_count() * bs);
    for (std::size_t i = 0; i < patch.site_count(); ++i) {
      const IntVec& p = patch.sites()[i];
      const std::size_t j = *out_patch.site_index(m.apply(p));
      if (data.rank() == 0) {
        out.comps[j] = data.comps[i];
        continue;
      }
      const auto tr = transform_tensor({data.comps.data() + i * bs, bs}, data.contra, data.cov, d,
                                       J, Jinv);
      std::copy(tr.begin(), tr.end(), out.comps.begin() + static_cast<std::ptrdiff_t>(j * bs));
    }
    out_fields.emplace(name, std::move(out));
  }
  return FieldConfig(std::move(out_patch), std::move(out_fields));
}

struct SamplePoint {
  bool exact = false;
  std::size_t exact_index = 0;
  std::vector<std::size_t> corner_index;  // 2^d corners
  std::vector<double> corner_weight;
};

std::optional<SamplePoint> try_locate(const LatticePatch& patch, const Eigen::VectorXd& x) {
  const int d = patch.dim();
  std::vector<double> t(d);
  for (int a = 0; a < d; ++a) t[a] = x[a] / patch.spacing()[a].to_double();
  IntVec snapped(d);
  bool on_site = true;
  for (int a = 0; a < d; ++a) {
    snapped[a] = static_cast<Int>(std::llround(t[a]));
    if (std::abs(t[a] - static_cast<double>(snapped[a])) >= 1e-9) on_site = false;
  }
  SamplePoint sp;
  if (on_site) {
    const auto idx = patch.site_index(snapped);
    if (!idx) return std::nullopt;
    sp.exact = true;
    sp.exact_index = *idx;
    return sp;
  }
  IntVec base(d);
  std::vector<double> frac(d);
  for (int a = 0; a < d; ++a) {
    base[a] = static_cast<Int>(std::floor(t[a]));
    frac[a] = t[a] - static_cast<double>(base[a]);
  }
  const std::size_t corners = std::size_t{1} << d;
  sp.corner_index.resize(corners);
  sp.corner_weight.resize(corners);
  IntVec site(d);
  for (std::size_t mask = 0; mask < corners; ++mask) {
    double w = 1.0;
    for (int a = 0; a < d; ++a) {
      const bool hi = (mask >> a) & 1u;
      site[a] = base[a] + (hi ? 1 : 0);
      w *= hi ? frac[a] : 1.0 - frac[a];
    }
    const auto idx = patch.site_index(site);
    if (!idx) return std::nullopt;
    sp.corner_index[mask] = *idx;
    sp.corner_weight[mask] = w;
  }
  return sp;
}

FieldConfig pullback_analytic(const Diffeo& phi, const FieldConfig& u) {
  const auto& patch = u.patch();
  const int d = patch.dim();

  // Output support is the image of the patch through phi at lattice
  // resolution: every site whose preimage cell interpolates inside the patch.
  // Forward images of the sites bound that set; quadratic sag between sampled
  // images stays far below one cell, so a two-site pad closes the box.
  IntVec lo(static_cast<std::size_t>(d), std::numeric_limits<Int>::max());
  IntVec hi(static_cast<std::size_t>(d), std::numeric_limits<Int>::min());
  for (const auto& s : patch.sites()) {
    const auto c = patch.coords_of(s);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(c.data(), d);
    const Eigen::VectorXd img = phi.apply(y, patch.spacing());
    for (int a = 0; a < d; ++a) {
      const double t = img[a] / patch.spacing()[a].to_double();
      lo[a] = std::min(lo[a], static_cast<Int>(std::floor(t)));
      hi[a] = std::max(hi[a], static_cast<Int>(std::ceil(t)));
    }
  }
  for (int a = 0; a < d; ++a) {
    lo[a] -= 2;
    hi[a] += 2;
  }

  std::vector<IntVec> kept;
  std::vector<SamplePoint> samples;
  std::vector<Eigen::MatrixXd> Js, Jinvs;
  IntVec site = lo;
  Eigen::VectorXd xq(d);
  for (;;) {
    for (int a = 0; a < d; ++a)
      xq[a] = static_cast<double>(site[a]) * patch.spacing()[a].to_double();
    const Eigen::VectorXd pre = phi.apply_inverse(xq, patch.spacing());
    if (auto sp = try_locate(patch, pre)) {
      const Eigen::MatrixXd J = phi.jacobian(pre, patch.spacing());
      const Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
      require(lu.isInvertible(), Errc::not_invertible_on_patch, "singular Jacobian on the patch");
      kept.push_back(site);
      samples.push_back(std::move(*sp));
      Js.push_back(J);
      Jinvs.push_back(lu.inverse());
    }
    int a = d - 1;
    while (a >= 0 && site[a] == hi[a]) {
      site[a] = lo[a];
      --a;
    }
    if (a < 0) break;
    ++site[a];
  }
  require(!kept.empty(), Errc::not_invertible_on_patch, "image of the patch misses the lattice");
  const std::size_t n = kept.size();
  LatticePatch out_patch = LatticePatch::from_sites(d, patch.spacing(), kept);
  // Odometer order is lexicographic, matching the canonical site order.
  require(out_patch.sites() == kept, Errc::invalid_argument, "image site enumeration out of order");
  std::map<std::string, TensorData> out_fields;
  std::vector<double> block;
  for (const auto& [name, data] : u.fields()) {
    TensorData out{data.contra, data.cov, {}};
    const std::size_t bs = tensor_block_size(d, data.rank());
    out.comps.resize(n * bs);
    for (std::size_t i = 0; i < n; ++i) {
      const SamplePoint& sp = samples[i];
      block.assign(bs, 0.0);
      if (sp.exact) {
        const double* src = data.comps.data() + sp.exact_index * bs;
        block.assign(src, src + bs);
      } else {
        for (std::size_t cidx = 0; cidx < sp.corner_index.size(); ++cidx) {
          const double w = sp.corner_weight[cidx];
          const double* src = data.comps.data() + sp.corner_index[cidx] * bs;
          for (std::size_t b = 0; b < bs; ++b) block[b] += w * src[b];
        }
      }
      if (data.rank() == 0) {
        out.comps[i] = block[0];
        continue;
      }
      const auto tr = transform_tensor({block.data(), bs}, data.contra, data.cov, d, Js[i],
                                       Jinvs[i]);
      std::copy(tr.begin(), tr.end(), out.comps.begin() + static_cast<std::ptrdiff_t>(i * bs));
    }
    out_fields.emplace(name, std::move(out));
  }
  return FieldConfig(std::move(out_patch), std::move(out_fields));
}

}  // namespace

FieldConfig pullback_config(const Diffeo& phi, const FieldConfig& u) {
  require(phi.dim() == u.patch().dim(), Errc::invalid_argument, "dimension mismatch");
  if (phi.lattice_exact()) return pullback_lattice(phi, u);
  return pullback_analytic(phi, u);
}

// ------------------------------------------------------------- christoffel

Eigen::MatrixXd metric_at(const FieldConfig& u, const IntVec& site) {
  const int d = u.patch().dim();
  const auto block = u.block_at(std::string(FieldConfig::kMetric), site);
  Eigen::MatrixXd g(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) g(a, b) = block[static_cast<std::size_t>(a) * d + b];
  return g;
}

std::vector<double> christoffel(const FieldConfig& u, const IntVec& site) {
  const auto& patch = u.patch();
  const int d = patch.dim();
  require(patch.contains_site(site), Errc::invalid_argument, "site outside the patch");
  require(patch.interior_site(site), Errc::boundary_site,
          "central differences need all axis neighbors");
  const Eigen::MatrixXd g = metric_at(u, site);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(g);
  require(lu.isInvertible(), Errc::singular_metric, "metric not invertible at site");
  const Eigen::MatrixXd ginv = lu.inverse();

  // dg[mu](s, n) = d_mu g_{sn}
  std::vector<Eigen::MatrixXd> dg(d);
  for (int mu = 0; mu < d; ++mu) {
    IntVec plus = site, minus = site;
    ++plus[mu];
    --minus[mu];
    const double h = patch.spacing()[mu].to_double();
    dg[mu] = (metric_at(u, plus) - metric_at(u, minus)) / (2.0 * h);
  }
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

// --------------------------------------------------------- minkowski_frame

Eigen::MatrixXd minkowski_frame(const Eigen::MatrixXd& g) {
  const int d = static_cast<int>(g.rows());
  require(d >= 2 && g.cols() == d, Errc::invalid_argument, "metric must be square, dim >= 2");
  const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
  require((g - g.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * scale, Errc::invalid_argument,
          "metric must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (g + g.transpose()));
  require(es.info() == Eigen::Success, Errc::invalid_argument, "eigendecomposition failed");
  const Eigen::VectorXd ev = es.eigenvalues();  // ascending
  int negatives = 0;
  for (int i = 0; i < d; ++i) {
    require(std::abs(ev[i]) > 1e-12 * scale, Errc::wrong_signature, "metric is degenerate");
    if (ev[i] < 0.0) ++negatives;
  }
  require(negatives == 1, Errc::wrong_signature, "metric signature is not (-,+,...,+)");

  struct Col {
    double eigenvalue;
    int argmax;
    Eigen::VectorXd v;
  };
  std::vector<Col> cols;
  cols.reserve(d);
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd v = es.eigenvectors().col(i) / std::sqrt(std::abs(ev[i]));
    int am = 0;
    for (int r = 1; r < d; ++r)
      if (std::abs(v[r]) > std::abs(v[am])) am = r;
    if (v[am] < 0.0) v = -v;
    cols.push_back(Col{ev[i], am, std::move(v)});
  }
  // Ascending eigenvalues put the single negative first already; ties among
  // positive columns break by largest-entry row.
  std::stable_sort(cols.begin(), cols.end(), [](const Col& a, const Col& b) {
    if (a.eigenvalue != b.eigenvalue) return a.eigenvalue < b.eigenvalue;
    return a.argmax < b.argmax;
  });
  Eigen::MatrixXd J(d, d);
  for (int i = 0; i < d; ++i) J.col(i) = cols[i].v;
  return J;
}

}  // namespace qatlas
