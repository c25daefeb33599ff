#include "qatlas/path_integral.hpp"

#include "qatlas/fresnel.hpp"

#include <cmath>
#include <numbers>
#include <thread>

namespace qatlas {

namespace {

constexpr double kPi = std::numbers::pi;

struct Kahan {
  double sum = 0.0, c = 0.0;
  void add(double v) {
    const double y = v - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

void ParticleModel::validate() const {
  require(mass > 0.0 && hbar > 0.0, Errc::invalid_argument, "mass and hbar must be positive");
  require(lattice.count >= 2, Errc::invalid_argument, "lattice needs at least 2 sites");
  require(lattice.dy.positive(), Errc::invalid_argument, "lattice spacing must be positive");
  require(slices >= 1, Errc::invalid_argument, "need at least one time step");
  require(dt.positive(), Errc::invalid_argument, "time step must be positive");
  if (potential == Potential::harmonic)
    require(omega > 0.0, Errc::invalid_argument, "harmonic potential needs omega > 0");
}

Int ParticleModel::index_of(double y) const {
  const double dy = lattice.dy.to_double();
  const double j = (y - lattice.y_min.to_double()) / dy;
  const Int ji = static_cast<Int>(std::llround(j));
  require(std::abs(j - static_cast<double>(ji)) <= 1e-6, Errc::invalid_argument,
          "endpoint is not a lattice point");
  require(ji >= 0 && ji < lattice.count, Errc::invalid_argument,
          "endpoint lies outside the lattice");
  return ji;
}

// ----------------------------------------------------------- enumerate_paths

std::vector<PathConfig> enumerate_paths(const ParticleModel& model, const BoundarySpec& boundary,
                                        std::size_t cap) {
  model.validate();
  const auto* pb = std::get_if<PathBoundary>(&boundary);
  require(pb != nullptr, Errc::invalid_argument, "path enumeration needs a path boundary");
  require(pb->j_i.has_value() && pb->j_f.has_value(), Errc::invalid_argument,
          "enumeration needs both endpoints fixed");
  const TimeSupport sup = model.support();
  require(sup.index_of_time(pb->t_i) == 0 && sup.index_of_time(pb->t_f) == model.slices,
          Errc::invalid_argument, "boundary times must span the model's time grid");
  const Int P = model.lattice.count;
  require(*pb->j_i >= 0 && *pb->j_i < P && *pb->j_f >= 0 && *pb->j_f < P, Errc::invalid_argument,
          "endpoint index outside the lattice");

  const Int interior = model.slices - 1;
  double count = 1.0;
  for (Int k = 0; k < interior; ++k) {
    count *= static_cast<double>(P);
    require(count <= static_cast<double>(cap), Errc::too_large,
            "path family exceeds the enumeration cap");
  }

  std::vector<PathConfig> out;
  out.reserve(static_cast<std::size_t>(count));
  std::vector<Int> values(static_cast<std::size_t>(model.slices) + 1);
  values.front() = *pb->j_i;
  values.back() = *pb->j_f;
  // Odometer over interior sites, last site fastest.
  std::vector<Int> digits(static_cast<std::size_t>(interior), 0);
  while (true) {
    for (Int k = 0; k < interior; ++k) values[static_cast<std::size_t>(k) + 1] = digits[k];
    out.emplace_back(sup, model.lattice, values);
    Int pos = interior - 1;
    while (pos >= 0 && ++digits[pos] == P) digits[pos--] = 0;
    if (pos < 0) break;
  }
  return out;
}

// -------------------------------------------------------------------- action

double action(const ParticleModel& model, const PathConfig& u) {
  require(u.support().single_interval(), Errc::disconnected_support,
          "action needs a single-interval path");
  const double dt = u.support().step().to_double();
  const auto& iv = u.support().intervals().front();
  Kahan s;
  for (Int k = iv.lo; k < iv.hi; ++k) {
    const double v = (u.y_at(k + 1) - u.y_at(k)) / dt;
    s.add((0.5 * model.mass * v * v - model.V(u.y_at(k))) * dt);
  }
  return s.sum;
}

// --------------------------------------------------------------- propagators

namespace {

// One stepping lattice shared by both evaluators: sites y_c(j) = y0 + j*dy,
// j in [0, P); the modeled window starts at index `offset`.
struct Stepper {
  std::size_t P = 0;
  double dy = 0.0;
  double y0 = 0.0;
  std::vector<Complex> kernel;   // kernel[d + P - 1], d = a - b
  std::vector<Complex> phase_v;  // per-source potential factor

  const Complex* kern0() const { return kernel.data() + (P - 1); }

  // psi_out[a] = sum_b kernel[a-b] * (phase_v[b] * psi_in[b]), compensated,
  // ascending b. Row blocks may run concurrently; each row is independent.
  void step(const std::vector<Complex>& in, std::vector<Complex>& out,
            std::vector<Complex>& scratch, int threads) const {
    for (std::size_t b = 0; b < P; ++b) scratch[b] = phase_v[b] * in[b];
    const Complex* k0 = kern0();
    const Complex* t = scratch.data();
    auto rows = [&](std::size_t a_lo, std::size_t a_hi) {
      for (std::size_t a = a_lo; a < a_hi; ++a) {
        const Complex* krow = k0 + a;
        double sr = 0.0, si = 0.0, cr = 0.0, ci = 0.0;
        for (std::size_t b = 0; b < P; ++b) {
          const Complex k = krow[-static_cast<std::ptrdiff_t>(b)];
          const double vr = k.real() * t[b].real() - k.imag() * t[b].imag();
          const double vi = k.real() * t[b].imag() + k.imag() * t[b].real();
          double y = vr - cr;
          double s = sr + y;
          cr = (s - sr) - y;
          sr = s;
          y = vi - ci;
          s = si + y;
          ci = (s - si) - y;
          si = s;
        }
        out[a] = Complex{sr, si};
      }
    };
    if (threads <= 1 || P < 256) {
      rows(0, P);
      return;
    }
    const std::size_t n = static_cast<std::size_t>(threads);
    std::vector<std::thread> pool;
    pool.reserve(n);
    const std::size_t chunk = (P + n - 1) / n;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t lo = i * chunk;
      if (lo >= P) break;
      pool.emplace_back(rows, lo, std::min(lo + chunk, P));
    }
    for (auto& th : pool) th.join();
  }
};

std::vector<Complex> evolve(const ParticleModel& model, const Stepper& st, std::size_t j_src,
                            int threads) {
  std::vector<Complex> psi(st.P, Complex{0.0, 0.0});
  std::vector<Complex> next(st.P);
  std::vector<Complex> scratch(st.P);
  psi[j_src] = Complex{1.0, 0.0};
  for (Int n = 0; n < model.slices; ++n) {
    st.step(psi, next, scratch, threads);
    psi.swap(next);
  }
  const double scale = std::pow(st.dy, static_cast<double>(model.slices - 1));
  for (auto& v : psi) v *= scale;
  return psi;
}

Stepper make_direct_stepper(const ParticleModel& model) {
  Stepper st;
  st.P = static_cast<std::size_t>(model.lattice.count);
  st.dy = model.lattice.dy.to_double();
  st.y0 = model.lattice.y_min.to_double();
  const double dt = model.dt.to_double();
  const double pref_mod = std::sqrt(model.mass / (2.0 * kPi * model.hbar * dt));
  const Complex pref = pref_mod * std::polar(1.0, -kPi / 4.0);
  const Int Pm1 = static_cast<Int>(st.P) - 1;
  st.kernel.resize(2 * st.P - 1);
  for (Int d = -Pm1; d <= Pm1; ++d) {
    const double dist = static_cast<double>(d) * st.dy;
    st.kernel[static_cast<std::size_t>(d + Pm1)] =
        pref * std::polar(1.0, model.mass * dist * dist / (2.0 * model.hbar * dt));
  }
  st.phase_v.resize(st.P);
  for (std::size_t b = 0; b < st.P; ++b) {
    const double y = st.y0 + static_cast<double>(b) * st.dy;
    st.phase_v[b] = std::polar(1.0, -model.V(y) * dt / model.hbar);
  }
  return st;
}

Stepper make_band_limited_stepper(const ParticleModel& model, const BandLimitedOptions& opts,
                                  std::size_t* offset_out) {
  const double dy = model.lattice.dy.to_double();
  const double dt = model.dt.to_double();
  const double q_c = kPi / dy;
  const double window = dy * static_cast<double>(model.lattice.count - 1);
  double guard = model.hbar * q_c * model.duration() / model.mass * opts.guard_scale + 0.1 * window;
  if (opts.guard_halfwidth) guard = *opts.guard_halfwidth;
  require(guard >= 0.0, Errc::invalid_argument, "guard width must be nonnegative");
  const Int guard_sites = static_cast<Int>(std::ceil(guard / dy - 1e-12));
  const Int Pc = model.lattice.count + 2 * guard_sites;
  require(Pc <= 65536, Errc::too_large, "padded stepping lattice too large");

  Stepper st;
  st.P = static_cast<std::size_t>(Pc);
  st.dy = dy;
  st.y0 = model.lattice.y_min.to_double() - static_cast<double>(guard_sites) * dy;
  *offset_out = static_cast<std::size_t>(guard_sites);

  // Band-limited free kernel: (1/2pi) e^{i m d^2/(2 hbar dt)} * F,
  // F = integral of e^{-i alpha u^2} over [-q_c - s, q_c - s],
  // alpha = hbar dt / (2 m), s = m d / (hbar dt).
  const double alpha = model.hbar * dt / (2.0 * model.mass);
  const Int Pm1 = Pc - 1;
  st.kernel.resize(static_cast<std::size_t>(2 * Pc - 1));
  for (Int d = -Pm1; d <= Pm1; ++d) {
    const double dist = static_cast<double>(d) * dy;
    const double s = model.mass * dist / (model.hbar * dt);
    const Complex band = gauss_band_integral(-q_c - s, q_c - s, alpha);
    st.kernel[static_cast<std::size_t>(d + Pm1)] =
        band * std::polar(1.0 / (2.0 * kPi), model.mass * dist * dist / (2.0 * model.hbar * dt));
  }
  st.phase_v.resize(st.P);
  for (std::size_t b = 0; b < st.P; ++b) {
    const double y = st.y0 + static_cast<double>(b) * dy;
    st.phase_v[b] = std::polar(1.0, -model.V(y) * dt / model.hbar);
  }
  return st;
}

void check_caps(const ParticleModel& model) {
  model.validate();
  require(model.lattice.count <= kMaxSites, Errc::too_large, "lattice exceeds the site cap");
  require(model.slices <= kMaxSlices, Errc::too_large, "time grid exceeds the slice cap");
}

}  // namespace

std::vector<Complex> propagator_direct_column(const ParticleModel& model, double y_i) {
  check_caps(model);
  const Stepper st = make_direct_stepper(model);
  return evolve(model, st, static_cast<std::size_t>(model.index_of(y_i)), 1);
}

Complex propagator_direct(const ParticleModel& model, double y_i, double y_f) {
  const auto col = propagator_direct_column(model, y_i);
  return col[static_cast<std::size_t>(model.index_of(y_f))];
}

std::vector<Complex> propagator_band_limited_column(const ParticleModel& model, double y_i,
                                                    const BandLimitedOptions& opts) {
  check_caps(model);
  require(opts.threads >= 1 && opts.threads <= 64, Errc::invalid_argument,
          "thread count must be in [1, 64]");
  std::size_t offset = 0;
  const Stepper st = make_band_limited_stepper(model, opts, &offset);
  const auto full =
      evolve(model, st, offset + static_cast<std::size_t>(model.index_of(y_i)), opts.threads);
  return {full.begin() + static_cast<std::ptrdiff_t>(offset),
          full.begin() + static_cast<std::ptrdiff_t>(offset + model.lattice.count)};
}

Complex propagator_band_limited(const ParticleModel& model, double y_i, double y_f,
                                const BandLimitedOptions& opts) {
  const auto col = propagator_band_limited_column(model, y_i, opts);
  return col[static_cast<std::size_t>(model.index_of(y_f))];
}

// -------------------------------------------------------- analytic oracles

Complex analytic_propagator(const ParticleModel& model, double y_i, double y_f) {
  model.validate();
  const double T = model.duration();
  const double m = model.mass, hb = model.hbar;
  if (model.potential == Potential::zero) {
    const double mod = std::sqrt(m / (2.0 * kPi * hb * T));
    const double d = y_f - y_i;
    return mod * std::polar(1.0, m * d * d / (2.0 * hb * T) - kPi / 4.0);
  }
  const double w = model.omega;
  const double sin_wt = std::sin(w * T);
  require(std::abs(sin_wt) >= 1e-12, Errc::caustic_encountered,
          "harmonic propagator is singular at omega*T = k*pi");
  // Maslov phase: an extra -pi/2 per half period crossed.
  const double n = std::floor(w * T / kPi);
  const double mod = std::sqrt(m * w / (2.0 * kPi * hb * std::abs(sin_wt)));
  const double phase =
      m * w * ((y_i * y_i + y_f * y_f) * std::cos(w * T) - 2.0 * y_i * y_f) / (2.0 * hb * sin_wt) -
      kPi / 4.0 - n * kPi / 2.0;
  return mod * std::polar(1.0, phase);
}

}  // namespace qatlas
