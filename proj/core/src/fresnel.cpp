#include "qatlas/fresnel.hpp"

#include "qatlas/errors.hpp"

#include <cmath>
#include <numbers>

namespace qatlas {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

// C + iS = sum_n (i pi/2)^n x^(2n+1) / (n! (2n+1)); converges fast for |x| < 1.5.
cplx fresnel_series(double x) {
  const cplx a(0.0, kPi / 2.0);
  cplx power = x;  // (i pi/2)^n x^(2n+1) / n!
  cplx sum = power;
  const double xx = x * x;
  for (int n = 1; n < 80; ++n) {
    power *= a * xx / static_cast<double>(n);
    const cplx term = power / static_cast<double>(2 * n + 1);
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

// erfc(z) = e^{-z^2} / (sqrt(pi) * (z + (1/2)/(z + 1/(z + (3/2)/(z + ...)))))
// for Re z > 0; evaluated with the modified Lentz method. With
// z = (sqrt(pi)/2)(1-i)x this yields C + iS = (1+i)/2 * (1 - erfc(z)).
cplx fresnel_cf(double x) {
  const cplx z = (std::sqrt(kPi) / 2.0) * cplx(1.0, -1.0) * x;
  constexpr double tiny = 1e-300;
  cplx f = z;
  cplx c = f;
  cplx d = 0.0;
  for (int k = 1; k < 300; ++k) {
    const double ak = 0.5 * k;
    d = z + ak * d;
    if (std::abs(d) < tiny) d = tiny;
    c = z + ak / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const cplx delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  const cplx erfc = std::exp(-z * z) / (std::sqrt(kPi) * f);
  return cplx(0.5, 0.5) * (1.0 - erfc);
}

}  // namespace

std::complex<double> fresnel_cs(double x) {
  require(std::isfinite(x), Errc::invalid_argument, "fresnel of non-finite argument");
  const double ax = std::abs(x);
  const cplx v = ax < 1.5 ? fresnel_series(ax) : fresnel_cf(ax);
  return x < 0.0 ? -v : v;
}

double fresnel_c(double x) { return fresnel_cs(x).real(); }
double fresnel_s(double x) { return fresnel_cs(x).imag(); }

std::complex<double> gauss_band_integral(double a, double b, double alpha) {
  require(alpha > 0.0, Errc::invalid_argument, "gauss_band_integral needs alpha > 0");
  // u = t / c with c = sqrt(2 alpha / pi) maps the integrand onto conj(e^{i pi t^2/2}).
  const double c = std::sqrt(2.0 * alpha / kPi);
  const std::complex<double> diff = fresnel_cs(b * c) - fresnel_cs(a * c);
  return std::conj(diff) / c;
}

}  // namespace qatlas
