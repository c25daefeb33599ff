#pragma once

#include <complex>

namespace qatlas {

// Fresnel integrals, standard normalization:
//   C(x) = int_0^x cos(pi t^2 / 2) dt,  S(x) = int_0^x sin(pi t^2 / 2) dt.
// Power series below |x| = 1.5, complex erfc continued fraction above; relative
// accuracy ~1e-14 over the real line.
std::complex<double> fresnel_cs(double x);  // C(x) + i S(x)
double fresnel_c(double x);
double fresnel_s(double x);

// int_a^b exp(-i alpha u^2) du for alpha > 0, in closed form via fresnel_cs.
std::complex<double> gauss_band_integral(double a, double b, double alpha);

}  // namespace qatlas
