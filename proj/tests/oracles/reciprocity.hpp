#pragma once

// Test-only oracle: far-field pattern of a vertical dipole by reciprocity.
//
// A p-polarized plane wave of unit electric amplitude arrives from direction
// theta in the outer medium; the field is solved with a plain 2x2 transfer
// matrix over absolute interface positions and E_z is read off at the dipole.
// Reciprocity gives dP/dOmega proportional to n_out |E_z|^2 with one constant
// shared by both half-spaces. Nothing here uses the library's recursion.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "antenna/stack.hpp"

namespace oracle {

using cplx = std::complex<double>;

inline cplx kz_of(double n, double kp, double k0) {
  const cplx v = std::sqrt(cplx{(k0 * n) * (k0 * n) - kp * kp, 0.0});
  return v.imag() < 0.0 ? -v : v;
}

/// Unnormalized dP/dtheta by reciprocity.
inline double reciprocity_density(const antenna::LayerStack& s, bool lower, double theta) {
  const double k0 = s.k0();
  const std::size_t R = s.layers.size() + 2;
  std::vector<double> n(R), z(R, 0.0);  // z[j] = bottom boundary of region j (j >= 1)
  for (std::size_t j = 0; j < R; ++j) n[j] = s.region_index(j);
  for (std::size_t j = 2; j < R; ++j) z[j] = z[j - 1] + s.layers[j - 2].thickness_nm;
  const double z0 = z[s.emitter_layer + 1] + s.emitter_height_nm;

  const double nout = lower ? n[0] : n[R - 1];
  const double kp = k0 * nout * std::sin(theta);
  std::vector<cplx> kzv(R);
  for (std::size_t j = 0; j < R; ++j) kzv[j] = kz_of(n[j], kp, k0);

  // H_y = A e^{i kz (z - zr)} + B e^{-i kz (z - zr)}, zr a reference point per region.
  // Continuity of H_y and (kz / n^2)(A e - B e) across each interface.
  std::vector<cplx> A(R), B(R);
  auto zref = [&](std::size_t j) { return j == 0 ? z[1] : z[j]; };
  if (lower) {
    // Incident from the substrate travelling up (+z); only outgoing (+z) wave on top.
    A[R - 1] = 1.0;
    B[R - 1] = 0.0;
    for (std::size_t j = R - 1; j >= 1; --j) {
      const double zi = z[j];  // interface between j-1 and j
      const cplx e_up = std::exp(cplx{0, 1} * kzv[j] * (zi - zref(j)));
      const cplx e_dn = std::exp(-cplx{0, 1} * kzv[j] * (zi - zref(j)));
      const cplx H = A[j] * e_up + B[j] * e_dn;
      const cplx F = kzv[j] / (n[j] * n[j]) * (A[j] * e_up - B[j] * e_dn);
      const cplx g = kzv[j - 1] / (n[j - 1] * n[j - 1]);
      const cplx fu = std::exp(cplx{0, 1} * kzv[j - 1] * (zi - zref(j - 1)));
      const cplx fd = std::exp(-cplx{0, 1} * kzv[j - 1] * (zi - zref(j - 1)));
      A[j - 1] = 0.5 * (H + F / g) / fu;
      B[j - 1] = 0.5 * (H - F / g) / fd;
    }
  } else {
    // Incident from the superstrate travelling down; only outgoing (-z) wave in the substrate.
    A[0] = 0.0;
    B[0] = 1.0;
    for (std::size_t j = 0; j + 1 < R; ++j) {
      const double zi = z[j + 1];
      const cplx e_up = std::exp(cplx{0, 1} * kzv[j] * (zi - zref(j)));
      const cplx e_dn = std::exp(-cplx{0, 1} * kzv[j] * (zi - zref(j)));
      const cplx H = A[j] * e_up + B[j] * e_dn;
      const cplx F = kzv[j] / (n[j] * n[j]) * (A[j] * e_up - B[j] * e_dn);
      const cplx g = kzv[j + 1] / (n[j + 1] * n[j + 1]);
      const cplx fu = std::exp(cplx{0, 1} * kzv[j + 1] * (zi - zref(j + 1)));
      const cplx fd = std::exp(-cplx{0, 1} * kzv[j + 1] * (zi - zref(j + 1)));
      A[j + 1] = 0.5 * (H + F / g) / fu;
      B[j + 1] = 0.5 * (H - F / g) / fd;
    }
  }
  const cplx h_inc = lower ? A[0] : B[R - 1];
  const std::size_t e = s.emitter_layer + 1;
  const cplx h0 = A[e] * std::exp(cplx{0, 1} * kzv[e] * (z0 - zref(e))) +
                  B[e] * std::exp(-cplx{0, 1} * kzv[e] * (z0 - zref(e)));
  // Unit incident E amplitude means incident H proportional to n_out; E_z ~ kp H / n_e^2.
  const double ne = n[e];
  const double ez2 = std::norm(h0 / h_inc) * (nout * nout) * (kp * kp) / (ne * ne * ne * ne);
  return 2.0 * std::numbers::pi * std::sin(theta) * nout * ez2;
}

/// Brute-force totals from the reciprocity density: composite 3-point
/// Gauss-Legendre on `panels` equal panels, no adaptivity.
struct OracleSplit {
  double lower_total;
  double upper_total;
  double lower_in_cone;
};

inline double brute_integral(const antenna::LayerStack& s, bool lower, double b, int panels) {
  const double g = std::sqrt(0.6);
  const double h = b / panels;
  double acc = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double c = (i + 0.5) * h;
    acc += (5.0 * reciprocity_density(s, lower, c - g * 0.5 * h) +
            8.0 * reciprocity_density(s, lower, c) +
            5.0 * reciprocity_density(s, lower, c + g * 0.5 * h)) / 18.0 * h;
  }
  return acc;
}

inline OracleSplit reciprocity_split(const antenna::LayerStack& s, double cone, int panels) {
  const double half_pi = 0.5 * std::numbers::pi;
  return {brute_integral(s, true, half_pi, panels), brute_integral(s, false, half_pi, panels),
          brute_integral(s, true, cone, panels)};
}

}  // namespace oracle
