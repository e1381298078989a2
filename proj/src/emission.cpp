#include "antenna/emission.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "antenna/errors.hpp"
#include "antenna/parallel.hpp"

namespace antenna {

namespace {

constexpr double half_pi = 0.5 * std::numbers::pi;

Side side_of(Hemisphere h) { return h == Hemisphere::lower ? Side::down : Side::up; }

double outer_index(const LayerStack& s, Hemisphere h) {
  return h == Hemisphere::lower ? s.substrate.index : s.superstrate.index;
}

// Source-dressing factor F = (1 + a_up)(1 + a_down) / (1 - a_up a_down).
cplx cavity_factor(const LayerStack& stack, double kp) {
  const auto wave = plane_wave_state(stack, kp);
  const cplx au = round_trip_reflection(stack, Side::up, wave);
  const cplx ad = round_trip_reflection(stack, Side::down, wave);
  return (1.0 + au) * (1.0 + ad) / (1.0 - au * ad);
}

double density_at(const LayerStack& stack, Hemisphere half_space, double theta) {
  const double k0 = stack.k0();
  const double ne = stack.emitter_index();
  const double nout = outer_index(stack, half_space);
  const std::size_t outer = half_space == Hemisphere::lower ? 0 : stack.region_count() - 1;
  const auto wave = plane_wave_state_at_angle(stack, outer, theta);
  const double u = nout * std::sin(theta) / ne;
  const cplx qe = wave.kz_per_region[stack.emitter_layer + 1] / (k0 * ne);

  const Side side = side_of(half_space);
  const Side other = side == Side::up ? Side::down : Side::up;
  const cplx a_side = round_trip_reflection(stack, side, wave);
  const cplx a_other = round_trip_reflection(stack, other, wave);
  const auto resp = side_response(stack, side, wave);
  // Field leaving the emitter toward `side`, per unit source amplitude, carried to the outer medium.
  const cplx out = (1.0 + a_other) / (1.0 - a_side * a_other) *
                   std::exp(cplx{0.0, 1.0} * qe * (k0 * ne) * emitter_gap(stack, side)) *
                   resp.transmission;

  // p-wave z-flux in the outer medium relative to the emitter medium: Re(kz/n^2).
  const double q_out = nout * std::cos(theta) / ne;
  const double flux = q_out * (ne * ne) / (nout * nout);
  const double dP_du = 0.75 * u * u * u / std::norm(qe) * std::norm(out) * flux;
  const double du_dtheta = q_out;
  return dP_du * du_dtheta;
}

std::vector<double> region_indices(const LayerStack& s) {
  std::vector<double> v;
  for (std::size_t r = 0; r < s.region_count(); ++r) v.push_back(s.region_index(r));
  return v;
}

void require_converged(const quad::Result& r, const char* what) {
  if (!r.converged)
    throw NumericalAccuracyError(std::string(what) + ": adaptive quadrature did not converge",
                                 r.error / std::max(std::abs(r.value), 1e-300));
}

}  // namespace

double ObjectiveGeometry::max_angle() const {
  validate();
  return std::asin(numerical_aperture / immersion_index);
}

void ObjectiveGeometry::validate() const {
  if (!(numerical_aperture > 0.0 && numerical_aperture < immersion_index))
    throw InvalidObjective("numerical aperture " + std::to_string(numerical_aperture) +
                           " must lie in (0, immersion index " +
                           std::to_string(immersion_index) + ")");
}

double far_field_density(const LayerStack& stack, Hemisphere half_space, double theta) {
  const double ne = stack.emitter_index();
  const double nout = outer_index(stack, half_space);
  theta = std::clamp(theta, 0.0, half_pi - 1e-9);
  // Where kp = k0 n_e inside the half-space, the source amplitude and the
  // interface transmission form 0/0; the density is continuous there, so
  // average two points straddling it.
  if (nout > ne) {
    const double q2 = (ne - nout) * (ne + nout) + std::pow(nout * std::cos(theta), 2);
    if (std::abs(q2) < 1e-12 * ne * ne) {
      const double dtheta = 5e-11 * ne / (nout * std::cos(theta));
      return 0.5 * (density_at(stack, half_space, theta - dtheta) +
                    density_at(stack, half_space, theta + dtheta));
    }
  }
  return density_at(stack, half_space, theta);
}

double far_field_power(const LayerStack& stack, Hemisphere half_space, double max_angle,
                       const quad::Options& opt) {
  const double nout = outer_index(stack, half_space);
  std::vector<double> breaks;
  for (double n : region_indices(stack))
    if (n < nout) breaks.push_back(std::asin(n / nout));
  const auto r = quad::integrate(
      [&](double th) { return far_field_density(stack, half_space, th); }, 0.0, max_angle,
      breaks, opt);
  require_converged(r, "far-field integral");
  return r.value;
}

double dissipated_power(const LayerStack& stack, const quad::Options& opt) {
  require_valid(stack);
  const double k0 = stack.k0();
  const double ne = stack.emitter_index();
  const auto indices = region_indices(stack);

  // Propagating in the emitter layer: kp = k0 ne sin(phi), integrand (3/2) sin^3 Re F.
  std::vector<double> breaks;
  for (double n : indices)
    if (n < ne) breaks.push_back(std::asin(n / ne));
  const auto prop = quad::integrate(
      [&](double phi) {
        const double s = std::sin(phi);
        return 1.5 * s * s * s * cavity_factor(stack, k0 * ne * s).real();
      },
      0.0, half_pi, breaks, opt);
  require_converged(prop, "dissipated power (propagating part)");

  const double nmax = stack.max_index();
  double evan = 0.0;
  if (nmax > ne) evan = evanescent_tail(stack, ne, nmax, opt);
  return prop.value + evan;
}

double evanescent_tail(const LayerStack& stack, double lo_index, double hi_index,
                       const quad::Options& opt) {
  const double k0 = stack.k0();
  const double ne = stack.emitter_index();
  if (lo_index < ne || hi_index <= lo_index) return 0.0;
  // kp = k0 ne cosh(s): u^3/q du = -i cosh^3(s) ds, so Re(...) = cosh^3 Im F.
  std::vector<double> breaks;
  for (double n : region_indices(stack))
    if (n > lo_index && n < hi_index) breaks.push_back(std::acosh(n / ne));
  const double s_lo = std::acosh(lo_index / ne);
  const double s_hi = std::acosh(hi_index / ne);
  quad::Options o = opt;
  // The whole tail may be tiny compared with the total, so bound it absolutely.
  o.abs_tol = std::max(o.abs_tol, 1e-13);
  const auto r = quad::integrate(
      [&](double s) {
        const double c = std::cosh(s);
        return 1.5 * c * c * c * cavity_factor(stack, k0 * ne * c).imag();
      },
      s_lo, s_hi, breaks, o);
  require_converged(r, "dissipated power (evanescent part)");
  return r.value;
}

RadiatedPower total_radiated_power(const LayerStack& stack, const quad::Options& opt) {
  require_valid(stack);
  RadiatedPower p;
  p.total_normalized = dissipated_power(stack, opt);
  const double lower = far_field_power(stack, Hemisphere::lower, half_pi, opt);
  const double upper = far_field_power(stack, Hemisphere::upper, half_pi, opt);
  p.far_field_total = lower + upper;
  if (!(p.far_field_total > 0.0))
    throw NumericalAccuracyError("no power reaches the far field", p.far_field_total);
  p.lower_fraction = lower / p.far_field_total;
  p.upper_fraction = upper / p.far_field_total;
  return p;
}

AngularSpectrum angular_density(const LayerStack& stack, Hemisphere half_space,
                                double angle_grid_resolution) {
  require_valid(stack);
  if (!(angle_grid_resolution > 0.0 && angle_grid_resolution <= 0.05))
    throw ContractViolation("angle grid resolution must lie in (0, 0.05] rad");

  const double total = far_field_power(stack, Hemisphere::lower, half_pi) +
                       far_field_power(stack, Hemisphere::upper, half_pi);
  if (!(total > 0.0)) throw NumericalAccuracyError("no power reaches the far field", total);

  AngularSpectrum s;
  s.half_space = half_space;
  s.medium_index = outer_index(stack, half_space);
  const double nout = s.medium_index;
  auto f = [&](double th) { return far_field_density(stack, half_space, th) / total; };

  // Panel boundaries: multiples of four grid steps plus every critical angle,
  // where the density has a kink.
  std::vector<double> bounds;
  const auto base = static_cast<std::size_t>(std::ceil(half_pi / (4.0 * angle_grid_resolution)));
  for (std::size_t k = 0; k < base; ++k) bounds.push_back(static_cast<double>(k) * 4.0 * angle_grid_resolution);
  bounds.push_back(half_pi);
  for (std::size_t r = 0; r < stack.region_count(); ++r) {
    const double n = stack.region_index(r);
    if (n < nout) bounds.push_back(std::asin(n / nout));
  }
  std::sort(bounds.begin(), bounds.end());
  bounds.erase(std::unique(bounds.begin(), bounds.end(),
                           [](double a, double b) { return b - a < 1e-12; }),
               bounds.end());

  // Each panel is refined independently; outputs are joined in order, so the
  // grid does not depend on the worker count.
  const double tol_per_rad = 15.0 * 1e-9 / half_pi;
  std::vector<std::vector<std::pair<double, double>>> pieces(bounds.size() - 1);
  parallel_for(pieces.size(), [&](std::size_t k) {
    auto& out = pieces[k];
    std::function<void(double, double, double, double, double, int)> refine =
        [&](double a, double b, double fa, double fm, double fb, int depth) {
          const double m = 0.5 * (a + b);
          const double l = 0.5 * (a + m), r = 0.5 * (m + b);
          const double fl = f(l), fr = f(r);
          const double coarse = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
          const double fine = (b - a) / 12.0 * (fa + 4.0 * fl + 2.0 * fm + 4.0 * fr + fb);
          if (depth >= 10 || std::abs(fine - coarse) <= tol_per_rad * (b - a)) {
            out.insert(out.end(), {{a, fa}, {l, fl}, {m, fm}, {r, fr}});
            return;
          }
          refine(a, m, fa, fl, fm, depth + 1);
          refine(m, b, fm, fr, fb, depth + 1);
        };
    const double a = bounds[k], b = bounds[k + 1];
    refine(a, b, f(a), f(0.5 * (a + b)), f(b), 0);
  });
  for (const auto& piece : pieces)
    for (const auto& [th, d] : piece) {
      s.angles.push_back(th);
      s.density.push_back(d);
    }
  s.angles.push_back(half_pi);
  s.density.push_back(f(half_pi));
  return s;
}

double integrate_samples(const std::vector<double>& x, const std::vector<double>& y,
                         double upto) {
  const std::size_t n = x.size();
  if (n == 0 || upto <= x.front()) return 0.0;
  if (n == 1) return 0.0;
  if (n == 2) {
    const double b = std::min(upto, x[1]);
    const double slope = (y[1] - y[0]) / (x[1] - x[0]);
    return (b - x[0]) * (y[0] + 0.5 * slope * (b - x[0]));
  }
  // Exact integral over [a, b] of the quadratic through three samples.
  auto quad3 = [&](std::size_t i, double a, double b) {
    const double x0 = x[i], x1 = x[i + 1], x2 = x[i + 2];
    const double d1 = (y[i + 1] - y[i]) / (x1 - x0);
    const double d2 = ((y[i + 2] - y[i + 1]) / (x2 - x1) - d1) / (x2 - x0);
    auto prim = [&](double v) {
      const double w = v - x0;
      return y[i] * w + 0.5 * d1 * w * w + d2 * (w * w * w / 3.0 - 0.5 * (x1 - x0) * w * w);
    };
    return prim(b) - prim(a);
  };
  quad::KahanSum sum;
  std::size_t i = 0;
  while (i + 2 < n && x[i + 2] <= upto) {
    sum.add(quad3(i, x[i], x[i + 2]));
    i += 2;
  }
  if (x[i] < upto) {
    const std::size_t base = std::min(i, n - 3);
    sum.add(quad3(base, x[i], upto));
  }
  return sum.value();
}

double spectrum_integral(const AngularSpectrum& s, double max_angle) {
  return integrate_samples(s.angles, s.density, max_angle);
}

double collection_efficiency(const AngularSpectrum& lower, const AngularSpectrum& upper,
                             const ObjectiveGeometry& objective) {
  objective.validate();
  if (lower.half_space != Hemisphere::lower || upper.half_space != Hemisphere::upper)
    throw ContractViolation("collection_efficiency expects (lower, upper) spectra");
  if (std::abs(objective.immersion_index - lower.medium_index) > 1e-12)
    throw InvalidObjective("objective immersion index " + std::to_string(objective.immersion_index) +
                           " differs from the lower medium index " +
                           std::to_string(lower.medium_index));
  const double eta = spectrum_integral(lower, objective.max_angle());
  return std::clamp(eta, 0.0, 1.0);
}

double collection_efficiency(const LayerStack& stack, const ObjectiveGeometry& objective,
                             const quad::Options& opt) {
  require_valid(stack);
  objective.validate();
  if (std::abs(objective.immersion_index - stack.substrate.index) > 1e-12)
    throw InvalidObjective("objective immersion index differs from the substrate index");
  const double lower_total = far_field_power(stack, Hemisphere::lower, half_pi, opt);
  const double upper_total = far_field_power(stack, Hemisphere::upper, half_pi, opt);
  const double collected = far_field_power(stack, Hemisphere::lower, objective.max_angle(), opt);
  return std::clamp(collected / (lower_total + upper_total), 0.0, 1.0);
}

std::vector<Lobe> find_lobes(const AngularSpectrum& spectrum, double min_prominence) {
  if (!(min_prominence > 0.0 && min_prominence < 1.0))
    throw ContractViolation("min_prominence must lie in (0, 1)");
  const auto& d = spectrum.density;
  const std::size_t n = d.size();
  if (n == 0) throw ContractViolation("find_lobes on an empty spectrum");
  std::vector<Lobe> lobes;
  if (n < 3) return lobes;
  const double peak = *std::max_element(d.begin(), d.end());
  if (!(peak > 0.0)) return lobes;
  const double need = min_prominence * peak;

  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(d[i] > d[i - 1] && d[i] > d[i + 1])) continue;
    // Lowest point between the peak and the nearest strictly higher sample (or the end).
    double left_min = d[i];
    for (std::size_t j = i; j-- > 0;) {
      if (d[j] > d[i]) break;
      left_min = std::min(left_min, d[j]);
    }
    double right_min = d[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      if (d[j] > d[i]) break;
      right_min = std::min(right_min, d[j]);
    }
    if (d[i] - std::max(left_min, right_min) >= need)
      lobes.push_back({spectrum.angles[i], d[i]});
  }
  return lobes;
}

}  // namespace antenna
