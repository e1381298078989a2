#include "antenna/bfp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

// Boost 1.74 pchip calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>

#include "antenna/errors.hpp"
#include "antenna/parallel.hpp"
#include "antenna/quadrature.hpp"

namespace antenna {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

/// Areal density at unit focal length from dP/dtheta.
double areal_from_angular(double g, double theta, double n1) {
  return g / (two_pi * n1 * n1 * std::sin(theta) * std::cos(theta));
}

/// Trapezoid weights for a strictly increasing grid.
std::vector<double> trapezoid_weights(const std::vector<double>& x) {
  std::vector<double> w(x.size(), 0.0);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double h = 0.5 * (x[i + 1] - x[i]);
    w[i] += h;
    w[i + 1] += h;
  }
  return w;
}

/// Fills intensity at rho = 0 by linear extrapolation of the next two samples.
void fill_axis_limit(BfpProfile& p) {
  if (p.na_coordinate.size() < 3 || p.na_coordinate.front() != 0.0) return;
  const double x1 = p.na_coordinate[1], x2 = p.na_coordinate[2];
  const double y1 = p.intensity[1], y2 = p.intensity[2];
  p.intensity[0] = std::max(0.0, y1 - x1 * (y2 - y1) / (x2 - x1));
}

std::vector<double> polar_angles(const BfpProfile& p, double n1) {
  std::vector<double> theta(p.na_coordinate.size());
  for (std::size_t i = 0; i < theta.size(); ++i)
    theta[i] = std::asin(std::min(1.0, p.na_coordinate[i] / n1));
  return theta;
}

}  // namespace

BfpProfile bfp_profile(const AngularSpectrum& lower, const ObjectiveGeometry& objective) {
  objective.validate();
  if (lower.half_space != Hemisphere::lower)
    throw ContractViolation("BFP profile needs the lower-hemisphere spectrum");
  if (std::abs(lower.medium_index - objective.immersion_index) > 1e-12)
    throw ContractViolation("spectrum medium index differs from the immersion index");
  if (lower.angles.size() != lower.density.size())
    throw ContractViolation("spectrum angles and density differ in length");
  const double theta_max = objective.max_angle();
  if (lower.angles.size() < 3 || lower.angles.front() > 1e-12 || lower.angles.back() < theta_max)
    throw CoverageError("spectrum does not cover the objective NA disk");

  const double n1 = lower.medium_index;
  BfpProfile p;
  std::size_t i = 0;
  for (; i < lower.angles.size() && lower.angles[i] < theta_max - 1e-12; ++i) {
    const double th = lower.angles[i];
    p.na_coordinate.push_back(n1 * std::sin(th));
    p.intensity.push_back(th == 0.0 ? 0.0 : areal_from_angular(lower.density[i], th, n1));
  }

  // Density at the NA edge from the quadratic through the nearest three samples.
  const std::size_t k = std::clamp<std::size_t>(i, 1, lower.angles.size() - 2);
  const double x0 = lower.angles[k - 1], x1 = lower.angles[k], x2 = lower.angles[k + 1];
  const double y0 = lower.density[k - 1], y1 = lower.density[k], y2 = lower.density[k + 1];
  const double x = theta_max;
  const double g = y0 * (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2)) +
                   y1 * (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2)) +
                   y2 * (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1));
  p.na_coordinate.push_back(objective.numerical_aperture);
  p.intensity.push_back(std::max(0.0, areal_from_angular(g, theta_max, n1)));

  fill_axis_limit(p);
  for (auto& v : p.intensity) v = std::max(0.0, v);
  return p;
}

BfpProfile apply_resolution(const BfpProfile& profile, double fwhm_degrees, double n1) {
  if (profile.smoothed) throw ContractViolation("profile is already smoothed");
  if (!(fwhm_degrees > 0.0) || !std::isfinite(fwhm_degrees))
    throw ContractViolation("resolution FWHM must be finite and > 0");
  if (profile.na_coordinate.size() != profile.intensity.size())
    throw ContractViolation("profile coordinate and intensity differ in length");

  const std::size_t n = profile.na_coordinate.size();
  const auto theta = polar_angles(profile, n1);
  const auto w = trapezoid_weights(theta);
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = profile.intensity[i] * two_pi * n1 * n1 * std::sin(theta[i]) * std::cos(theta[i]);

  const double sigma = fwhm_degrees * std::numbers::pi / 180.0 / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
  const double reach = 8.0 * sigma;
  auto kernel = [&](double d) { return std::exp(-0.5 * (d / sigma) * (d / sigma)); };

  // Each source sample spreads its mass over the grid with a kernel
  // renormalized to the part that falls inside the profile.
  std::vector<std::size_t> lo(n), hi(n);
  std::vector<double> z(n);
  for (std::size_t j = 0; j < n; ++j) {
    lo[j] = static_cast<std::size_t>(std::lower_bound(theta.begin(), theta.end(), theta[j] - reach) - theta.begin());
    hi[j] = static_cast<std::size_t>(std::upper_bound(theta.begin(), theta.end(), theta[j] + reach) - theta.begin());
    double s = 0.0;
    for (std::size_t i = lo[j]; i < hi[j]; ++i) s += kernel(theta[i] - theta[j]) * w[i];
    z[j] = s;
  }

  std::vector<double> out(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    quad::KahanSum acc;
    const double lo_t = theta[i] - reach, hi_t = theta[i] + reach;
    const auto b = std::lower_bound(theta.begin(), theta.end(), lo_t) - theta.begin();
    const auto e = std::upper_bound(theta.begin(), theta.end(), hi_t) - theta.begin();
    for (auto j = static_cast<std::size_t>(b); j < static_cast<std::size_t>(e); ++j)
      if (z[j] > 0.0) acc.add(g[j] * w[j] * kernel(theta[i] - theta[j]) / z[j]);
    out[i] = acc.value();
  });

  BfpProfile r;
  r.na_coordinate = profile.na_coordinate;
  r.intensity.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    r.intensity[i] = theta[i] == 0.0 ? 0.0 : std::max(0.0, areal_from_angular(out[i], theta[i], n1));
  fill_axis_limit(r);
  r.smoothed = true;
  return r;
}

AngularSpectrum profile_as_spectrum(const BfpProfile& profile, double n1) {
  AngularSpectrum s;
  s.half_space = Hemisphere::lower;
  s.medium_index = n1;
  s.angles = polar_angles(profile, n1);
  s.density.resize(s.angles.size());
  for (std::size_t i = 0; i < s.angles.size(); ++i)
    s.density[i] = profile.intensity[i] * two_pi * n1 * n1 * std::sin(s.angles[i]) * std::cos(s.angles[i]);
  return s;
}

double profile_energy(const BfpProfile& profile, double n1) {
  const auto theta = polar_angles(profile, n1);
  const auto w = trapezoid_weights(theta);
  quad::KahanSum acc;
  for (std::size_t i = 0; i < theta.size(); ++i)
    acc.add(w[i] * profile.intensity[i] * two_pi * n1 * n1 * std::sin(theta[i]) * std::cos(theta[i]));
  return acc.value();
}

BfpImage render_image(const BfpProfile& profile, std::size_t pixels_across) {
  if (pixels_across < 16 || pixels_across % 2 != 0)
    throw ContractViolation("pixels_across must be even and >= 16");
  if (profile.na_coordinate.size() < 4 || profile.na_coordinate.size() != profile.intensity.size())
    throw ContractViolation("profile needs at least four samples");

  const std::size_t n = pixels_across;
  const double na = profile.na_coordinate.back();
  BfpImage img;
  img.pixels_across = n;
  img.pixel_pitch = 2.0 * na / static_cast<double>(n);
  img.center_x = img.center_y = 0.5 * static_cast<double>(n - 1);
  img.pixels.assign(n * n, 0.0);

  boost::math::interpolators::pchip<std::vector<double>> interp(
      std::vector<double>(profile.na_coordinate), std::vector<double>(profile.intensity));

  parallel_for(n, [&](std::size_t row) {
    const double y = (static_cast<double>(row) - img.center_y) * img.pixel_pitch;
    for (std::size_t col = 0; col < n; ++col) {
      const double x = (static_cast<double>(col) - img.center_x) * img.pixel_pitch;
      const double rho = std::hypot(x, y);
      if (rho > na) continue;
      img.pixels[row * n + col] = std::max(0.0, interp(rho));
    }
  });
  return img;
}

double image_energy(const BfpImage& image) {
  quad::KahanSum acc;
  for (double v : image.pixels) acc.add(v);
  return acc.value() * image.pixel_pitch * image.pixel_pitch;
}

}  // namespace antenna
