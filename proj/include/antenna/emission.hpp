#pragma once

#include <vector>

#include "antenna/quadrature.hpp"
#include "antenna/stack.hpp"

namespace antenna {

enum class Hemisphere { lower, upper };

/// Power per unit polar angle radiated into one half-space.
///
/// `angles` are polar angles (radians) from the stack normal inside that
/// half-space; `density` is dP/dtheta as a fraction of the total emitted power
/// per radian, so the lower and upper spectra of one stack integrate to 1.
struct AngularSpectrum {
  Hemisphere half_space = Hemisphere::lower;
  std::vector<double> angles;
  std::vector<double> density;
  double medium_index = 1.0;
};

struct RadiatedPower {
  /// Dissipated power relative to the same dipole in an unbounded medium of the emitter index.
  double total_normalized = 0.0;
  /// Sum of both far-field integrals, same normalization as total_normalized.
  double far_field_total = 0.0;
  double lower_fraction = 0.0;
  double upper_fraction = 0.0;
};

struct ObjectiveGeometry {
  double numerical_aperture = 1.65;
  double immersion_index = 1.78;

  /// Acceptance half-angle inside the immersion medium, radians.
  double max_angle() const;
  /// Throws InvalidObjective unless 0 < NA < immersion_index.
  void validate() const;
};

struct Lobe {
  double angle = 0.0;
  double density = 0.0;
};

inline constexpr double default_angle_resolution = 0.25e-3;

/// Unnormalized far-field dP/dtheta in the given half-space, relative to the
/// free-dipole power of the emitter medium. theta is clamped to [0, pi/2).
double far_field_density(const LayerStack& stack, Hemisphere half_space, double theta);

/// k-space dissipated-power integral, normalized to the unbounded-medium dipole.
/// Throws NumericalAccuracyError when adaptive quadrature does not converge.
double dissipated_power(const LayerStack& stack, const quad::Options& opt = {});

/// Dissipated-power contribution from in-plane wavenumbers in
/// [k0 * lo_index, k0 * hi_index], both above the emitter index.
double evanescent_tail(const LayerStack& stack, double lo_index, double hi_index,
                       const quad::Options& opt = {});

/// Unnormalized far-field power integrated over [0, max_angle] in one half-space.
double far_field_power(const LayerStack& stack, Hemisphere half_space, double max_angle,
                       const quad::Options& opt = {});

RadiatedPower total_radiated_power(const LayerStack& stack, const quad::Options& opt = {});

/// Sampled spectrum on [0, pi/2]. Samples are spaced by the resolution, with
/// every critical angle on the grid and panels subdivided where the density
/// changes too fast for the piecewise-quadratic rule of integrate_samples.
AngularSpectrum angular_density(const LayerStack& stack, Hemisphere half_space,
                                double angle_grid_resolution = default_angle_resolution);

/// Integral of the lower spectrum over the objective's acceptance cone.
double collection_efficiency(const AngularSpectrum& lower, const AngularSpectrum& upper,
                             const ObjectiveGeometry& objective);

/// Collection efficiency straight from the stack by adaptive quadrature.
double collection_efficiency(const LayerStack& stack, const ObjectiveGeometry& objective,
                             const quad::Options& opt = {});

/// Strict local maxima whose topographic prominence is at least
/// min_prominence * max(density), sorted by angle.
std::vector<Lobe> find_lobes(const AngularSpectrum& spectrum, double min_prominence);

/// Integral of sampled y(x) from x.front() to `upto` with piecewise quadratics;
/// `upto` may lie past the last sample (the last quadratic is extrapolated).
double integrate_samples(const std::vector<double>& x, const std::vector<double>& y,
                         double upto);

/// Integral of a spectrum over [0, max_angle].
double spectrum_integral(const AngularSpectrum& s, double max_angle);

}  // namespace antenna
