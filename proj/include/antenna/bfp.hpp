#pragma once

#include <cstddef>
#include <vector>

#include "antenna/emission.hpp"

namespace antenna {

/// Radial back-focal-plane intensity versus the NA coordinate rho = n1 sin(theta).
///
/// The last sample sits exactly on the objective NA.
struct BfpProfile {
  std::vector<double> na_coordinate;
  std::vector<double> intensity;
  bool smoothed = false;
};

/// Square raster of the BFP, row-major, spanning [-NA, NA] on both axes.
struct BfpImage {
  std::size_t pixels_across = 0;
  std::vector<double> pixels;
  double pixel_pitch = 0.0;
  /// Optical axis in pixel-index coordinates (pixel centers at integers).
  double center_x = 0.0;
  double center_y = 0.0;

  double at(std::size_t row, std::size_t col) const { return pixels[row * pixels_across + col]; }
};

/// Maps the lower-hemisphere spectrum through an aplanatic objective at unit
/// focal length. Throws CoverageError when the spectrum does not reach the NA.
BfpProfile bfp_profile(const AngularSpectrum& lower, const ObjectiveGeometry& objective);

/// Gaussian smoothing in theta with the given FWHM, energy conserving.
/// Throws ContractViolation for an already smoothed profile or fwhm <= 0.
BfpProfile apply_resolution(const BfpProfile& profile, double fwhm_degrees, double n1);

/// The profile expressed back as dP/dtheta in the immersion medium.
AngularSpectrum profile_as_spectrum(const BfpProfile& profile, double n1);

/// Integral of intensity * 2 pi rho d rho over the profile.
double profile_energy(const BfpProfile& profile, double n1);

/// Monotone cubic radial interpolation of the profile onto a square grid.
/// Throws ContractViolation unless pixels_across >= 16 and even.
BfpImage render_image(const BfpProfile& profile, std::size_t pixels_across);

/// Sum of pixels times the pixel area.
double image_energy(const BfpImage& image);

}  // namespace antenna
