#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

namespace antenna {

using cplx = std::complex<double>;

/// Finite planar layer. Lengths are in nanometers throughout the library.
struct Layer {
  double thickness_nm = 0.0;
  double index = 1.0;
};

/// Semi-infinite bounding medium.
struct HalfSpace {
  double index = 1.0;
};

enum class Side { up, down };

/// Planar multilayer around a vertically oriented dipole.
///
/// `layers` are ordered bottom to top; `substrate` lies below layers.front(),
/// `superstrate` above layers.back(). The emitter sits inside
/// layers[emitter_layer] at `emitter_height_nm` above that layer's bottom boundary.
struct LayerStack {
  HalfSpace substrate;
  std::vector<Layer> layers;
  HalfSpace superstrate;
  std::size_t emitter_layer = 0;
  double emitter_height_nm = 0.0;
  double wavelength_nm = 580.0;

  double k0() const { return 2.0 * std::numbers::pi / wavelength_nm; }
  double emitter_index() const { return layers.at(emitter_layer).index; }

  /// Number of regions, counting both half-spaces.
  std::size_t region_count() const { return layers.size() + 2; }
  /// Region 0 is the substrate, regions 1..L the layers, L+1 the superstrate.
  double region_index(std::size_t region) const;
  /// Largest refractive index anywhere in the stack.
  double max_index() const;
};

/// Out-of-plane and in-plane wavenumbers for one plane-wave component.
struct PlaneWaveState {
  double k_parallel = 0.0;
  std::vector<cplx> kz_per_region;
};

/// Out-of-plane wavenumber sqrt((k0 n)^2 - kp^2) with Im >= 0 (Re >= 0 when real).
cplx kz(double index, double k_parallel, double k0);

PlaneWaveState plane_wave_state(const LayerStack& stack, double k_parallel);

/// Plane-wave state of a far-field direction at polar angle theta inside
/// `outer_region` (0 or region_count()-1). kz is built from cos(theta), which
/// keeps full relative precision near grazing incidence.
PlaneWaveState plane_wave_state_at_angle(const LayerStack& stack, std::size_t outer_region,
                                         double theta);

struct InterfaceCoefficients {
  cplx r;
  cplx t;
};

/// p-polarized coefficients going from medium i into medium j.
///
/// Amplitudes refer to the tangential magnetic field, so t = 1 + r and the
/// transmitted z-flux carries the factor Re(kz_j n_i^2 / (kz_i n_j^2)).
/// Throws InvalidPlaneWave when the denominator vanishes.
InterfaceCoefficients fresnel_p(double n_i, double n_j, cplx kz_i, cplx kz_j);

/// Net reflection and transmission of everything on one side of the emitter
/// layer, referenced to the first interface met when leaving the emitter layer.
/// `transmission` is the amplitude arriving in the outer half-space.
struct SideResponse {
  cplx reflection;
  cplx transmission;
};

SideResponse side_response(const LayerStack& stack, Side side, const PlaneWaveState& wave);
SideResponse side_response(const LayerStack& stack, Side side, double k_parallel);

/// Reflection of the whole sub-stack on `side` of the emitter layer, built by
/// the interface recursion from the outermost interface inward. The phase for
/// the gap between emitter plane and first interface is applied by the caller
/// (see round_trip_reflection).
cplx effective_reflection(const LayerStack& stack, Side side, double k_parallel);

/// Distance from the emitter plane to the first interface on `side`.
double emitter_gap(const LayerStack& stack, Side side);

/// effective_reflection times exp(2i kz d), d the emitter distance to that side's first interface.
cplx round_trip_reflection(const LayerStack& stack, Side side, const PlaneWaveState& wave);
cplx round_trip_reflection(const LayerStack& stack, Side side, double k_parallel);

/// Returns every violated LayerStack invariant; empty means valid.
std::vector<std::string> validate_stack(const LayerStack& stack);

/// Throws InvalidStack listing all violations.
void require_valid(const LayerStack& stack);

/// Substrate / one middle layer / superstrate with the emitter inside the middle layer.
LayerStack three_layer_antenna(double n_substrate, double n_middle, double n_superstrate,
                               double thickness_nm, double emitter_height_nm,
                               double wavelength_nm = 580.0);

/// Splits the emitter layer so that a thin film of `film_index` and
/// `film_thickness_nm` is centered on the emitter plane.
LayerStack with_emitter_film(const LayerStack& stack, double film_thickness_nm,
                             double film_index = 1.7);

}  // namespace antenna
