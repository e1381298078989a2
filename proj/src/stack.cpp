#include "antenna/stack.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "antenna/errors.hpp"

namespace antenna {

double LayerStack::region_index(std::size_t region) const {
  if (region == 0) return substrate.index;
  if (region <= layers.size()) return layers[region - 1].index;
  return superstrate.index;
}

double LayerStack::max_index() const {
  double m = std::max(substrate.index, superstrate.index);
  for (const auto& l : layers) m = std::max(m, l.index);
  return m;
}

cplx kz(double index, double k_parallel, double k0) {
  const double k = k0 * index;
  // (k - kp)(k + kp) keeps precision near the critical point
  const double arg = (k - k_parallel) * (k + k_parallel);
  if (arg >= 0.0) return {std::sqrt(arg), 0.0};
  return {0.0, std::sqrt(-arg)};
}

PlaneWaveState plane_wave_state(const LayerStack& stack, double k_parallel) {
  PlaneWaveState s;
  s.k_parallel = k_parallel;
  const double k0 = stack.k0();
  s.kz_per_region.reserve(stack.region_count());
  for (std::size_t r = 0; r < stack.region_count(); ++r)
    s.kz_per_region.push_back(kz(stack.region_index(r), k_parallel, k0));
  return s;
}

PlaneWaveState plane_wave_state_at_angle(const LayerStack& stack, std::size_t outer_region,
                                         double theta) {
  const double k0 = stack.k0();
  const double n_out = stack.region_index(outer_region);
  const double c = n_out * std::cos(theta);
  PlaneWaveState s;
  s.k_parallel = k0 * n_out * std::sin(theta);
  s.kz_per_region.reserve(stack.region_count());
  for (std::size_t r = 0; r < stack.region_count(); ++r) {
    const double n = stack.region_index(r);
    const double arg = (n - n_out) * (n + n_out) + c * c;
    s.kz_per_region.push_back(arg >= 0.0 ? cplx{k0 * std::sqrt(arg), 0.0}
                                         : cplx{0.0, k0 * std::sqrt(-arg)});
  }
  return s;
}

InterfaceCoefficients fresnel_p(double n_i, double n_j, cplx kz_i, cplx kz_j) {
  if (n_i == n_j) return {cplx{0.0}, cplx{1.0}};
  const double ei = n_i * n_i;
  const double ej = n_j * n_j;
  const cplx den = ej * kz_i + ei * kz_j;
  if (std::abs(den) < 1e-300)
    throw InvalidPlaneWave("fresnel_p: vanishing denominator between indices " +
                           std::to_string(n_i) + " and " + std::to_string(n_j));
  const cplx r = (ej * kz_i - ei * kz_j) / den;
  return {r, 1.0 + r};
}

SideResponse side_response(const LayerStack& stack, Side side, const PlaneWaveState& wave) {
  const auto& kzs = wave.kz_per_region;
  // Regions walked from the emitter layer outward.
  std::vector<std::size_t> path;
  const std::size_t emitter_region = stack.emitter_layer + 1;
  if (side == Side::up) {
    for (std::size_t r = emitter_region; r < stack.region_count(); ++r) path.push_back(r);
  } else {
    for (std::size_t r = emitter_region + 1; r-- > 0;) path.push_back(r);
  }

  // Recursion from the outermost interface inward.
  const std::size_t last = path.size() - 1;
  auto c = fresnel_p(stack.region_index(path[last - 1]), stack.region_index(path[last]),
                     kzs[path[last - 1]], kzs[path[last]]);
  cplx r = c.r;
  cplx t = c.t;
  for (std::size_t i = last - 1; i >= 1; --i) {
    const std::size_t region = path[i];
    const auto near = fresnel_p(stack.region_index(path[i - 1]), stack.region_index(region),
                                kzs[path[i - 1]], kzs[region]);
    const double d = stack.layers[region - 1].thickness_nm;
    const cplx phase = std::exp(cplx{0.0, 1.0} * kzs[region] * d);
    const cplx far_r = r * phase * phase;
    const cplx den = 1.0 + near.r * far_r;
    t = near.t * t * phase / den;
    r = (near.r + far_r) / den;
  }
  return {r, t};
}

SideResponse side_response(const LayerStack& stack, Side side, double k_parallel) {
  return side_response(stack, side, plane_wave_state(stack, k_parallel));
}

cplx effective_reflection(const LayerStack& stack, Side side, double k_parallel) {
  return side_response(stack, side, k_parallel).reflection;
}

double emitter_gap(const LayerStack& stack, Side side) {
  const auto& layer = stack.layers.at(stack.emitter_layer);
  return side == Side::up ? layer.thickness_nm - stack.emitter_height_nm
                          : stack.emitter_height_nm;
}

cplx round_trip_reflection(const LayerStack& stack, Side side, const PlaneWaveState& wave) {
  const cplx kze = wave.kz_per_region[stack.emitter_layer + 1];
  return side_response(stack, side, wave).reflection *
         std::exp(cplx{0.0, 2.0} * kze * emitter_gap(stack, side));
}

cplx round_trip_reflection(const LayerStack& stack, Side side, double k_parallel) {
  return round_trip_reflection(stack, side, plane_wave_state(stack, k_parallel));
}

std::vector<std::string> validate_stack(const LayerStack& stack) {
  std::vector<std::string> out;
  auto check_index = [&](double n, const std::string& what) {
    if (!std::isfinite(n) || n < 1.0) {
      std::ostringstream os;
      os << what << ": refractive index " << n << " must be real, finite and >= 1";
      out.push_back(os.str());
    }
  };
  check_index(stack.substrate.index, "substrate");
  check_index(stack.superstrate.index, "superstrate");
  if (stack.layers.empty()) out.emplace_back("stack has no layers; the emitter needs a host layer");
  for (std::size_t i = 0; i < stack.layers.size(); ++i) {
    const auto& l = stack.layers[i];
    const std::string name = "layer " + std::to_string(i);
    check_index(l.index, name);
    if (!std::isfinite(l.thickness_nm) || l.thickness_nm <= 0.0)
      out.push_back(name + ": non-positive thickness (" + std::to_string(l.thickness_nm) + " nm)");
  }
  if (!(std::isfinite(stack.wavelength_nm) && stack.wavelength_nm > 0.0))
    out.emplace_back("wavelength must be finite and > 0");
  if (stack.emitter_layer >= stack.layers.size()) {
    out.emplace_back("emitter layer index out of range");
  } else {
    const double t = stack.layers[stack.emitter_layer].thickness_nm;
    const double h = stack.emitter_height_nm;
    if (!(std::isfinite(h) && h > 0.0 && h < t))
      out.push_back("emitter outside its layer (height " + std::to_string(h) +
                    " nm, layer thickness " + std::to_string(t) + " nm)");
  }
  return out;
}

void require_valid(const LayerStack& stack) {
  const auto v = validate_stack(stack);
  if (v.empty()) return;
  std::string msg = "invalid layer stack:";
  for (const auto& s : v) msg += "\n  " + s;
  throw InvalidStack(msg);
}

LayerStack three_layer_antenna(double n_substrate, double n_middle, double n_superstrate,
                               double thickness_nm, double emitter_height_nm,
                               double wavelength_nm) {
  LayerStack s;
  s.substrate.index = n_substrate;
  s.layers = {Layer{thickness_nm, n_middle}};
  s.superstrate.index = n_superstrate;
  s.emitter_layer = 0;
  s.emitter_height_nm = emitter_height_nm;
  s.wavelength_nm = wavelength_nm;
  return s;
}

LayerStack with_emitter_film(const LayerStack& stack, double film_thickness_nm,
                             double film_index) {
  require_valid(stack);
  const auto host = stack.layers[stack.emitter_layer];
  const double half = 0.5 * film_thickness_nm;
  const double below = stack.emitter_height_nm - half;
  const double above = host.thickness_nm - stack.emitter_height_nm - half;
  if (!(film_thickness_nm > 0.0) || below <= 0.0 || above <= 0.0)
    throw InvalidStack("emitter film does not fit inside the host layer");

  LayerStack out = stack;
  out.layers.clear();
  for (std::size_t i = 0; i < stack.layers.size(); ++i) {
    if (i != stack.emitter_layer) {
      out.layers.push_back(stack.layers[i]);
      continue;
    }
    out.layers.push_back({below, host.index});
    out.emitter_layer = out.layers.size();
    out.layers.push_back({film_thickness_nm, film_index});
    out.layers.push_back({above, host.index});
  }
  out.emitter_height_nm = half;
  return out;
}

}  // namespace antenna
