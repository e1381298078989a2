#pragma once

// Random lossless stacks without bound modes: indices are non-increasing from
// the substrate upward, so every in-plane wavenumber that propagates anywhere
// propagates in the substrate and no guided mode can form.

#include <algorithm>
#include <functional>
#include <random>
#include <vector>

#include "antenna/stack.hpp"

namespace oracle {

inline antenna::LayerStack random_leaky_stack(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> idx(1.0, 2.5), thick(20.0, 1000.0), frac(0.02, 0.98);
  std::uniform_int_distribution<int> count(2, 5);
  const int L = count(gen);
  std::vector<double> n(L + 2);
  for (auto& v : n) v = idx(gen);
  std::sort(n.begin(), n.end(), std::greater<>());
  antenna::LayerStack s;
  s.substrate.index = n.front();
  s.superstrate.index = n.back();
  for (int i = 0; i < L; ++i) s.layers.push_back({thick(gen), n[i + 1]});
  s.emitter_layer = std::uniform_int_distribution<int>(0, L - 1)(gen);
  s.emitter_height_nm = frac(gen) * s.layers[s.emitter_layer].thickness_nm;
  s.wavelength_nm = 580.0;
  return s;
}

}  // namespace oracle
