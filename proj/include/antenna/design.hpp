#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "antenna/emission.hpp"
#include "antenna/stack.hpp"

namespace antenna::design {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

enum class CellStatus { valid, emitter_outside_layer, numerical_error };

/// Collection efficiency sampled on a tensor (t, h) grid.
///
/// Cells are stored t-major: index(i, j) = i * h_grid.size() + j. Cells that
/// are not `valid` hold NaN in `eta`.
struct EfficiencyMap {
  std::vector<double> t_grid;
  std::vector<double> h_grid;
  std::vector<double> eta;
  std::vector<CellStatus> status;
  std::vector<std::string> errors;  // per cell, empty unless numerical_error
  ObjectiveGeometry objective;
  LayerStack template_stack;

  std::size_t index(std::size_t i, std::size_t j) const { return i * h_grid.size() + j; }
  double at(std::size_t i, std::size_t j) const { return eta[index(i, j)]; }
  bool valid(std::size_t i, std::size_t j) const { return status[index(i, j)] == CellStatus::valid; }
};

struct DesignOptimum {
  double t_star = 0.0;
  double h_star = 0.0;
  double eta_star = 0.0;
  std::size_t evaluations = 0;
};

struct SensitivityBox {
  double eta_min = 0.0;
  double eta_max = 0.0;
  double eta_center = 0.0;
};

struct OptimizerOptions {
  std::size_t coarse_steps = 15;
  /// Local refinements are started from this many of the best coarse cells.
  std::size_t starts = 3;
  std::size_t max_iterations = 2000;
};

/// Template with the emitter layer thickness set to t and the emitter height to h.
LayerStack with_geometry(const LayerStack& templ, double t_nm, double h_nm);

/// Collection efficiency of the template at (t, h).
double efficiency_at(const LayerStack& templ, double t_nm, double h_nm,
                     const ObjectiveGeometry& objective, const quad::Options& opt = {});

EfficiencyMap efficiency_map(const LayerStack& templ, Range t_range, Range h_range,
                             std::pair<std::size_t, std::size_t> steps,
                             const ObjectiveGeometry& objective, const quad::Options& opt = {});

/// Coarse scan followed by Nelder-Mead refinement of eta over the box; h < t
/// is enforced as a hard constraint. Deterministic for fixed inputs.
DesignOptimum optimize(const LayerStack& templ, Range t_bounds, Range h_bounds,
                       const ObjectiveGeometry& objective, double tolerance_nm,
                       const OptimizerOptions& options = {}, const quad::Options& opt = {});

/// eta at the centre, corners and edge midpoints of [t0 +- dt] x [h0 +- dh].
SensitivityBox sensitivity_box(const LayerStack& templ, double t0, double h0, double delta_t,
                               double delta_h, const ObjectiveGeometry& objective,
                               const quad::Options& opt = {});

}  // namespace antenna::design
