#include "antenna/design.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "antenna/errors.hpp"
#include "antenna/parallel.hpp"

namespace antenna::design {

namespace {

std::vector<double> linspace(Range r, std::size_t n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = r.lo;
    return v;
  }
  for (std::size_t i = 0; i < n; ++i)
    v[i] = r.lo + (r.hi - r.lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  v.back() = r.hi;
  return v;
}

void require_range(Range r, const char* name) {
  if (!(std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo > 0.0 && r.lo <= r.hi))
    throw ContractViolation(std::string(name) + " range must be positive and ordered");
}

struct Point {
  double t, h, eta;
};

}  // namespace

LayerStack with_geometry(const LayerStack& templ, double t_nm, double h_nm) {
  LayerStack s = templ;
  s.layers.at(s.emitter_layer).thickness_nm = t_nm;
  s.emitter_height_nm = h_nm;
  return s;
}

double efficiency_at(const LayerStack& templ, double t_nm, double h_nm,
                     const ObjectiveGeometry& objective, const quad::Options& opt) {
  return collection_efficiency(with_geometry(templ, t_nm, h_nm), objective, opt);
}

EfficiencyMap efficiency_map(const LayerStack& templ, Range t_range, Range h_range,
                             std::pair<std::size_t, std::size_t> steps,
                             const ObjectiveGeometry& objective, const quad::Options& opt) {
  require_range(t_range, "t");
  require_range(h_range, "h");
  if (steps.first < 2 || steps.second < 2) throw ContractViolation("map needs at least 2 steps per axis");
  objective.validate();

  EfficiencyMap m;
  m.t_grid = linspace(t_range, steps.first);
  m.h_grid = linspace(h_range, steps.second);
  m.objective = objective;
  m.template_stack = templ;
  const std::size_t n = m.t_grid.size() * m.h_grid.size();
  m.eta.assign(n, std::numeric_limits<double>::quiet_NaN());
  m.status.assign(n, CellStatus::valid);
  m.errors.assign(n, {});

  parallel_for(n, [&](std::size_t k) {
    const double t = m.t_grid[k / m.h_grid.size()];
    const double h = m.h_grid[k % m.h_grid.size()];
    if (h >= t) {
      m.status[k] = CellStatus::emitter_outside_layer;
      return;
    }
    try {
      m.eta[k] = efficiency_at(templ, t, h, objective, opt);
    } catch (const Error& e) {
      m.status[k] = CellStatus::numerical_error;
      m.errors[k] = e.what();
    }
  });
  return m;
}

DesignOptimum optimize(const LayerStack& templ, Range t_bounds, Range h_bounds,
                       const ObjectiveGeometry& objective, double tolerance_nm,
                       const OptimizerOptions& options, const quad::Options& opt) {
  require_range(t_bounds, "t");
  require_range(h_bounds, "h");
  if (!(tolerance_nm > 0.0)) throw ContractViolation("optimizer tolerance must be > 0");
  if (options.coarse_steps < 15) throw ContractViolation("coarse scan needs at least 15 steps per axis");
  objective.validate();

  std::size_t evaluations = 0;
  auto feasible = [&](double t, double h) {
    return t >= t_bounds.lo && t <= t_bounds.hi && h >= h_bounds.lo && h <= h_bounds.hi && h < t;
  };
  auto eval = [&](double t, double h) {
    if (!feasible(t, h)) return -std::numeric_limits<double>::infinity();
    ++evaluations;
    return efficiency_at(templ, t, h, objective, opt);
  };

  const std::size_t nt = t_bounds.lo == t_bounds.hi ? 1 : options.coarse_steps;
  const std::size_t nh = h_bounds.lo == h_bounds.hi ? 1 : options.coarse_steps;
  const auto tg = linspace(t_bounds, nt);
  const auto hg = linspace(h_bounds, nh);
  std::vector<Point> coarse;
  for (double t : tg)
    for (double h : hg)
      if (feasible(t, h)) coarse.push_back({t, h, eval(t, h)});
  if (coarse.empty())
    throw InfeasibleDomain("no (t, h) in the bounds keeps the emitter inside its layer");

  // Best first; ties broken by position so the order is fully deterministic.
  std::stable_sort(coarse.begin(), coarse.end(), [](const Point& a, const Point& b) {
    return a.eta > b.eta;
  });
  Point best = coarse.front();
  if (nt == 1 && nh == 1) return {best.t, best.h, best.eta, evaluations};

  const double step_t = nt > 1 ? 0.5 * (tg[1] - tg[0]) : 0.0;
  const double step_h = nh > 1 ? 0.5 * (hg[1] - hg[0]) : 0.0;

  auto nelder_mead = [&](Point start) {
    std::array<Point, 3> simplex{start, start, start};
    simplex[1].t += step_t;
    simplex[2].h += step_h;
    // Degenerate axes collapse onto a 1-D search along the other axis.
    if (step_t == 0.0) simplex[1].h -= step_h;
    if (step_h == 0.0) simplex[2].t -= step_t;
    for (std::size_t k = 1; k < 3; ++k) simplex[k].eta = eval(simplex[k].t, simplex[k].h);

    auto diameter = [&] {
      double d = 0.0;
      for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = a + 1; b < 3; ++b)
          d = std::max(d, std::hypot(simplex[a].t - simplex[b].t, simplex[a].h - simplex[b].h));
      return d;
    };
    for (std::size_t it = 0; it < options.max_iterations && diameter() >= tolerance_nm; ++it) {
      std::stable_sort(simplex.begin(), simplex.end(),
                       [](const Point& a, const Point& b) { return a.eta > b.eta; });
      const double ct = 0.5 * (simplex[0].t + simplex[1].t);
      const double ch = 0.5 * (simplex[0].h + simplex[1].h);
      auto along = [&](double f) {
        const double t = ct + f * (simplex[2].t - ct);
        const double h = ch + f * (simplex[2].h - ch);
        return Point{t, h, eval(t, h)};
      };
      const Point refl = along(-1.0);
      if (refl.eta > simplex[0].eta) {
        const Point exp = along(-2.0);
        simplex[2] = exp.eta > refl.eta ? exp : refl;
      } else if (refl.eta > simplex[1].eta) {
        simplex[2] = refl;
      } else {
        const Point con = refl.eta > simplex[2].eta ? along(-0.5) : along(0.5);
        if (con.eta > std::max(refl.eta, simplex[2].eta)) {
          simplex[2] = con;
        } else {
          for (std::size_t k = 1; k < 3; ++k) {
            simplex[k].t = 0.5 * (simplex[0].t + simplex[k].t);
            simplex[k].h = 0.5 * (simplex[0].h + simplex[k].h);
            simplex[k].eta = eval(simplex[k].t, simplex[k].h);
          }
        }
      }
    }
    return *std::max_element(simplex.begin(), simplex.end(),
                             [](const Point& a, const Point& b) { return a.eta < b.eta; });
  };

  const std::size_t starts = std::min(options.starts, coarse.size());
  for (std::size_t k = 0; k < starts; ++k) {
    const Point p = nelder_mead(coarse[k]);
    if (p.eta > best.eta) best = p;
  }
  return {best.t, best.h, best.eta, evaluations};
}

SensitivityBox sensitivity_box(const LayerStack& templ, double t0, double h0, double delta_t,
                               double delta_h, const ObjectiveGeometry& objective,
                               const quad::Options& opt) {
  if (!(delta_t >= 0.0 && delta_h >= 0.0)) throw ContractViolation("box half-widths must be >= 0");
  if (h0 + delta_h >= t0 - delta_t || h0 - delta_h <= 0.0)
    throw InfeasibleDomain("sensitivity box leaves the emitter outside its layer");
  SensitivityBox box;
  box.eta_center = efficiency_at(templ, t0, h0, objective, opt);
  box.eta_min = box.eta_max = box.eta_center;
  for (int a = -1; a <= 1; ++a) {
    for (int b = -1; b <= 1; ++b) {
      if (a == 0 && b == 0) continue;
      const double eta = efficiency_at(templ, t0 + a * delta_t, h0 + b * delta_h, objective, opt);
      box.eta_min = std::min(box.eta_min, eta);
      box.eta_max = std::max(box.eta_max, eta);
    }
  }
  return box;
}

}  // namespace antenna::design
