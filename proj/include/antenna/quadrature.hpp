#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace antenna::quad {

struct Options {
  double rel_tol = 1e-8;
  double abs_tol = 0.0;
  std::size_t max_panels = 1'000'000;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  std::size_t panels = 0;
  bool converged = false;
};

/// Globally adaptive 7/15-point Gauss-Kronrod integration on [a, b].
///
/// The panel with the largest local error estimate is bisected until the
/// summed estimate drops below max(abs_tol, rel_tol * |value|) or the panel cap
/// is hit. Panel sums use compensated summation in a fixed order, so results
/// do not depend on the order in which panels were refined.
Result integrate(const std::function<double(double)>& f, double a, double b,
                 const Options& opt = {});

/// Same, with the interval pre-split at `breaks` (values outside (a, b) are ignored).
Result integrate(const std::function<double(double)>& f, double a, double b,
                 std::span<const double> breaks, const Options& opt = {});

/// Neumaier-compensated accumulator.
class KahanSum {
 public:
  void add(double x);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace antenna::quad
