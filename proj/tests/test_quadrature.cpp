#include <cmath>
#include <numbers>
#include <vector>

#include "antenna/emission.hpp"
#include "antenna/quadrature.hpp"
#include "doctest.h"

using namespace antenna;

TEST_CASE("gauss-kronrod integrates smooth functions to tolerance") {
  const auto r = quad::integrate([](double x) { return std::exp(x); }, 0.0, 1.0);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-13));
}

TEST_CASE("adaptive refinement resolves a narrow peak") {
  const double w = 1e-4;
  auto lorentz = [&](double x) { return w / (x * x + w * w) / std::numbers::pi; };
  const auto r = quad::integrate(lorentz, -1.0, 1.0);
  const double exact = 2.0 * std::atan(1.0 / w) / std::numbers::pi;
  CHECK(r.converged);
  CHECK(std::abs(r.value - exact) < 1e-8 * exact);
  CHECK(r.panels > 4);
}

TEST_CASE("sqrt endpoint singularity with breakpoints") {
  const std::vector<double> breaks{0.5};
  const auto r = quad::integrate([](double x) { return std::sqrt(std::abs(x - 0.5)); }, 0.0, 1.0,
                                 breaks);
  CHECK(r.value == doctest::Approx(4.0 / 3.0 * std::pow(0.5, 1.5)).epsilon(1e-8));
}

TEST_CASE("panel cap stops refinement and reports non-convergence") {
  quad::Options opt;
  opt.max_panels = 8;
  opt.rel_tol = 1e-15;
  const auto r = quad::integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, opt);
  CHECK_FALSE(r.converged);
  CHECK(r.panels <= 8);
}

TEST_CASE("kahan sum keeps small terms") {
  quad::KahanSum s;
  s.add(1.0);
  for (int i = 0; i < 1000; ++i) s.add(1e-16);
  CHECK(s.value() == doctest::Approx(1.0 + 1e-13).epsilon(1e-15));
}

TEST_CASE("piecewise-quadratic sample integration is exact for quadratics") {
  std::vector<double> x, y;
  for (int i = 0; i <= 10; ++i) {
    x.push_back(0.1 * i);
    y.push_back(3.0 * x.back() * x.back() - x.back() + 2.0);
  }
  auto exact = [](double b) { return b * b * b - 0.5 * b * b + 2.0 * b; };
  CHECK(integrate_samples(x, y, 1.0) == doctest::Approx(exact(1.0)).epsilon(1e-13));
  CHECK(integrate_samples(x, y, 0.55) == doctest::Approx(exact(0.55)).epsilon(1e-13));
  // Extrapolated past the last sample.
  CHECK(integrate_samples(x, y, 1.2) == doctest::Approx(exact(1.2)).epsilon(1e-12));
  CHECK(integrate_samples(x, y, -1.0) == 0.0);
}
