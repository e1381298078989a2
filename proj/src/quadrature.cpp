#include "antenna/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <vector>

namespace antenna::quad {

namespace {

// Kronrod nodes on [0, 1] half of [-1, 1]; odd indices are the Gauss points.
constexpr std::array<double, 8> xgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> wgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
};

Panel gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kron = fc * wgk[7];
  double gauss = fc * wg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * xgk[j];
    const double fsum = f(c - dx) + f(c + dx);
    kron += wgk[j] * fsum;
    if (j % 2 == 1) gauss += wg[j / 2] * fsum;
  }
  return {a, b, kron * h, std::abs((kron - gauss) * h)};
}

struct ByError {
  bool operator()(const Panel& x, const Panel& y) const {
    if (x.error != y.error) return x.error < y.error;
    return x.a > y.a;
  }
};

}  // namespace

void KahanSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x))
    comp_ += (sum_ - t) + x;
  else
    comp_ += (x - t) + sum_;
  sum_ = t;
}

Result integrate(const std::function<double(double)>& f, double a, double b,
                 std::span<const double> breaks, const Options& opt) {
  std::vector<double> edges{a};
  for (double x : breaks)
    if (x > a && x < b) edges.push_back(x);
  edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  std::priority_queue<Panel, std::vector<Panel>, ByError> work;
  double value = 0.0;
  double error = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    auto p = gk15(f, edges[i], edges[i + 1]);
    value += p.value;
    error += p.error;
    work.push(p);
  }

  auto tolerance = [&] { return std::max(opt.abs_tol, opt.rel_tol * std::abs(value)); };
  while (error > tolerance() && work.size() < opt.max_panels) {
    const Panel worst = work.top();
    // Panel no longer splittable in floating point.
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;
    work.pop();
    const auto left = gk15(f, worst.a, mid);
    const auto right = gk15(f, mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    work.push(left);
    work.push(right);
  }

  // Final sum in ascending panel order, independent of refinement history.
  std::vector<Panel> panels;
  panels.reserve(work.size());
  while (!work.empty()) {
    panels.push_back(work.top());
    work.pop();
  }
  std::sort(panels.begin(), panels.end(), [](const Panel& x, const Panel& y) { return x.a < y.a; });
  KahanSum v;
  KahanSum e;
  for (const auto& p : panels) {
    v.add(p.value);
    e.add(p.error);
  }
  Result r;
  r.value = v.value();
  r.error = e.value();
  r.panels = panels.size();
  r.converged = r.error <= std::max(opt.abs_tol, opt.rel_tol * std::abs(r.value));
  return r;
}

Result integrate(const std::function<double(double)>& f, double a, double b,
                 const Options& opt) {
  return integrate(f, a, b, std::span<const double>{}, opt);
}

}  // namespace antenna::quad
