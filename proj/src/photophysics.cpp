#include "antenna/photophysics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

namespace antenna::photo {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw ContractViolation(msg);
}

void require_rates(const ThreeLevelRates& r) {
  for (double k : {r.k12, r.k21, r.k23, r.k31})
    require(std::isfinite(k) && k >= 0.0, "rates must be finite and >= 0");
  require(r.k21 > 0.0, "k21 must be > 0");
}

/// exp(x^2) erfc(x) for x >= 0.
double erfcx(double x) {
  if (x < 25.0) return std::exp(x * x) * std::erfc(x);
  const double y = 1.0 / (x * x);
  return (1.0 - 0.5 * y * (1.0 - 1.5 * y * (1.0 - 2.5 * y))) / (x * std::sqrt(std::numbers::pi));
}

/// exp(g^2 s^2 / 2 - g t) erfc((g s^2 - t) / (s sqrt 2)), one half of the
/// exponential-Gaussian convolution.
double half_convolution(double t, double g, double s) {
  const double a = (g * s * s - t) / (s * std::numbers::sqrt2);
  if (a >= 0.0) return std::exp(-t * t / (2.0 * s * s)) * erfcx(a);
  return std::exp(g * (0.5 * g * s * s - t)) * std::erfc(a);
}

}  // namespace

bool ThreeLevelRates::slow_triplet() const {
  const double fast = k12 + k21;
  return fast > 0.0 && k23 < 1e-2 * fast && k31 < 1e-2 * fast;
}

Populations steady_state(const ThreeLevelRates& r) {
  require_rates(r);
  if (r.k23 == 0.0) {
    const double n2 = on_time_excited_population(r.k12, r.k21);
    return {1.0 - n2, n2, 0.0};
  }
  if (r.k31 == 0.0) throw AbsorbingTriplet("k23 > 0 with k31 = 0: the triplet level is absorbing");
  const double d = r.k31 * (r.k12 + r.k21 + r.k23) + r.k12 * r.k23;
  return {(r.k21 + r.k23) * r.k31 / d, r.k12 * r.k31 / d, r.k12 * r.k23 / d};
}

double on_time_excited_population(double k12, double k21) {
  require(std::isfinite(k21) && k21 > 0.0, "k21 must be > 0");
  require(k12 >= 0.0, "k12 must be >= 0");
  if (std::isinf(k12)) return 1.0;
  return k12 / (k12 + k21);
}

double g2_model(double delay, double rise_rate, double contrast, double irf_sigma) {
  const double s = std::numbers::sqrt2 * irf_sigma;
  if (s == 0.0) return 1.0 - contrast * std::exp(-rise_rate * std::abs(delay));
  const double e = 0.5 * (half_convolution(delay, rise_rate, s) + half_convolution(-delay, rise_rate, s));
  return 1.0 - contrast * e;
}

G2Fit fit_g2(const G2Curve& curve, std::optional<double> irf_sigma_fixed) {
  const auto& x = curve.delays;
  const auto& y = curve.values;
  require(x.size() == y.size(), "curve delays and values differ in length");
  require(x.size() >= 10, "g2 fit needs at least 10 bins");
  if (irf_sigma_fixed) require(*irf_sigma_fixed >= 0.0, "fixed irf sigma must be >= 0");

  const std::size_t n = x.size();
  const auto imin = static_cast<std::size_t>(std::min_element(y.begin(), y.end()) - y.begin());
  const double span = std::abs(*std::max_element(x.begin(), x.end(), [](double a, double b) {
    return std::abs(a) < std::abs(b);
  }));

  G2Fit fit;
  if (y[imin] > 0.9) {
    fit.low_contrast = true;
    fit.warnings.emplace_back("low contrast: no antibunching dip (minimum above 0.9)");
  }

  // Initial rise rate from the 1/e crossing of the dip, walking outward.
  const double depth = 1.0 - y[imin];
  double rate0 = 3.0 / span;
  if (depth > 0.0) {
    double cross = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = std::abs(x[i]);
      if (d > std::abs(x[imin]) && 1.0 - y[i] <= depth / std::numbers::e && (cross == 0.0 || d < cross))
        cross = d;
    }
    if (cross > 0.0) rate0 = 1.0 / cross;
  }
  require(span * rate0 >= 3.0, "g2 curve must span at least three rise times");

  const bool free_sigma = !irf_sigma_fixed.has_value();
  const double tscale = 1.0 / rate0;
  const Eigen::Index np = free_sigma ? 3 : 2;
  Eigen::VectorXd p(np);
  p(0) = 1.0;
  p(1) = std::clamp(depth, 0.05, 1.0);
  if (free_sigma) p(2) = 0.1;

  auto unpack = [&](const Eigen::VectorXd& q, double& g, double& c, double& s) {
    g = q(0) * rate0;
    c = q(1);
    s = free_sigma ? std::abs(q(2)) * tscale : *irf_sigma_fixed;
  };
  auto residuals = [&](const Eigen::VectorXd& q) {
    double g, c, s;
    unpack(q, g, c, s);
    Eigen::VectorXd r(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
      r(static_cast<Eigen::Index>(i)) = g2_model(x[i], g, c, s) - y[i];
    return r;
  };
  auto admissible = [](Eigen::VectorXd& q) {
    q(1) = std::clamp(q(1), 0.0, 1.0);
    return q(0) > 0.0;
  };
  auto record = [&](const Eigen::VectorXd& q, double cost, std::size_t it) {
    unpack(q, fit.rise_rate, fit.contrast, fit.irf_sigma);
    fit.residual_norm = std::sqrt(cost / static_cast<double>(n));
    fit.iterations = it;
  };

  Eigen::VectorXd r = residuals(p);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  for (std::size_t it = 1; it <= 500; ++it) {
    Eigen::MatrixXd J(r.size(), np);
    for (Eigen::Index k = 0; k < np; ++k) {
      const double h = 1e-7 * std::max(1.0, std::abs(p(k)));
      Eigen::VectorXd a = p, b = p;
      a(k) += h;
      b(k) -= h;
      J.col(k) = (residuals(a) - residuals(b)) / (2.0 * h);
    }
    const Eigen::MatrixXd A = J.transpose() * J;
    const Eigen::VectorXd grad = J.transpose() * r;
    const double floor = 1e-12 * std::max(1e-300, A.diagonal().maxCoeff());

    // Contrast resting on a bound with the descent direction pointing outward
    // is held fixed for this iteration.
    const bool pinned = (p(1) >= 1.0 && grad(1) < 0.0) || (p(1) <= 0.0 && grad(1) > 0.0);

    bool stalled = true;
    while (lambda < 1e20) {
      Eigen::MatrixXd M = A;
      Eigen::VectorXd rhs = -grad;
      for (Eigen::Index k = 0; k < np; ++k) M(k, k) += lambda * A(k, k) + floor;
      if (pinned) {
        M.row(1).setZero();
        M.col(1).setZero();
        M(1, 1) = 1.0;
        rhs(1) = 0.0;
      }
      const Eigen::VectorXd step = M.ldlt().solve(rhs);
      Eigen::VectorXd trial = p + step;
      if (admissible(trial)) {
        const Eigen::VectorXd rt = residuals(trial);
        const double ct = rt.squaredNorm();
        if (ct <= cost) {
          const double change = (trial - p).norm();
          p = trial;
          r = rt;
          cost = ct;
          lambda = std::max(lambda / 3.0, 1e-12);
          stalled = change <= 1e-9 * std::max(1e-9, p.norm());
          break;
        }
      }
      lambda *= 4.0;
    }
    if (stalled) {
      record(p, cost, it);
      return fit;
    }
  }
  record(p, cost, 500);
  throw FitFailure("g2 fit did not converge within 500 iterations", fit);
}

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() {
  return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

PhotonStream simulate_photon_stream(const ThreeLevelRates& rates, double detection_prob,
                                    double duration, std::uint64_t seed) {
  require_rates(rates);
  require(detection_prob > 0.0 && detection_prob <= 1.0, "detection probability must be in (0, 1]");
  require(std::isfinite(duration) && duration > 0.0, "duration must be finite and > 0");

  SplitMix64 rng(seed);
  PhotonStream out;
  out.duration = duration;
  double t = 0.0;
  int level = 0;  // 0, 1, 2 for levels 1, 2, 3
  while (true) {
    const double total = level == 0 ? rates.k12 : level == 1 ? rates.k21 + rates.k23 : rates.k31;
    const double dt = total > 0.0 ? -std::log(rng.uniform()) / total : duration;
    if (t + dt >= duration) {
      out.time_in_state[level] += duration - t;
      break;
    }
    out.time_in_state[level] += dt;
    t += dt;
    if (level == 0) {
      level = 1;
    } else if (level == 2) {
      level = 0;
    } else if (rates.k23 > 0.0 && rng.uniform() * total < rates.k23) {
      level = 2;
    } else {
      level = 0;
      if (detection_prob >= 1.0 || rng.uniform() < detection_prob) {
        const double stamp = out.timestamps.empty() || t > out.timestamps.back()
                                 ? t
                                 : std::nextafter(out.timestamps.back(), duration);
        out.timestamps.push_back(stamp);
      }
    }
  }
  return out;
}

G2Curve estimate_g2(const std::vector<double>& ts, double bin_width, double max_delay,
                    double duration) {
  if (ts.size() < 1000)
    throw InsufficientData("g2 estimate needs at least 1000 photons, got " + std::to_string(ts.size()));
  require(bin_width > 0.0, "bin width must be > 0");
  require(max_delay >= 10.0 * bin_width, "max delay must be at least 10 bin widths");
  require(std::is_sorted(ts.begin(), ts.end()), "timestamps must be sorted");

  const double T = duration > 0.0 ? duration : ts.back() - ts.front();
  require(T > max_delay, "record shorter than the maximum delay");
  const auto m = static_cast<std::size_t>(std::llround(max_delay / bin_width));
  const double reach = (static_cast<double>(m) + 0.5) * bin_width;

  G2Curve g;
  g.counts.assign(2 * m + 1, 0.0);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    for (std::size_t j = i + 1; j < ts.size(); ++j) {
      const double d = ts[j] - ts[i];
      if (d >= reach) break;
      const auto k = static_cast<std::size_t>(std::floor(d / bin_width + 0.5));
      g.counts[m + k] += 1.0;
      g.counts[m - k] += 1.0;
    }
  }
  const double nn = static_cast<double>(ts.size()) * static_cast<double>(ts.size() - 1);
  for (std::size_t b = 0; b < g.counts.size(); ++b) {
    const double tau = (static_cast<double>(b) - static_cast<double>(m)) * bin_width;
    const double expected = nn * bin_width * (T - std::abs(tau)) / (T * T);
    g.delays.push_back(tau);
    g.values.push_back(g.counts[b] / expected);
  }
  return g;
}

TimeTrace bin_stream(const std::vector<double>& ts, double bin_width, double duration) {
  require(bin_width > 0.0 && duration > 0.0, "bin width and duration must be > 0");
  TimeTrace tr;
  tr.bin_width = bin_width;
  const auto nb = static_cast<std::size_t>(std::ceil(duration / bin_width - 1e-9));
  tr.counts.assign(std::max<std::size_t>(nb, 1), 0);
  for (double t : ts) {
    if (t < 0.0 || t >= duration) continue;
    tr.counts[std::min(tr.counts.size() - 1, static_cast<std::size_t>(t / bin_width))]++;
  }
  return tr;
}

double off_time_fraction(const TimeTrace& trace, double threshold) {
  require(!trace.counts.empty(), "time trace is empty");
  require(threshold >= 0.0, "threshold must be >= 0");
  const auto off = std::count_if(trace.counts.begin(), trace.counts.end(),
                                 [&](std::uint64_t c) { return static_cast<double>(c) <= threshold; });
  return static_cast<double>(off) / static_cast<double>(trace.counts.size());
}

double default_off_threshold(const TimeTrace& trace) {
  require(!trace.counts.empty(), "time trace is empty");
  const std::uint64_t cmax = *std::max_element(trace.counts.begin(), trace.counts.end());
  if (cmax < 2) return 0.0;
  std::vector<double> h(cmax + 1, 0.0);
  for (auto c : trace.counts) h[c] += 1.0;
  std::vector<double> s(h.size());
  for (std::size_t c = 0; c < h.size(); ++c) {
    const std::size_t lo = c == 0 ? 0 : c - 1;
    const std::size_t hi = std::min(h.size() - 1, c + 1);
    double sum = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) sum += h[k];
    s[c] = sum / static_cast<double>(hi - lo + 1);
  }
  std::vector<double> left(s.size()), right(s.size());
  left[0] = s[0];
  for (std::size_t c = 1; c < s.size(); ++c) left[c] = std::max(left[c - 1], s[c]);
  right.back() = s.back();
  for (std::size_t c = s.size() - 1; c-- > 0;) right[c] = std::max(right[c + 1], s[c]);

  // Deepest valley measured against the lower of its two flanking peaks;
  // shallow dips (under 5% of the highest bin) count as noise.
  double best_depth = 0.05 * left.back();
  double threshold = 0.0;
  for (std::size_t v = 1; v + 1 < s.size(); ++v) {
    const double depth = std::min(left[v - 1], right[v + 1]) - s[v];
    if (depth > best_depth) {
      best_depth = depth;
      threshold = static_cast<double>(v);
    }
  }
  return threshold;
}

PhotonBudget photon_budget(double S_de, double eta_det, double N2_on, double k21,
                           double off_fraction) {
  require(S_de >= 0.0 && k21 >= 0.0, "rates must be >= 0");
  require(eta_det > 0.0 && eta_det <= 1.0, "eta_det must be in (0, 1]");
  require(N2_on >= 0.0 && N2_on <= 1.0, "N2_on must be in [0, 1]");
  require(off_fraction >= 0.0 && off_fraction < 1.0, "off fraction must be in [0, 1)");
  PhotonBudget b{S_de, eta_det, S_de / eta_det, N2_on, k21, off_fraction, 0.0, 0.0};
  b.S_em = N2_on * k21 * (1.0 - off_fraction);
  if (!(b.S_em > 0.0)) throw UndefinedEfficiency("emitted photon rate is zero");
  b.eta = b.S_co / b.S_em;
  return b;
}

double saturation_detected_rate(double power_mw, double excitation_coeff, double k21,
                                double chain_eff,
                                const std::function<double(double)>& off_fraction_at_power) {
  require(power_mw >= 0.0, "power must be >= 0");
  require(excitation_coeff > 0.0, "excitation coefficient must be > 0");
  const double off = off_fraction_at_power ? off_fraction_at_power(power_mw) : 0.0;
  return chain_eff * k21 * on_time_excited_population(excitation_coeff * power_mw, k21) * (1.0 - off);
}

}  // namespace antenna::photo
