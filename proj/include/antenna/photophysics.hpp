#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "antenna/errors.hpp"

namespace antenna::photo {

/// Rates of the ground (1), excited singlet (2) and triplet (3) levels, in 1/s.
struct ThreeLevelRates {
  double k12 = 0.0;
  double k21 = 0.0;
  double k23 = 0.0;
  double k31 = 0.0;

  /// True when both triplet rates are below 1e-2 of k12 + k21.
  bool slow_triplet() const;
};

struct Populations {
  double N1 = 1.0;
  double N2 = 0.0;
  double N3 = 0.0;
};

/// Steady-state populations. Throws AbsorbingTriplet for k23 > 0 with k31 = 0,
/// ContractViolation for negative rates or k21 <= 0.
Populations steady_state(const ThreeLevelRates& rates);

/// Excited population of the two-level system formed by the on-time dynamics.
///
/// Returns k12 / (k12 + k21). The form k21 / (k12 + k21), with the indices
/// swapped, is sometimes quoted; it gives 1 for an unpumped emitter and cannot
/// reach the measured 0.82 at high power.
double on_time_excited_population(double k12, double k21);

struct G2Curve {
  std::vector<double> delays;
  std::vector<double> values;
  std::vector<double> counts;
};

struct G2Fit {
  double rise_rate = 0.0;
  double contrast = 0.0;
  double irf_sigma = 0.0;
  double residual_norm = 0.0;
  std::size_t iterations = 0;
  bool low_contrast = false;
  std::vector<std::string> warnings;
};

class FitFailure : public Error {
 public:
  FitFailure(const std::string& what, G2Fit last) : Error(what), last_(std::move(last)) {}
  const G2Fit& last_iterate() const noexcept { return last_; }

 private:
  G2Fit last_;
};

/// 1 - contrast * exp(-rise_rate |delay|) convolved with a Gaussian of
/// standard deviation sqrt(2) * irf_sigma (one Gaussian response per detector).
double g2_model(double delay, double rise_rate, double contrast, double irf_sigma);

/// Levenberg-Marquardt fit of g2_model. With irf_sigma_fixed set, the
/// response width is held at that value; otherwise it is fitted.
/// Throws FitFailure after 500 iterations without convergence.
G2Fit fit_g2(const G2Curve& curve, std::optional<double> irf_sigma_fixed = std::nullopt);

/// SplitMix64 generator; the n-th output depends only on the seed and n.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  /// Uniform double in the open interval (0, 1).
  double uniform();

 private:
  std::uint64_t state_;
};

struct PhotonStream {
  std::vector<double> timestamps;
  double duration = 0.0;
  /// Total time spent in levels 1, 2 and 3.
  double time_in_state[3] = {0.0, 0.0, 0.0};
};

/// Exact stochastic simulation of the three-level emitter starting in the
/// ground state at t = 0. Each 2 -> 1 decay is detected with detection_prob.
PhotonStream simulate_photon_stream(const ThreeLevelRates& rates, double detection_prob,
                                    double duration, std::uint64_t seed);

/// Symmetric pair-correlation histogram of a stream normalized by the
/// uncorrelated expectation N (N - 1) bin (T - |tau|) / T^2. A duration <= 0
/// uses the span between first and last timestamp. Throws InsufficientData
/// below 1000 timestamps.
G2Curve estimate_g2(const std::vector<double>& timestamps, double bin_width, double max_delay,
                    double duration = 0.0);

struct TimeTrace {
  double bin_width = 0.0;
  std::vector<std::uint64_t> counts;
};

TimeTrace bin_stream(const std::vector<double>& timestamps, double bin_width, double duration);

/// Fraction of bins with counts <= threshold.
double off_time_fraction(const TimeTrace& trace, double threshold);

/// Count level at the deepest valley of the smoothed count histogram between
/// an off mode and an on mode; 0 when the histogram has no valley deeper than
/// 5% of its highest bin.
double default_off_threshold(const TimeTrace& trace);

struct PhotonBudget {
  double S_de = 0.0;
  double eta_det = 0.0;
  double S_co = 0.0;
  double N2_on = 0.0;
  double k21 = 0.0;
  double off_fraction = 0.0;
  double S_em = 0.0;
  double eta = 0.0;
};

/// Throws UndefinedEfficiency when the emitted rate is zero.
PhotonBudget photon_budget(double S_de, double eta_det, double N2_on, double k21,
                           double off_fraction);

/// Detected count rate at the given excitation power.
double saturation_detected_rate(double power_mw, double excitation_coeff, double k21,
                                double chain_eff,
                                const std::function<double(double)>& off_fraction_at_power);

}  // namespace antenna::photo
