#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "antenna/bfp.hpp"
#include "antenna/design.hpp"
#include "antenna/emission.hpp"
#include "antenna/photophysics.hpp"
#include "antenna/stack.hpp"

namespace antenna::cli {

/// Malformed command line or config file (exit 2).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Config value violating a module precondition (exit 3).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable input or unwritable output (exit 5).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode : int { ok = 0, parse_error = 2, validation_error = 3, module_error = 4, io_error = 5 };

struct RunConfig {
  std::string command;
  std::string output_dir = "out";

  double n_substrate = 1.78;
  double n_middle = 1.5;
  double n_superstrate = 1.0;
  double t_nm = 350.0;
  double h_nm = 200.0;
  double wavelength_nm = 580.0;
  /// "thickness:index,thickness:index,..." bottom to top; replaces n_middle / t_nm when set.
  std::string layers;
  std::size_t emitter_layer = 0;
  double film_nm = 0.0;
  double film_index = 1.7;

  double na = 1.65;
  double immersion_index = 1.78;
  std::optional<double> angle_step_deg;

  double t_min = 100.0, t_max = 800.0;
  double h_min = 50.0, h_max = 750.0;
  std::size_t t_steps = 50, h_steps = 50;
  double tolerance_nm = 0.1;
  std::size_t coarse_steps = 15;

  double fwhm_deg = 2.0;
  std::size_t pixels = 512;
  int pgm_bits = 16;
  std::string pattern_csv;

  double k12 = 6.3e7, k21 = 1.26e8, k23 = 0.0, k31 = 0.0;
  double detection_prob = 0.1;
  double duration_s = 0.01;
  std::uint64_t seed = 42;
  double g2_bin_s = 0.0;
  double g2_max_delay_s = 0.0;
  std::string g2_csv;
  std::string irf_sigma_s = "free";

  double s_de = 4.9e7, eta_det = 0.518, n2_on = 0.82, off_fraction = 0.05;
};

/// Parses `<command> [--config FILE] [--key value]...`; flags override file values.
/// Throws ParseError for unknown keys, bad values or unknown commands.
RunConfig parse_config(const std::vector<std::string>& args);

/// Throws ValidationError naming the first offending key.
void validate(const RunConfig& config);

/// Layer stack described by the config.
LayerStack build_stack(const RunConfig& config);

struct Artifact {
  std::string name;
  std::string bytes;
};

/// Computes the command's artifacts; human-readable summaries go to `out`.
std::vector<Artifact> run(const RunConfig& config, std::ostream& out);

/// Writes the artifacts plus manifest.txt ("<sha256>  <name>" per artifact)
/// and returns the manifest text. Throws IoError.
std::string write_outputs(const std::vector<Artifact>& artifacts, const std::filesystem::path& dir);

/// Full front end; returns the process exit status.
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string format_number(double v);
std::string sha256_hex(const std::string& bytes);

std::string spectrum_csv(const AngularSpectrum& lower, const AngularSpectrum& upper);
/// Lower-hemisphere rows of a spectrum CSV. Throws IoError on malformed input.
AngularSpectrum read_lower_spectrum(const std::string& csv_text, double medium_index);
std::string profile_csv(const BfpProfile& raw, const BfpProfile& shown);
/// Binary P5 graymap, max-normalized; bits is 8 or 16 (big-endian samples).
std::string encode_pgm(const BfpImage& image, int bits);
std::string map_csv(const design::EfficiencyMap& map);
std::string timestamps_csv(const std::vector<double>& ts);
std::string g2_csv(const photo::G2Curve& curve);
/// Throws IoError on malformed input.
photo::G2Curve read_g2_csv(const std::string& csv_text);

}  // namespace antenna::cli
