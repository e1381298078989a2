#include "antenna/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "antenna/errors.hpp"

namespace antenna::cli {

namespace {

const std::vector<std::string> commands = {"pattern", "map",       "optimize", "bfp",
                                           "photo-sim", "photo-fit", "budget"};

constexpr double deg = std::numbers::pi / 180.0;

void configure(CLI::App& app, RunConfig& c, double& angle_step) {
  app.add_option("command", c.command, "pattern|map|optimize|bfp|photo-sim|photo-fit|budget")
      ->required()
      ->check(CLI::IsMember(commands));
  app.set_config("--config", "", "INI-style key = value file; flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);

  app.add_option("--output_dir", c.output_dir);
  app.add_option("--n_substrate", c.n_substrate);
  app.add_option("--n_middle", c.n_middle);
  app.add_option("--n_superstrate", c.n_superstrate);
  app.add_option("--t_nm", c.t_nm);
  app.add_option("--h_nm", c.h_nm);
  app.add_option("--wavelength_nm", c.wavelength_nm);
  app.add_option("--layers", c.layers, "thickness:index,... bottom to top");
  app.add_option("--emitter_layer", c.emitter_layer);
  app.add_option("--film_nm", c.film_nm);
  app.add_option("--film_index", c.film_index);
  app.add_option("--na", c.na);
  app.add_option("--immersion_index", c.immersion_index);
  app.add_option("--angle_step_deg", angle_step);

  app.add_option("--t_min", c.t_min);
  app.add_option("--t_max", c.t_max);
  app.add_option("--h_min", c.h_min);
  app.add_option("--h_max", c.h_max);
  app.add_option("--t_steps", c.t_steps);
  app.add_option("--h_steps", c.h_steps);
  app.add_option("--tolerance_nm", c.tolerance_nm);
  app.add_option("--coarse_steps", c.coarse_steps);

  app.add_option("--fwhm_deg", c.fwhm_deg, "0 disables smoothing");
  app.add_option("--pixels", c.pixels);
  app.add_option("--pgm_bits", c.pgm_bits);
  app.add_option("--pattern_csv", c.pattern_csv);

  app.add_option("--k12", c.k12);
  app.add_option("--k21", c.k21);
  app.add_option("--k23", c.k23);
  app.add_option("--k31", c.k31);
  app.add_option("--detection_prob", c.detection_prob);
  app.add_option("--duration_s", c.duration_s);
  app.add_option("--seed", c.seed);
  app.add_option("--g2_bin_s", c.g2_bin_s);
  app.add_option("--g2_max_delay_s", c.g2_max_delay_s);
  app.add_option("--g2_csv", c.g2_csv);
  app.add_option("--irf_sigma_s", c.irf_sigma_s, "seconds, or 'free'");

  app.add_option("--s_de", c.s_de);
  app.add_option("--eta_det", c.eta_det);
  app.add_option("--n2_on", c.n2_on);
  app.add_option("--off_fraction", c.off_fraction);
}

void check(bool ok, const std::string& key, const std::string& msg) {
  if (!ok) throw ValidationError(key + ": " + msg);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<Layer> parse_layers(const std::string& text) {
  std::vector<Layer> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ParseError("layers: expected thickness:index, got '" + item + "'");
    const auto t = parse_double(std::string_view(item).substr(0, colon));
    const auto n = parse_double(std::string_view(item).substr(colon + 1));
    if (!t || !n) throw ParseError("layers: malformed entry '" + item + "'");
    out.push_back({*t, *n});
  }
  if (out.empty()) throw ParseError("layers: empty layer list");
  return out;
}

std::optional<double> fixed_irf(const RunConfig& c) {
  if (c.irf_sigma_s == "free") return std::nullopt;
  const auto v = parse_double(c.irf_sigma_s);
  if (!v) throw ParseError("irf_sigma_s: expected a number of seconds or 'free', got '" + c.irf_sigma_s + "'");
  return v;
}

std::vector<std::vector<std::string>> read_rows(const std::string& text, std::size_t columns) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(text);
  std::string line;
  bool header = true;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != columns)
      throw IoError("CSV row with " + std::to_string(cells.size()) + " columns, expected " +
                    std::to_string(columns) + ": '" + line + "'");
    rows.push_back(std::move(cells));
  }
  return rows;
}

double cell_number(const std::string& cell) {
  const auto v = parse_double(cell);
  if (!v) throw IoError("CSV cell is not a number: '" + cell + "'");
  return *v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ObjectiveGeometry objective_of(const RunConfig& c) { return {c.na, c.immersion_index}; }

double angle_step(const RunConfig& c) {
  return c.angle_step_deg ? *c.angle_step_deg * deg : default_angle_resolution;
}

std::string key_values(const std::vector<std::pair<std::string, std::string>>& kv) {
  std::string s;
  for (const auto& [k, v] : kv) s += k + "=" + v + "\n";
  return s;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw IoError("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

RunConfig parse_config(const std::vector<std::string>& args) {
  RunConfig c;
  double step = 0.0;
  CLI::App app{"Planar dielectric antenna and single-emitter photophysics toolkit", "antenna"};
  configure(app, c, step);
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success&) {
    throw;
  } catch (const CLI::Error& e) {
    throw ParseError(e.what());
  }
  if (app.get_option("--angle_step_deg")->count() > 0) c.angle_step_deg = step;
  if (!c.layers.empty()) parse_layers(c.layers);
  fixed_irf(c);
  return c;
}

LayerStack build_stack(const RunConfig& c) {
  LayerStack s;
  if (c.layers.empty()) {
    s = three_layer_antenna(c.n_substrate, c.n_middle, c.n_superstrate, c.t_nm, c.h_nm, c.wavelength_nm);
  } else {
    s.substrate.index = c.n_substrate;
    s.superstrate.index = c.n_superstrate;
    s.layers = parse_layers(c.layers);
    s.emitter_layer = c.emitter_layer;
    s.emitter_height_nm = c.h_nm;
    s.wavelength_nm = c.wavelength_nm;
  }
  if (c.film_nm > 0.0) s = with_emitter_film(s, c.film_nm, c.film_index);
  return s;
}

void validate(const RunConfig& c) {
  const std::string& cmd = c.command;
  const bool optical = cmd == "pattern" || cmd == "map" || cmd == "optimize" || cmd == "bfp";
  if (optical) {
    for (const auto& [key, n] : {std::pair{"n_substrate", c.n_substrate}, {"n_middle", c.n_middle},
                                 {"n_superstrate", c.n_superstrate}, {"film_index", c.film_index}})
      check(std::isfinite(n) && n >= 1.0, key, "refractive index must be finite and >= 1");
    check(finite_positive(c.wavelength_nm), "wavelength_nm", "must be > 0");
    check(std::isfinite(c.na) && c.na > 0.0 && c.na < c.immersion_index, "na",
          "numerical aperture " + format_number(c.na) + " must lie in (0, immersion_index = " +
              format_number(c.immersion_index) + ")");
    check(c.immersion_index == c.n_substrate, "immersion_index",
          "must equal n_substrate (the objective looks into the substrate)");
    check(c.film_nm >= 0.0 && std::isfinite(c.film_nm), "film_nm", "must be >= 0");
    if (c.angle_step_deg)
      check(*c.angle_step_deg > 0.0 && *c.angle_step_deg * deg <= 0.05, "angle_step_deg",
            "must lie in (0, 0.05 rad]");
    if (c.layers.empty()) {
      check(finite_positive(c.t_nm), "t_nm", "must be > 0");
      check(finite_positive(c.h_nm) && c.h_nm < c.t_nm, "h_nm",
            "emitter height must lie strictly inside the layer (0 < h_nm < t_nm)");
    } else {
      const auto layers = parse_layers(c.layers);
      check(c.emitter_layer < layers.size(), "emitter_layer", "index out of range");
      for (const auto& l : layers) {
        check(finite_positive(l.thickness_nm), "layers", "thicknesses must be > 0");
        check(std::isfinite(l.index) && l.index >= 1.0, "layers", "indices must be finite and >= 1");
      }
      check(finite_positive(c.h_nm) && c.h_nm < layers[c.emitter_layer].thickness_nm, "h_nm",
            "emitter height must lie strictly inside the emitter layer");
    }
    if (c.film_nm > 0.0) {
      check(cmd != "map" && cmd != "optimize", "film_nm", "not supported by map/optimize");
      try {
        build_stack(c);
      } catch (const InvalidStack& e) {
        throw ValidationError(std::string("film_nm: ") + e.what());
      }
    }
    const auto problems = validate_stack(build_stack(c));
    if (!problems.empty()) throw ValidationError("stack: " + problems.front());
  }
  if (cmd == "map" || cmd == "optimize") {
    check(finite_positive(c.t_min) && c.t_min <= c.t_max && std::isfinite(c.t_max), "t_min",
          "t range must satisfy 0 < t_min <= t_max");
    check(finite_positive(c.h_min) && c.h_min <= c.h_max && std::isfinite(c.h_max), "h_min",
          "h range must satisfy 0 < h_min <= h_max");
  }
  if (cmd == "map") {
    check(c.t_steps >= 2, "t_steps", "must be >= 2");
    check(c.h_steps >= 2, "h_steps", "must be >= 2");
  }
  if (cmd == "optimize") {
    check(finite_positive(c.tolerance_nm), "tolerance_nm", "must be > 0");
    check(c.coarse_steps >= 15, "coarse_steps", "must be >= 15");
  }
  if (cmd == "bfp") {
    check(std::isfinite(c.fwhm_deg) && c.fwhm_deg >= 0.0, "fwhm_deg", "must be >= 0");
    check(c.pixels >= 16 && c.pixels % 2 == 0, "pixels", "must be even and >= 16");
    check(c.pgm_bits == 8 || c.pgm_bits == 16, "pgm_bits", "must be 8 or 16");
  }
  if (cmd == "photo-sim") {
    for (const auto& [key, k] : {std::pair{"k12", c.k12}, {"k23", c.k23}, {"k31", c.k31}})
      check(std::isfinite(k) && k >= 0.0, key, "rate must be finite and >= 0");
    check(finite_positive(c.k21), "k21", "must be > 0");
    check(!(c.k23 > 0.0 && c.k31 == 0.0), "k31", "must be > 0 when k23 > 0 (absorbing triplet)");
    check(c.detection_prob > 0.0 && c.detection_prob <= 1.0, "detection_prob", "must lie in (0, 1]");
    check(finite_positive(c.duration_s), "duration_s", "must be > 0");
    check(c.g2_bin_s >= 0.0, "g2_bin_s", "must be >= 0");
    if (c.g2_bin_s > 0.0)
      check(c.g2_max_delay_s >= 10.0 * c.g2_bin_s && c.g2_max_delay_s < c.duration_s, "g2_max_delay_s",
            "must be at least 10 bins and shorter than duration_s");
  }
  if (cmd == "photo-fit") {
    check(!c.g2_csv.empty(), "g2_csv", "path to a delay,g2 CSV is required");
    const auto s = fixed_irf(c);
    check(!s || *s >= 0.0, "irf_sigma_s", "must be >= 0");
  }
  if (cmd == "budget") {
    check(std::isfinite(c.s_de) && c.s_de >= 0.0, "s_de", "must be >= 0");
    check(c.eta_det > 0.0 && c.eta_det <= 1.0, "eta_det", "must lie in (0, 1]");
    check(c.n2_on >= 0.0 && c.n2_on <= 1.0, "n2_on", "must lie in [0, 1]");
    check(std::isfinite(c.k21) && c.k21 >= 0.0, "k21", "must be >= 0");
    check(c.off_fraction >= 0.0 && c.off_fraction < 1.0, "off_fraction", "must lie in [0, 1)");
  }
}

std::string spectrum_csv(const AngularSpectrum& lower, const AngularSpectrum& upper) {
  std::string s = "theta_deg,dP_dtheta,halfspace\n";
  for (const auto* sp : {&lower, &upper}) {
    const char* name = sp->half_space == Hemisphere::lower ? "lower" : "upper";
    for (std::size_t i = 0; i < sp->angles.size(); ++i)
      s += format_number(sp->angles[i] / deg) + "," + format_number(sp->density[i]) + "," + name + "\n";
  }
  return s;
}

AngularSpectrum read_lower_spectrum(const std::string& text, double medium_index) {
  AngularSpectrum s;
  s.half_space = Hemisphere::lower;
  s.medium_index = medium_index;
  for (const auto& row : read_rows(text, 3)) {
    if (row[2] != "lower") {
      if (row[2] != "upper") throw IoError("unknown halfspace '" + row[2] + "'");
      continue;
    }
    s.angles.push_back(cell_number(row[0]) * deg);
    s.density.push_back(cell_number(row[1]));
  }
  if (s.angles.empty()) throw IoError("pattern CSV has no lower-halfspace rows");
  return s;
}

std::string profile_csv(const BfpProfile& raw, const BfpProfile& shown) {
  std::string s = "rho,intensity_raw,intensity\n";
  for (std::size_t i = 0; i < raw.na_coordinate.size(); ++i)
    s += format_number(raw.na_coordinate[i]) + "," + format_number(raw.intensity[i]) + "," +
         format_number(shown.intensity[i]) + "\n";
  return s;
}

std::string encode_pgm(const BfpImage& image, int bits) {
  const unsigned maxval = bits == 16 ? 65535u : 255u;
  std::string s = "P5\n" + std::to_string(image.pixels_across) + " " +
                  std::to_string(image.pixels_across) + "\n" + std::to_string(maxval) + "\n";
  const double peak = image.pixels.empty() ? 0.0 : *std::max_element(image.pixels.begin(), image.pixels.end());
  for (double v : image.pixels) {
    const auto q = peak > 0.0 ? static_cast<unsigned>(std::lround(v / peak * maxval)) : 0u;
    if (bits == 16) s += static_cast<char>((q >> 8) & 0xFF);
    s += static_cast<char>(q & 0xFF);
  }
  return s;
}

std::string map_csv(const design::EfficiencyMap& m) {
  std::string s = "t_nm,h_nm,eta,status\n";
  for (std::size_t i = 0; i < m.t_grid.size(); ++i)
    for (std::size_t j = 0; j < m.h_grid.size(); ++j) {
      const auto st = m.status[m.index(i, j)];
      const char* name = st == design::CellStatus::valid                   ? "valid"
                         : st == design::CellStatus::emitter_outside_layer ? "emitter_outside_layer"
                                                                           : "numerical_error";
      s += format_number(m.t_grid[i]) + "," + format_number(m.h_grid[j]) + "," +
           format_number(m.at(i, j)) + "," + name + "\n";
    }
  return s;
}

std::string timestamps_csv(const std::vector<double>& ts) {
  std::string s = "t_s\n";
  for (double t : ts) s += format_number(t) + "\n";
  return s;
}

std::string g2_csv(const photo::G2Curve& curve) {
  std::string s = "delay_s,g2\n";
  for (std::size_t i = 0; i < curve.delays.size(); ++i)
    s += format_number(curve.delays[i]) + "," + format_number(curve.values[i]) + "\n";
  return s;
}

photo::G2Curve read_g2_csv(const std::string& text) {
  photo::G2Curve c;
  for (const auto& row : read_rows(text, 2)) {
    c.delays.push_back(cell_number(row[0]));
    c.values.push_back(cell_number(row[1]));
  }
  return c;
}

std::vector<Artifact> run(const RunConfig& c, std::ostream& out) {
  const auto& cmd = c.command;
  std::vector<Artifact> arts;
  const auto objective = objective_of(c);

  if (cmd == "pattern") {
    const auto stack = build_stack(c);
    const auto lower = angular_density(stack, Hemisphere::lower, angle_step(c));
    const auto upper = angular_density(stack, Hemisphere::upper, angle_step(c));
    const auto power = total_radiated_power(stack);
    const double eta = collection_efficiency(stack, objective);
    arts.push_back({"pattern.csv", spectrum_csv(lower, upper)});
    const std::string summary = key_values({{"eta", format_number(eta)},
                                            {"lower_fraction", format_number(power.lower_fraction)},
                                            {"upper_fraction", format_number(power.upper_fraction)},
                                            {"total_normalized", format_number(power.total_normalized)}});
    arts.push_back({"summary.txt", summary});
    out << "eta=" << format_number(eta) << "\n";
  } else if (cmd == "map") {
    const auto m = design::efficiency_map(build_stack(c), {c.t_min, c.t_max}, {c.h_min, c.h_max},
                                          {c.t_steps, c.h_steps}, objective);
    arts.push_back({"map.csv", map_csv(m)});
    out << "map: " << m.eta.size() << " cells\n";
  } else if (cmd == "optimize") {
    design::OptimizerOptions opts;
    opts.coarse_steps = c.coarse_steps;
    const auto o = design::optimize(build_stack(c), {c.t_min, c.t_max}, {c.h_min, c.h_max}, objective,
                                    c.tolerance_nm, opts);
    const std::string text = key_values({{"t_star_nm", format_number(o.t_star)},
                                         {"h_star_nm", format_number(o.h_star)},
                                         {"eta_star", format_number(o.eta_star)},
                                         {"evaluations", std::to_string(o.evaluations)}});
    arts.push_back({"optimum.txt", text});
    out << text;
  } else if (cmd == "bfp") {
    AngularSpectrum lower;
    if (!c.pattern_csv.empty())
      lower = read_lower_spectrum(read_file(c.pattern_csv), c.n_substrate);
    else
      lower = angular_density(build_stack(c), Hemisphere::lower, angle_step(c));
    const auto raw = bfp_profile(lower, objective);
    const auto shown = c.fwhm_deg > 0.0 ? apply_resolution(raw, c.fwhm_deg, c.n_substrate) : raw;
    const auto image = render_image(shown, c.pixels);
    arts.push_back({"bfp_profile.csv", profile_csv(raw, shown)});
    arts.push_back({"bfp.pgm", encode_pgm(image, c.pgm_bits)});
    out << "bfp: profile energy " << format_number(profile_energy(shown, c.n_substrate)) << ", "
        << find_lobes(profile_as_spectrum(shown, c.n_substrate), 0.1).size() << " lobe(s)\n";
  } else if (cmd == "photo-sim") {
    const auto s = photo::simulate_photon_stream({c.k12, c.k21, c.k23, c.k31}, c.detection_prob,
                                                 c.duration_s, c.seed);
    arts.push_back({"photons.csv", timestamps_csv(s.timestamps)});
    if (c.g2_bin_s > 0.0)
      arts.push_back({"g2.csv", g2_csv(photo::estimate_g2(s.timestamps, c.g2_bin_s, c.g2_max_delay_s, s.duration))});
    out << "photo-sim: " << s.timestamps.size() << " detected photons\n";
  } else if (cmd == "photo-fit") {
    const auto fit = photo::fit_g2(read_g2_csv(read_file(c.g2_csv)), fixed_irf(c));
    for (const auto& w : fit.warnings) out << "warning: " << w << "\n";
    const std::string text = key_values({{"rise_rate_per_s", format_number(fit.rise_rate)},
                                         {"contrast", format_number(fit.contrast)},
                                         {"irf_sigma_s", format_number(fit.irf_sigma)},
                                         {"residual_norm", format_number(fit.residual_norm)},
                                         {"iterations", std::to_string(fit.iterations)},
                                         {"low_contrast", fit.low_contrast ? "true" : "false"}});
    arts.push_back({"fit.txt", text});
    out << text;
  } else if (cmd == "budget") {
    const auto b = photo::photon_budget(c.s_de, c.eta_det, c.n2_on, c.k21, c.off_fraction);
    const std::string text = key_values({{"S_de", format_number(b.S_de)},
                                         {"eta_det", format_number(b.eta_det)},
                                         {"S_co", format_number(b.S_co)},
                                         {"N2_on", format_number(b.N2_on)},
                                         {"k21", format_number(b.k21)},
                                         {"off_fraction", format_number(b.off_fraction)},
                                         {"S_em", format_number(b.S_em)},
                                         {"eta", format_number(b.eta)}});
    arts.push_back({"budget.txt", text});
    out << text;
  } else {
    throw ParseError("unknown command '" + cmd + "'");
  }
  return arts;
}

std::string write_outputs(const std::vector<Artifact>& artifacts, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  std::map<std::string, std::string> sums;
  auto write = [&](const std::string& name, const std::string& bytes) {
    std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    f.close();
    if (!f) throw IoError("cannot write " + (dir / name).string());
  };
  for (const auto& a : artifacts) {
    write(a.name, a.bytes);
    sums[a.name] = sha256_hex(a.bytes);
  }
  std::string manifest;
  for (const auto& [name, sum] : sums) manifest += sum + "  " + name + "\n";
  write("manifest.txt", manifest);
  return manifest;
}

int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig config;
  try {
    config = parse_config(args);
  } catch (const CLI::Success&) {
    RunConfig scratch;
    double step = 0.0;
    CLI::App app{"Planar dielectric antenna and single-emitter photophysics toolkit", "antenna"};
    configure(app, scratch, step);
    out << app.help();
    return ExitCode::ok;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return ExitCode::parse_error;
  }

  try {
    validate(config);
  } catch (const ValidationError& e) {
    err << "invalid configuration: " << e.what() << "\n";
    return ExitCode::validation_error;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return ExitCode::parse_error;
  }

  try {
    const auto artifacts = run(config, out);
    write_outputs(artifacts, config.output_dir);
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return ExitCode::io_error;
  } catch (const Error& e) {
    err << config.command << " failed: " << e.what() << "\n";
    return ExitCode::module_error;
  }
  return ExitCode::ok;
}

}  // namespace antenna::cli
