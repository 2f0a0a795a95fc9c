#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "nusest/bound_check.hpp"
#include "nusest/channel.hpp"
#include "nusest/errors.hpp"
#include "nusest/experiments.hpp"
#include "nusest/io.hpp"
#include "nusest/version.hpp"

namespace {

namespace fs = std::filesystem;
using nusest::ordered_json;

std::string timestamp_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

// Validator for the spectral usage ratio: the open-closed interval ]0, 1].
const CLI::Validator kAlphaRange{
    [](std::string& input) -> std::string {
      double value = 0.0;
      try {
        value = std::stod(input);
      } catch (...) {
        return "alpha must be a number, got '" + input + "'";
      }
      if (!(value > 0.0) || value > 1.0) {
        return "alpha must lie in ]0, 1], got " + input;
      }
      return {};
    },
    "FLOAT in ]0, 1]", "alpha_range"};

struct Fig23Options {
  double alpha = 0.25;
  int trials = 2000;
  std::uint64_t seed = 1;
  double gamma_db = 30.0;
  std::string out = "out";
  std::string format = "csv";
  bool data_carriers_only = false;
  bool dump_channels = false;
  std::string config_path;
};

struct Fig6Options {
  double alpha = 0.25;
  double gamma_db = 30.0;
  int tau_points = 101;
  std::string out = "out";
  std::string format = "csv";
  std::string config_path;
};

struct BoundOptions {
  int configurations = 50;
  std::uint64_t seed = 1;
  int noise_draws = 10000;
  double bound_scale = 1.0;
  std::string config_path;
};

// Config files are plain key=value lines ('#' starts a comment); keys are the
// long option names without the leading dashes.  The vendored CLI11 only
// processes config files attached to the root app, not to subcommands, so
// --config is applied here after parsing; options given on the command line
// keep precedence over the file.
struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

std::string trim_copy(std::string text) {
  const auto not_space = [](unsigned char c) { return std::isspace(c) == 0; };
  text.erase(text.begin(), std::find_if(text.begin(), text.end(), not_space));
  text.erase(std::find_if(text.rbegin(), text.rend(), not_space).base(), text.end());
  return text;
}

std::vector<ConfigEntry> read_config_entries(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw nusest::IoError("cannot open config file: " + path);
  }
  std::vector<ConfigEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = trim_copy(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw nusest::ConfigError("config file line " + std::to_string(lineno) +
                                ": expected key=value, got '" + line + "'");
    }
    entries.push_back({trim_copy(line.substr(0, eq)), trim_copy(line.substr(eq + 1)), lineno});
  }
  return entries;
}

double parse_double_value(const std::string& text) {
  std::size_t consumed = 0;
  const double value = std::stod(text, &consumed);
  if (consumed != text.size()) {
    throw std::invalid_argument(text);
  }
  return value;
}

long long parse_int_value(const std::string& text) {
  std::size_t consumed = 0;
  const long long value = std::stoll(text, &consumed);
  if (consumed != text.size()) {
    throw std::invalid_argument(text);
  }
  return value;
}

int parse_positive_int(const std::string& text) {
  const long long value = parse_int_value(text);
  if (value < 1 || value > std::numeric_limits<int>::max()) {
    throw std::out_of_range(text);
  }
  return static_cast<int>(value);
}

std::uint64_t parse_u64_value(const std::string& text) {
  if (text.find('-') != std::string::npos) {
    throw std::invalid_argument(text);
  }
  std::size_t consumed = 0;
  const unsigned long long value = std::stoull(text, &consumed);
  if (consumed != text.size()) {
    throw std::invalid_argument(text);
  }
  return value;
}

bool parse_bool_value(std::string text) {
  for (char& c : text) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (text == "1" || text == "true" || text == "yes" || text == "on") {
    return true;
  }
  if (text == "0" || text == "false" || text == "no" || text == "off") {
    return false;
  }
  throw std::invalid_argument(text);
}

std::string parse_format_value(const std::string& text) {
  if (text != "csv" && text != "json") {
    throw std::invalid_argument(text);
  }
  return text;
}

using ConfigSetters = std::map<std::string, std::function<void(const std::string&)>>;

void apply_config_file(const CLI::App& sub, const std::string& path,
                       const ConfigSetters& setters) {
  if (path.empty()) {
    return;
  }
  for (const ConfigEntry& entry : read_config_entries(path)) {
    const auto it = setters.find(entry.key);
    if (it == setters.end()) {
      throw nusest::ConfigError("config file line " + std::to_string(entry.line) +
                                ": unknown key '" + entry.key + "'");
    }
    if (sub.count("--" + entry.key) > 0) {
      continue;  // command-line flags override the file
    }
    try {
      it->second(entry.value);
    } catch (const nusest::ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw nusest::ConfigError("config file line " + std::to_string(entry.line) +
                                ": invalid value '" + entry.value + "' for '" + entry.key + "'");
    }
  }
}

ConfigSetters fig23_setters(Fig23Options& opt) {
  return {
      {"alpha", [&opt](const std::string& v) { opt.alpha = parse_double_value(v); }},
      {"trials", [&opt](const std::string& v) { opt.trials = parse_positive_int(v); }},
      {"seed", [&opt](const std::string& v) { opt.seed = parse_u64_value(v); }},
      {"gamma-db", [&opt](const std::string& v) { opt.gamma_db = parse_double_value(v); }},
      {"out", [&opt](const std::string& v) { opt.out = v; }},
      {"format", [&opt](const std::string& v) { opt.format = parse_format_value(v); }},
      {"data-carriers-only",
       [&opt](const std::string& v) { opt.data_carriers_only = parse_bool_value(v); }},
      {"dump-channels", [&opt](const std::string& v) { opt.dump_channels = parse_bool_value(v); }},
  };
}

ConfigSetters fig6_setters(Fig6Options& opt) {
  return {
      {"alpha", [&opt](const std::string& v) { opt.alpha = parse_double_value(v); }},
      {"gamma-db", [&opt](const std::string& v) { opt.gamma_db = parse_double_value(v); }},
      {"tau-points", [&opt](const std::string& v) { opt.tau_points = parse_positive_int(v); }},
      {"out", [&opt](const std::string& v) { opt.out = v; }},
      {"format", [&opt](const std::string& v) { opt.format = parse_format_value(v); }},
  };
}

ConfigSetters bound_setters(BoundOptions& opt) {
  return {
      {"configs",
       [&opt](const std::string& v) {
         const long long value = parse_int_value(v);
         if (value < 0 || value > std::numeric_limits<int>::max()) {
           throw std::out_of_range(v);
         }
         opt.configurations = static_cast<int>(value);
       }},
      {"seed", [&opt](const std::string& v) { opt.seed = parse_u64_value(v); }},
      {"draws", [&opt](const std::string& v) { opt.noise_draws = parse_positive_int(v); }},
      {"bound-scale", [&opt](const std::string& v) { opt.bound_scale = parse_double_value(v); }},
  };
}

ordered_json manifest_header(const std::string& command) {
  ordered_json manifest;
  manifest["tool"] = "nusest";
  manifest["version"] = nusest::kVersion;
  manifest["command"] = command;
  return manifest;
}

void write_manifest(const fs::path& dir, ordered_json manifest, double duration_ms,
                    const std::vector<fs::path>& data_files) {
  manifest["seed_scheme"] = nusest::kSeedScheme;
  manifest["duration_ms"] = duration_ms;
  manifest["timestamp_utc"] = timestamp_utc();
  ordered_json files;
  for (const fs::path& file : data_files) {
    files[file.filename().string()] = nusest::file_digest(file);
  }
  manifest["files"] = std::move(files);
  nusest::write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

int run_fig23(const Fig23Options& opt) {
  nusest::ExperimentConfig config;
  config.alpha = opt.alpha;
  config.trials = opt.trials;
  config.seed = opt.seed;
  config.gamma_db = opt.gamma_db;
  config.data_carriers_only = opt.data_carriers_only;
  config.validate();

  const auto start = std::chrono::steady_clock::now();
  const nusest::RmsCurve curve = nusest::run_rms_curves(config);
  const double duration_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
          .count();

  const fs::path dir(opt.out);
  fs::create_directories(dir);
  std::vector<fs::path> data_files;

  if (opt.format == "json") {
    const fs::path curve_path = dir / "rms_curve.json";
    nusest::write_text_file(curve_path, nusest::rms_curve_json(curve).dump(2) + "\n");
    data_files.push_back(curve_path);
  } else {
    const fs::path curve_path = dir / "rms_curve.csv";
    nusest::write_rms_curve_csv(curve_path, curve);
    data_files.push_back(curve_path);
  }

  const ordered_json summary = nusest::curve_summary_json(config, curve);
  const fs::path summary_path = dir / "summary.json";
  nusest::write_text_file(summary_path, summary.dump(2) + "\n");
  data_files.push_back(summary_path);

  if (opt.dump_channels) {
    const double t_h = nusest::delay_spread_from_alpha(
        config.alpha, nusest::average_pilot_bandwidth(config.pilot_grid()));
    const nusest::ChannelModelParams params{
        config.lambda, t_h, nusest::calibrate_sigma_a(config.lambda, 1.0), config.seed};
    std::vector<nusest::SparseChannel> channels(static_cast<std::size_t>(config.trials));
    for (int t = 0; t < config.trials; ++t) {
      nusest::StreamRng rng(config.seed, nusest::RngDomain::channel,
                            config.trial_offset + static_cast<std::uint64_t>(t));
      channels[static_cast<std::size_t>(t)] = nusest::draw_channel(params, rng);
    }
    std::ostringstream dump;
    nusest::write_channels(dump, channels, config.seed);
    const fs::path channels_path = dir / "channels.txt";
    nusest::write_text_file(channels_path, dump.str());
    data_files.push_back(channels_path);
  }

  ordered_json manifest = manifest_header("fig23");
  manifest["config"] = nusest::config_json(config);
  manifest["metadata"] = nusest::metadata_json(curve.metadata);
  write_manifest(dir, std::move(manifest), duration_ms, data_files);

  std::cout << "selected_ml_taps " << curve.metadata.selected_ml_taps << " (first tap "
            << curve.metadata.ml_first_tap << ")\n"
            << "mean_rms_db ml " << nusest::format_g17(summary["mean_rms_ml_db"].get<double>())
            << " pe " << nusest::format_g17(summary["mean_rms_pe_db"].get<double>())
            << " peinf " << nusest::format_g17(summary["mean_rms_peinf_db"].get<double>())
            << "\n"
            << "improvement_pe_vs_ml_db "
            << nusest::format_g17(summary["improvement_pe_vs_ml_db"].get<double>()) << "\n"
            << "improvement_peinf_vs_ml_db "
            << nusest::format_g17(summary["improvement_peinf_vs_ml_db"].get<double>()) << "\n"
            << "wrote " << (dir / (opt.format == "json" ? "rms_curve.json" : "rms_curve.csv")).string()
            << ", " << summary_path.string() << ", " << (dir / "manifest.json").string() << "\n";
  return 0;
}

int run_fig6(const Fig6Options& opt) {
  nusest::ExperimentConfig config;
  config.alpha = opt.alpha;
  config.gamma_db = opt.gamma_db;
  config.validate();

  const auto start = std::chrono::steady_clock::now();
  const nusest::RmsSurface surface = nusest::run_delay_frequency_surface(config, opt.tau_points);
  const double duration_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
          .count();

  const fs::path dir(opt.out);
  fs::create_directories(dir);
  std::vector<fs::path> data_files;

  if (opt.format == "json") {
    const fs::path surface_path = dir / "reduction_surface.json";
    nusest::write_text_file(surface_path, nusest::surface_json(surface).dump(2) + "\n");
    data_files.push_back(surface_path);
  } else {
    const fs::path surface_path = dir / "reduction_surface.csv";
    nusest::write_surface_csv(surface_path, surface);
    data_files.push_back(surface_path);
  }

  ordered_json manifest = manifest_header("fig6");
  manifest["config"] = nusest::config_json(config);
  manifest["tau_points"] = opt.tau_points;
  manifest["metadata"] = nusest::metadata_json(surface.metadata);
  // Sign convention: reduction_db = 10 log10(MSE_PE / MSE_ML); negative
  // values mean the sinc-Gram estimator improves on the least-squares one.
  manifest["reduction_sign"] = "10*log10(mse_pe/mse_ml)";
  write_manifest(dir, std::move(manifest), duration_ms, data_files);

  std::cout << "selected_ml_taps " << surface.metadata.selected_ml_taps << " (first tap "
            << surface.metadata.ml_first_tap << ")\n";
  if (surface.delays.size() >= 5 && surface.frequencies.size() >= 5) {
    std::cout << "interior_median_reduction_db "
              << nusest::format_g17(nusest::interior_median_reduction_db(surface)) << "\n";
  }
  std::cout << "wrote " << data_files.front().string() << ", "
            << (dir / "manifest.json").string() << "\n";
  return 0;
}

int run_bound_check_cmd(const BoundOptions& opt) {
  nusest::BoundCheckConfig config;
  config.configurations = opt.configurations;
  config.seed = opt.seed;
  config.noise_draws = opt.noise_draws;
  config.bound_scale = opt.bound_scale;

  const nusest::BoundCheckReport report = nusest::run_bound_check(config);
  for (const nusest::BoundCheckRecord& rec : report.records) {
    std::cout << (rec.pass ? "PASS" : "FAIL") << " config " << rec.config_index
              << ": abscissas=" << rec.n_abscissas << " noise_variance="
              << nusest::format_g17(rec.noise_variance)
              << " worst_excess=" << nusest::format_g17(rec.worst_excess)
              << " worst_mse_over_bound=" << nusest::format_g17(rec.worst_ratio) << "\n";
  }
  std::cout << (report.all_pass ? "all configurations pass" : "bound violations detected")
            << " (" << report.records.size() << " configurations)\n";
  return report.all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Band-limited channel estimation from nonuniform pilot samples: "
               "RMS benchmarks and bound checks"};
  app.set_version_flag("--version", nusest::kVersion);
  app.require_subcommand(1);

  Fig23Options f23;
  CLI::App* fig23 = app.add_subcommand(
      "fig23", "Monte Carlo per-carrier RMS comparison of the ML, PE and PEInf estimators");
  fig23->add_option("--config", f23.config_path,
                    "key=value config file; command-line flags override");
  fig23->add_option("--alpha", f23.alpha, "Spectral usage ratio in ]0, 1]")
      ->check(kAlphaRange)
      ->capture_default_str();
  fig23->add_option("--trials", f23.trials, "Number of random channel realizations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fig23->add_option("--seed", f23.seed, "64-bit experiment seed")->capture_default_str();
  fig23->add_option("--gamma-db", f23.gamma_db, "SNR in dB (channel power is 1)")
      ->capture_default_str();
  fig23->add_option("--out", f23.out, "Output directory")->capture_default_str();
  fig23->add_option("--format", f23.format, "Data file format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  fig23->add_flag("--data-carriers-only", f23.data_carriers_only,
                  "Evaluate only non-pilot carriers");
  fig23->add_flag("--dump-channels", f23.dump_channels,
                  "Also write the drawn channel realizations (channels.txt)");

  Fig6Options f6;
  CLI::App* fig6 = app.add_subcommand(
      "fig6", "Deterministic delay-frequency RMS reduction surface (single-tap channels)");
  fig6->add_option("--config", f6.config_path,
                   "key=value config file; command-line flags override");
  fig6->add_option("--alpha", f6.alpha, "Spectral usage ratio in ]0, 1]")
      ->check(kAlphaRange)
      ->capture_default_str();
  fig6->add_option("--gamma-db", f6.gamma_db, "SNR in dB (channel power is 1)")
      ->capture_default_str();
  fig6->add_option("--tau-points", f6.tau_points, "Number of interior delay grid points")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fig6->add_option("--out", f6.out, "Output directory")->capture_default_str();
  fig6->add_option("--format", f6.format, "Data file format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  BoundOptions bc;
  CLI::App* bound = app.add_subcommand(
      "bound-check", "Randomized dominance check of the worst-case error bound");
  bound->add_option("--config", bc.config_path,
                    "key=value config file; command-line flags override");
  bound->add_option("--configs", bc.configurations, "Number of random configurations")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  bound->add_option("--seed", bc.seed, "64-bit suite seed")->capture_default_str();
  bound->add_option("--draws", bc.noise_draws, "Noise draws per configuration")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bound->add_option("--bound-scale", bc.bound_scale,
                    "Self-test hook: scale the bound (0.5 forces violations)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help / --version
    }
    app.exit(e);
    return 2;
  }

  try {
    if (*fig23) {
      apply_config_file(*fig23, f23.config_path, fig23_setters(f23));
      return run_fig23(f23);
    }
    if (*fig6) {
      apply_config_file(*fig6, f6.config_path, fig6_setters(f6));
      return run_fig6(f6);
    }
    if (*bound) {
      apply_config_file(*bound, bc.config_path, bound_setters(bc));
      return run_bound_check_cmd(bc);
    }
  } catch (const nusest::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nusest::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
