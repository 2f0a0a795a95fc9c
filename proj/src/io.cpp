#include "nusest/io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nusest/errors.hpp"

namespace nusest {

std::string format_g17(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open for writing: " + path.string());
  }
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) {
    throw IoError("failed while writing: " + path.string());
  }
}

}  // namespace

void write_rms_curve_csv(const std::filesystem::path& path, const RmsCurve& curve) {
  const Eigen::Index n = curve.carrier_indices.size();
  if (curve.rms_ml.size() != n || curve.rms_pe.size() != n || curve.rms_peinf.size() != n) {
    throw ConfigError("curve CSV schema needs all three estimator columns");
  }
  std::ofstream out = open_for_write(path);
  out << "carrier_index,freq,rms_ml_db,rms_pe_db,rms_peinf_db\n";
  for (Eigen::Index i = 0; i < curve.carrier_indices.size(); ++i) {
    out << curve.carrier_indices[i] << ',' << format_g17(curve.frequencies[i]) << ','
        << format_g17(db(curve.rms_ml[i] * curve.rms_ml[i])) << ','
        << format_g17(db(curve.rms_pe[i] * curve.rms_pe[i])) << ','
        << format_g17(db(curve.rms_peinf[i] * curve.rms_peinf[i])) << '\n';
  }
  finish(out, path);
}

void write_surface_csv(const std::filesystem::path& path, const RmsSurface& surface) {
  std::ofstream out = open_for_write(path);
  out << "tau,freq,reduction_db\n";
  for (Eigen::Index i = 0; i < surface.delays.size(); ++i) {
    for (Eigen::Index j = 0; j < surface.frequencies.size(); ++j) {
      out << format_g17(surface.delays[i]) << ',' << format_g17(surface.frequencies[j])
          << ',' << format_g17(surface.reduction_db(i, j)) << '\n';
    }
  }
  finish(out, path);
}

namespace {

ordered_json vector_json(const Eigen::VectorXd& values) {
  ordered_json arr = ordered_json::array();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    arr.push_back(values[i]);
  }
  return arr;
}

ordered_json rms_db_json(const Eigen::VectorXd& rms) {
  ordered_json arr = ordered_json::array();
  for (Eigen::Index i = 0; i < rms.size(); ++i) {
    arr.push_back(db(rms[i] * rms[i]));
  }
  return arr;
}

}  // namespace

ordered_json rms_curve_json(const RmsCurve& curve) {
  ordered_json j;
  ordered_json idx = ordered_json::array();
  for (Eigen::Index i = 0; i < curve.carrier_indices.size(); ++i) {
    idx.push_back(curve.carrier_indices[i]);
  }
  j["carrier_index"] = std::move(idx);
  j["freq"] = vector_json(curve.frequencies);
  j["rms_ml_db"] = rms_db_json(curve.rms_ml);
  j["rms_pe_db"] = rms_db_json(curve.rms_pe);
  j["rms_peinf_db"] = rms_db_json(curve.rms_peinf);
  return j;
}

ordered_json surface_json(const RmsSurface& surface) {
  ordered_json j;
  j["tau"] = vector_json(surface.delays);
  j["freq"] = vector_json(surface.frequencies);
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < surface.delays.size(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index jx = 0; jx < surface.frequencies.size(); ++jx) {
      row.push_back(surface.reduction_db(i, jx));
    }
    rows.push_back(std::move(row));
  }
  j["reduction_db"] = std::move(rows);
  return j;
}

ordered_json curve_summary_json(const ExperimentConfig& config, const RmsCurve& curve) {
  ordered_json j;
  j["alpha"] = config.alpha;
  j["gamma_db"] = config.gamma_db;
  j["trials"] = curve.metadata.trials;
  j["seed"] = curve.metadata.seed;
  j["carriers"] = curve.carrier_indices.size();
  j["selected_ml_taps"] = curve.metadata.selected_ml_taps;
  j["ml_first_tap"] = curve.metadata.ml_first_tap;
  j["mean_rms_ml_db"] = mean_rms_db(curve.rms_ml);
  j["mean_rms_pe_db"] = mean_rms_db(curve.rms_pe);
  j["mean_rms_peinf_db"] = mean_rms_db(curve.rms_peinf);
  j["improvement_pe_vs_ml_db"] = mean_improvement_db(curve.rms_ml, curve.rms_pe);
  j["improvement_peinf_vs_ml_db"] = mean_improvement_db(curve.rms_ml, curve.rms_peinf);
  j["peinf_applied_ridge"] = curve.metadata.peinf_applied_ridge;
  return j;
}

ordered_json config_json(const ExperimentConfig& config) {
  ordered_json j;
  j["dft_size"] = config.dft_size;
  j["n_modulated"] = config.n_modulated;
  j["n_pilots"] = config.n_pilots;
  j["pilot_index_step"] = config.pilot_index_step;
  j["frequency_spacing"] = config.frequency_spacing;
  j["gamma_db"] = config.gamma_db;
  j["alpha"] = config.alpha;
  j["amplitude_bound"] = config.amplitude_bound;
  j["lambda"] = config.lambda;
  j["trials"] = config.trials;
  j["seed"] = config.seed;
  j["trial_offset"] = config.trial_offset;
  j["data_carriers_only"] = config.data_carriers_only;
  return j;
}

ordered_json metadata_json(const RunMetadata& metadata) {
  ordered_json j;
  j["delay_spread_bound"] = metadata.delay_spread_bound;
  j["noise_variance"] = metadata.noise_variance;
  j["pe_mu"] = metadata.pe_mu;
  j["peinf_applied_ridge"] = metadata.peinf_applied_ridge;
  j["selected_ml_taps"] = metadata.selected_ml_taps;
  j["ml_first_tap"] = metadata.ml_first_tap;
  j["sweep_aggregate_rms"] = metadata.sweep_aggregate_rms;
  j["trials"] = metadata.trials;
  j["seed"] = metadata.seed;
  return j;
}

ordered_json bound_report_json(const BoundCheckConfig& config, const BoundCheckReport& report) {
  ordered_json j;
  j["configurations"] = config.configurations;
  j["seed"] = config.seed;
  j["noise_draws"] = config.noise_draws;
  j["test_points"] = config.test_points;
  j["bound_scale"] = config.bound_scale;
  ordered_json records = ordered_json::array();
  for (const BoundCheckRecord& rec : report.records) {
    ordered_json r;
    r["config_index"] = rec.config_index;
    r["n_abscissas"] = rec.n_abscissas;
    r["noise_variance"] = rec.noise_variance;
    r["mu"] = rec.mu;
    r["worst_excess"] = rec.worst_excess;
    r["worst_ratio"] = rec.worst_ratio;
    r["pass"] = rec.pass;
    records.push_back(std::move(r));
  }
  j["records"] = std::move(records);
  j["all_pass"] = report.all_pass;
  return j;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out = open_for_write(path);
  out << content;
  finish(out, path);
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open for digest: " + path.string());
  }
  std::uint64_t hash = 0xcbf29ce484222325ull;
  char chunk[4096];
  while (in.read(chunk, sizeof(chunk)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(chunk[i]);
      hash *= 0x100000001b3ull;
    }
    if (in.eof()) {
      break;
    }
  }
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "fnv1a64:%016llx",
                static_cast<unsigned long long>(hash));
  return buffer;
}

}
