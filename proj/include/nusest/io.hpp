#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"

#include "nusest/bound_check.hpp"
#include "nusest/experiments.hpp"

namespace nusest {

using ordered_json = nlohmann::ordered_json;

// How one generator stream is derived from (seed, domain, index); recorded in
// manifests so any single trial can be re-run in isolation.
inline constexpr const char* kSeedScheme =
    "mt19937_64 seeded with splitmix64-mixed (seed, domain, index); "
    "domains: channel=1, noise=2, bound_suite=3; "
    "channel trial t uses domain channel with index trial_offset + t";

// Shortest text form that round-trips a double exactly (printf %.17g).
std::string format_g17(double value);

// CSV: header "carrier_index,freq,rms_ml_db,rms_pe_db,rms_peinf_db"; RMS
// columns are 20 log10 of the linear values (db() of the squared error).
void write_rms_curve_csv(const std::filesystem::path& path, const RmsCurve& curve);

// CSV: header "tau,freq,reduction_db"; rows ordered delay-major.
void write_surface_csv(const std::filesystem::path& path, const RmsSurface& surface);

// JSON mirrors of the CSV payloads.
ordered_json rms_curve_json(const RmsCurve& curve);
ordered_json surface_json(const RmsSurface& surface);

// Scalar results: average improvements (dB), per-estimator mean RMS (dB),
// selected tap window, and the run parameters.
ordered_json curve_summary_json(const ExperimentConfig& config, const RmsCurve& curve);

ordered_json config_json(const ExperimentConfig& config);
ordered_json metadata_json(const RunMetadata& metadata);
ordered_json bound_report_json(const BoundCheckConfig& config, const BoundCheckReport& report);

void write_text_file(const std::filesystem::path& path, const std::string& content);

// FNV-1a 64-bit digest of a file's bytes, as "fnv1a64:<16 hex digits>".
std::string file_digest(const std::filesystem::path& path);

}
