#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mmse/analysis.hpp"

namespace mmse::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// Entry point of the mmse_lab tool: sweep, bound, count and moments
/// subcommands. Results go to `out` (or --out), diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// "a:b:step" -> a, a+step, ... up to b (inclusive, 1e-9 slack).
std::vector<double> parse_snr_grid(std::string_view spec);
/// "a:b" -> [a, b]
std::pair<std::size_t, std::size_t> parse_range(std::string_view spec);

std::string sha256_hex(std::string_view data);

struct RunManifest {
  std::string command;
  std::string config;         // canonical JSON, keys sorted
  std::string config_digest;  // sha256 of `config`
  std::uint64_t seed = 0;
  std::string tool_version;
  double wall_time_s = 0.0;

  std::string to_json() const;
};

const char* tool_version() noexcept;

inline constexpr std::string_view kSweepCsvHeader = "snr_db,method,npi,ber,bit_errors,trials,seed,failed_trials";

std::string format_sweep_csv(std::span<const SweepRecord> records);
std::string format_sweep_json(std::span<const SweepRecord> records);

}  // namespace mmse::cli
