#include "mmse/cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "mmse/error.hpp"

#ifndef MMSE_VERSION
#define MMSE_VERSION "0.0.0"
#endif

namespace mmse::cli {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::invalid_input, what); }

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(std::string_view s, std::string_view what) {
  const std::string str(s);
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(str, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != str.size() || str.empty() || !std::isfinite(v))
    invalid("bad " + std::string(what) + " '" + str + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t p = s.find(sep, start);
    parts.push_back(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return parts;
}

int modulation_from_name(const std::string& name) {
  if (name == "bpsk") return 2;
  if (name == "qpsk") return 4;
  if (name == "qam16") return 16;
  if (name == "qam64") return 64;
  invalid("unknown modulation '" + name + "'");
}

struct Output {
  std::ostream& out;
  std::ostream& err;
  std::string path;

  void write(const std::string& text) const {
    if (path.empty()) {
      out << text;
      out.flush();
      return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw std::runtime_error("write to '" + path + "' failed");
  }

  void manifest(const RunManifest& m) const {
    if (path.empty()) {
      err << m.to_json() << '\n';
      return;
    }
    std::ofstream f(path + ".manifest.json", std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write manifest next to '" + path + "'");
    f << m.to_json() << '\n';
  }
};

RunManifest make_manifest(const std::string& command, const json& config, std::uint64_t seed,
                          std::chrono::steady_clock::time_point start) {
  RunManifest m;
  m.command = command;
  m.config = config.dump();
  m.config_digest = sha256_hex(m.config);
  m.seed = seed;
  m.tool_version = tool_version();
  m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return m;
}

struct SweepArgs {
  std::size_t users = 4;
  std::size_t bs_antennas = 64;
  std::size_t subcarriers = 72;
  std::string mod = "qam64";
  std::string detector = "neumann:3";
  std::string npi;
  std::string snr = "0:20:2";
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  std::string out;
  bool fxp = false;
  std::string format = "csv";
};

struct BoundArgs {
  std::size_t users = 8;
  std::size_t bs_antennas = 128;
  int terms = 1;
  double alpha = 1.0;
  std::size_t trials = 10000;
  std::uint64_t seed = 1;
  std::string out;
};

struct CountArgs {
  std::string users_range = "2:16";
  std::size_t bs_antennas = 128;
  std::string methods = "mf,neumann:2,neumann:3,cholesky";
  std::string out;
};

struct MomentArgs {
  int lemma = 1;
  std::size_t bs_antennas = 8;
  std::size_t trials = 1000000;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_sweep(const SweepArgs& a, int threads, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  SimConfig sim;
  sim.users = a.users;
  sim.bs_antennas = a.bs_antennas;
  sim.subcarriers = a.subcarriers;
  sim.modulation = modulation_from_name(a.mod);
  sim.trials = a.trials;
  sim.seed = a.seed;
  sim.validate();
  const DetectorConfig det = DetectorConfig::parse(a.detector, a.npi, sim.modulation);
  const std::vector<double> grid = parse_snr_grid(a.snr);
  if (a.format != "csv" && a.format != "json") invalid("unknown format '" + a.format + "'");

  SweepOptions opts;
  opts.threads = threads;
  if (a.fxp) opts.fxp = FxpPipelineConfig::fpga();
  const std::vector<SweepRecord> records = ber_sweep(sim, det, grid, opts);
  for (const SweepRecord& r : records)
    err << "snr " << g17(r.snr_db) << " dB: ber " << g17(r.ber) << " (" << r.bit_errors << " errors, "
        << r.trials << " frames, " << r.failed_trials << " failed)\n";

  const Output o{out, err, a.out};
  o.write(a.format == "csv" ? format_sweep_csv(records) : format_sweep_json(records));
  const json config = {{"users", a.users},         {"bs_antennas", a.bs_antennas}, {"subcarriers", a.subcarriers},
                       {"mod", a.mod},             {"detector", det.label()},      {"npi", to_string(det.npi)},
                       {"snr", a.snr},             {"trials", a.trials},           {"seed", a.seed},
                       {"fxp", a.fxp},             {"format", a.format}};
  o.manifest(make_manifest("sweep", config, a.seed, start));
  return kExitOk;
}

int cmd_bound(const BoundArgs& a, int threads, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  const BoundQuery q{a.users, a.bs_antennas, a.terms, a.alpha};
  const double bound = theorem1_bound(q);
  const ProbEstimate p = empirical_norm_prob(q, a.trials, a.seed, threads);
  json j = {{"users", a.users},
            {"bs_antennas", a.bs_antennas},
            {"terms", a.terms},
            {"alpha", a.alpha},
            {"bound", bound},
            {"vacuous", bound <= 0.0},
            {"empirical", p.value},
            {"std_error", p.std_error},
            {"trials", a.trials},
            {"seed", a.seed},
            {"consistent", p.value >= bound - 3.0 * p.std_error}};
  const Output o{out, err, a.out};
  o.write(j.dump() + "\n");
  const json config = {{"users", a.users}, {"bs_antennas", a.bs_antennas}, {"terms", a.terms},
                       {"alpha", a.alpha}, {"trials", a.trials},           {"seed", a.seed}};
  o.manifest(make_manifest("bound", config, a.seed, start));
  return kExitOk;
}

int cmd_count(const CountArgs& a, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  const auto [lo, hi] = parse_range(a.users_range);
  if (lo < 1 || hi < lo || hi > a.bs_antennas) invalid("users range must satisfy 1 <= a <= b <= B");
  std::vector<DetectorConfig> methods;
  for (std::string_view m : split(a.methods, ',')) {
    DetectorConfig d = DetectorConfig::parse(m, "", 64);
    methods.push_back(d);
  }
  std::string csv =
      "method,users,bs_antennas,closed_form_mults,instrumented_mults,closed_form_inversion_mults,"
      "instrumented_inversion_mults,closed_form_divs,instrumented_divs\n";
  for (const DetectorConfig& d : methods)
    for (std::size_t u = lo; u <= hi; ++u) {
      const ComplexityReport c = multiplication_count(d.method, d.terms, u, a.bs_antennas);
      const ComplexityReport m = instrumented_count(d.method, d.terms, u, a.bs_antennas);
      csv += d.label() + ',' + std::to_string(u) + ',' + std::to_string(a.bs_antennas) + ',' +
             std::to_string(c.preprocessing().real_mults) + ',' + std::to_string(m.preprocessing().real_mults) + ',' +
             std::to_string(c.inversion.real_mults) + ',' + std::to_string(m.inversion.real_mults) + ',' +
             std::to_string(c.preprocessing().real_divs) + ',' + std::to_string(m.preprocessing().real_divs) + '\n';
    }
  const Output o{out, err, a.out};
  o.write(csv);
  const json config = {{"users_range", a.users_range}, {"bs_antennas", a.bs_antennas}, {"methods", a.methods}};
  o.manifest(make_manifest("count", config, 0, start));
  return kExitOk;
}

int cmd_moments(const MomentArgs& a, int threads, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  if (a.lemma != 1 && a.lemma != 2) invalid("lemma must be 1 or 2");
  const MomentEstimate m =
      moment_mc(a.lemma == 1 ? Lemma::one : Lemma::two, a.bs_antennas, a.trials, a.seed, threads);
  json j = {{"lemma", a.lemma},
            {"bs_antennas", a.bs_antennas},
            {"trials", a.trials},
            {"seed", a.seed},
            {"estimate", m.estimate},
            {"target", m.target},
            {"std_error", m.std_error},
            {"relative_std_error", m.relative_std_error()},
            {"z_score", m.z_score()}};
  const Output o{out, err, a.out};
  o.write(j.dump() + "\n");
  const json config = {{"lemma", a.lemma}, {"bs_antennas", a.bs_antennas}, {"trials", a.trials}, {"seed", a.seed}};
  o.manifest(make_manifest("moments", config, a.seed, start));
  return kExitOk;
}

}  // namespace

const char* tool_version() noexcept { return MMSE_VERSION; }

std::vector<double> parse_snr_grid(std::string_view spec) {
  const auto parts = split(spec, ':');
  if (parts.size() != 3) invalid("SNR grid must look like a:b:step, got '" + std::string(spec) + "'");
  const double a = parse_double(parts[0], "SNR start");
  const double b = parse_double(parts[1], "SNR stop");
  const double step = parse_double(parts[2], "SNR step");
  if (!(step > 0.0)) invalid("SNR step must be positive");
  if (b < a) invalid("SNR stop is below start");
  const auto n = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
  if (n > 100000) invalid("SNR grid too long");
  std::vector<double> grid(n);
  for (std::size_t k = 0; k < n; ++k) grid[k] = a + static_cast<double>(k) * step;
  return grid;
}

std::pair<std::size_t, std::size_t> parse_range(std::string_view spec) {
  const auto parts = split(spec, ':');
  if (parts.size() != 2) invalid("range must look like a:b, got '" + std::string(spec) + "'");
  std::size_t v[2];
  for (int k = 0; k < 2; ++k) {
    const double d = parse_double(parts[k], "range bound");
    if (d < 0 || d != std::floor(d)) invalid("range bounds must be non-negative integers");
    v[k] = static_cast<std::size_t>(d);
  }
  return {v[0], v[1]};
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::ostringstream s;
  for (unsigned int i = 0; i < len; ++i) s << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return s.str();
}

std::string RunManifest::to_json() const {
  const json j = {{"command", command},
                  {"config", json::parse(config)},
                  {"config_digest", config_digest},
                  {"seed", seed},
                  {"tool_version", tool_version},
                  {"wall_time_s", wall_time_s}};
  return j.dump();
}

std::string format_sweep_csv(std::span<const SweepRecord> records) {
  std::string s(kSweepCsvHeader);
  s += '\n';
  for (const SweepRecord& r : records)
    s += g17(r.snr_db) + ',' + r.method + ',' + r.npi + ',' + g17(r.ber) + ',' + std::to_string(r.bit_errors) + ',' +
         std::to_string(r.trials) + ',' + std::to_string(r.seed) + ',' + std::to_string(r.failed_trials) + '\n';
  return s;
}

std::string format_sweep_json(std::span<const SweepRecord> records) {
  json arr = json::array();
  for (const SweepRecord& r : records) {
    json j = {{"snr_db", r.snr_db}, {"method", r.method}, {"npi", r.npi},   {"bit_errors", r.bit_errors},
              {"trials", r.trials}, {"seed", r.seed},     {"failed_trials", r.failed_trials}};
    j["ber"] = std::isfinite(r.ber) ? json(r.ber) : json(nullptr);
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"MMSE / Neumann-series massive-MIMO detection lab", "mmse_lab"};
  app.set_version_flag("--version", std::string(tool_version()));
  app.set_config("--config", "", "TOML file with flag values; command-line flags win");
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0: OpenMP default)")
      ->envname("MMSE_LAB_THREADS")
      ->check(CLI::NonNegativeNumber);

  SweepArgs sw;
  CLI::App* sweep = app.add_subcommand("sweep", "uncoded BER versus SNR");
  sweep->add_option("--users", sw.users, "U");
  sweep->add_option("--bs-antennas", sw.bs_antennas, "B");
  sweep->add_option("--subcarriers", sw.subcarriers, "L");
  sweep->add_option("--mod", sw.mod, "bpsk|qpsk|qam16|qam64");
  sweep->add_option("--detector", sw.detector, "mf|neumann:K|cholesky");
  sweep->add_option("--npi", sw.npi, "exact|neumann-exact|k1|low");
  sweep->add_option("--snr", sw.snr, "a:b:step in dB");
  sweep->add_option("--trials", sw.trials, "frames per SNR point");
  sweep->add_option("--seed", sw.seed);
  sweep->add_option("--out", sw.out, "output file (default stdout)");
  sweep->add_flag("--fxp", sw.fxp, "fixed-point pipeline");
  sweep->add_option("--format", sw.format, "csv|json");

  BoundArgs bd;
  CLI::App* bound = app.add_subcommand("bound", "convergence probability bound versus Monte-Carlo");
  bound->add_option("--users", bd.users);
  bound->add_option("--bs-antennas", bd.bs_antennas);
  bound->add_option("--terms", bd.terms, "K");
  bound->add_option("--alpha", bd.alpha);
  bound->add_option("--trials", bd.trials);
  bound->add_option("--seed", bd.seed);
  bound->add_option("--out", bd.out);

  CountArgs ct;
  CLI::App* count = app.add_subcommand("count", "real multiplications per subcarrier");
  count->add_option("--users-range", ct.users_range, "a:b");
  count->add_option("--bs-antennas", ct.bs_antennas);
  count->add_option("--methods", ct.methods, "comma-separated detectors");
  count->add_option("--out", ct.out);

  MomentArgs mo;
  CLI::App* moments = app.add_subcommand("moments", "Monte-Carlo check of the fourth-moment lemmas");
  moments->add_option("--lemma", mo.lemma, "1|2");
  moments->add_option("--bs-antennas", mo.bs_antennas);
  moments->add_option("--trials", mo.trials);
  moments->add_option("--seed", mo.seed);
  moments->add_option("--out", mo.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*sweep) return cmd_sweep(sw, threads, out, err);
    if (*bound) return cmd_bound(bd, threads, out, err);
    if (*count) return cmd_count(ct, out, err);
    return cmd_moments(mo, threads, out, err);
  } catch (const Error& e) {
    err << "mmse_lab: " << e.what() << '\n';
    const bool config = e.code() == Errc::invalid_input || e.code() == Errc::out_of_domain;
    return config ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    err << "mmse_lab: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace mmse::cli
