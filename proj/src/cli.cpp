#include "lorp/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "lorp/fixtures.hpp"
#include "lorp/oracle.hpp"
#include "lorp/selection.hpp"

namespace lorp {

namespace {

using nlohmann::json;

struct SelectArgs {
  std::string data;
  std::string target = "y";
  std::vector<std::string> families;
  std::string alpha = "auto";
  double alpha_lo = 1e-8;
  double alpha_hi = 1e6;
  std::string penalty = "response";
  bool filter_generic = false;
  bool include_vn = false;
  std::string baselines = "aic,bic,bms,trace";
  std::string bms_prior = "identity";
  std::uint64_t seed = 0;
  std::string out;
  std::string curves_dir;
  bool no_timestamp = false;
};

struct SynthArgs {
  std::string kind = "poly";
  std::vector<double> coeffs{0.0, 1.0};
  double freq = 1.0;
  Index n = 50;
  double noise = 0.0;
  double x_lo = -1.0;
  double x_hi = 1.0;
  std::uint64_t seed = 0;
  std::string out;
};

struct OracleArgs {
  std::string example;
  int d = -1;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> values;
  std::vector<std::string> regressors;
  double lo = 0.0;
  double hi = 0.0;
  double eps = 1e-3;
  std::uint64_t samples = 1'000'000;
  std::uint64_t seed = 0;
};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  require(file.good(), ErrorKind::DataError, "cannot write '" + path + "'");
  file << text;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::DataError:
    case ErrorKind::MissingColumn:
    case ErrorKind::DegenerateData: return kExitData;
    case ErrorKind::SelectionFailed: return kExitAllFailed;
    default: return kExitUsage;
  }
}

int run_select(const SelectArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  cfg.data_path = a.data;
  cfg.target = a.target;
  for (const auto& f : a.families) cfg.families.push_back(parse_family(f));
  if (a.alpha != "auto") {
    double v = 0;
    const auto [ptr, ec] = std::from_chars(a.alpha.data(), a.alpha.data() + a.alpha.size(), v);
    require(ec == std::errc() && ptr == a.alpha.data() + a.alpha.size() && v > 0, ErrorKind::InvalidInput,
            "--alpha must be 'auto' or a positive number");
    cfg.lorp.fixed_alpha = v;
  }
  cfg.lorp.alpha_lo = a.alpha_lo;
  cfg.lorp.alpha_hi = a.alpha_hi;
  require(a.alpha_lo > 0 && a.alpha_hi > a.alpha_lo, ErrorKind::InvalidInput, "alpha bounds need 0 < lo < hi");
  require(a.penalty == "response" || a.penalty == "estimate", ErrorKind::InvalidInput,
          "--penalty must be response or estimate");
  cfg.lorp.penalty = a.penalty == "response" ? PenaltyKind::ResponseNorm : PenaltyKind::EstimateNorm;
  cfg.lorp.filter_generic = a.filter_generic;
  cfg.lorp.include_vn = a.include_vn;
  cfg.baselines = parse_baselines(a.baselines);
  require(a.bms_prior == "identity" || a.bms_prior == "gram", ErrorKind::InvalidInput,
          "--bms-prior must be identity or gram");
  cfg.bms_prior = a.bms_prior == "identity" ? PriorKind::Identity : PriorKind::Gram;
  cfg.seed = a.seed;

  const Dataset<double> data = load_csv(a.data, a.target);
  const SelectionReport report = run_selection(cfg, data);
  const json j = to_json(report, a.no_timestamp ? std::nullopt : std::optional<std::string>(utc_timestamp()));
  write_text(a.out, j.dump(2) + "\n", out);

  if (!a.curves_dir.empty()) {
    std::filesystem::create_directories(a.curves_dir);
    std::vector<std::string> written;
    for (const auto& c : report.candidates) {
      if (std::find(written.begin(), written.end(), c.family) != written.end()) continue;
      written.push_back(c.family);
      write_text((std::filesystem::path(a.curves_dir) / (c.family + ".csv")).string(), curve_csv(report, c.family),
                 out);
    }
  }

  if (report.all_failed()) {
    err << "lorp: every candidate failed; see the report for per-candidate reasons\n";
    return kExitAllFailed;
  }
  return kExitOk;
}

int run_synth(const SynthArgs& a, std::ostream& out) {
  SyntheticSpec spec;
  require(a.kind == "poly" || a.kind == "sine", ErrorKind::InvalidInput, "--kind must be poly or sine");
  spec.kind = a.kind == "poly" ? SyntheticKind::Polynomial : SyntheticKind::Sine;
  spec.coeffs = a.coeffs;
  spec.freq = a.freq;
  spec.n = a.n;
  spec.noise_sd = a.noise;
  spec.x_lo = a.x_lo;
  spec.x_hi = a.x_hi;
  write_text(a.out, format_csv(gen_synthetic(spec, a.seed)), out);
  return kExitOk;
}

// Regressors and observation for a custom oracle run.
struct OracleProblem {
  std::vector<std::string> names;
  std::vector<oracle::LossFunction> losses;
  std::vector<double> y;
};

OracleProblem oracle_problem(const OracleArgs& a) {
  OracleProblem p;
  if (a.example == "sd" || a.example == "sc") {
    p.y = {1.0, 2.0};
    for (int d = 0; d <= 2; ++d) {
      if (a.d >= 0 && d != a.d) continue;
      p.names.push_back("d" + std::to_string(d));
      p.losses.push_back(fixtures::simple_loss(d));
    }
    require(!p.names.empty(), ErrorKind::InvalidInput, "--d must be 0, 1 or 2 for the built-in examples");
    return p;
  }
  require(a.example.empty(), ErrorKind::InvalidInput, "unknown example '" + a.example + "' (use sd or sc)");
  require(!a.y.empty() && a.x.size() == a.y.size(), ErrorKind::InvalidInput, "custom runs need --x and --y of equal length");
  require(!a.regressors.empty(), ErrorKind::InvalidInput, "custom runs need at least one --regressor");
  const Matrix<double> x = Eigen::Map<const Vector<double>>(a.x.data(), static_cast<Index>(a.x.size()));
  p.y = a.y;
  for (const auto& r : a.regressors) {
    for (const RegressorSpec& spec : parse_family(r).specs) {
      const HatMatrix<double> hat = build_hat_matrix<double>(spec, x);
      p.names.push_back(label(spec));
      p.losses.push_back(oracle::quadratic_loss(hat.entries, label(spec)));
    }
  }
  return p;
}

oracle::BoxDomain oracle_box(const OracleArgs& a, std::size_t n) {
  if (a.example == "sc" || a.example == "sd") return fixtures::simple_box();
  if (a.hi > a.lo) return oracle::BoxDomain::cube(n, a.lo, a.hi);
  std::vector<double> y = a.y;
  return oracle::default_box(y);
}

int run_exact_rank(const OracleArgs& a, std::ostream& out) {
  const OracleProblem p = oracle_problem(a);
  std::vector<double> values = a.values;
  if (a.example == "sd" || a.example == "sc") {
    const auto v = fixtures::simple_values();
    values.assign(v.begin(), v.end());
  }
  require(!values.empty(), ErrorKind::InvalidInput, "custom runs need --values");
  json ranks = json::object();
  std::size_t best = 0;
  std::vector<std::uint64_t> r(p.losses.size());
  for (std::size_t i = 0; i < p.losses.size(); ++i) {
    r[i] = oracle::exact_rank(p.losses[i], p.y, values);
    ranks[p.names[i]] = r[i];
    if (r[i] < r[best]) best = i;
  }
  json j = {{"command", "exact-rank"}, {"y", p.y}, {"values", values}, {"ranks", ranks}, {"selected", p.names[best]}};
  if (!a.example.empty()) j["example"] = a.example;
  out << j.dump(2) << "\n";
  return kExitOk;
}

int run_grid_rank(const OracleArgs& a, std::ostream& out) {
  const OracleProblem p = oracle_problem(a);
  const oracle::BoxDomain box = oracle_box(a, p.y.size());
  json results = json::array();
  for (std::size_t i = 0; i < p.losses.size(); ++i) {
    const oracle::GridRank g = oracle::grid_rank(p.losses[i], p.y, box, a.eps);
    results.push_back({{"regressor", p.names[i]},
                       {"level", p.losses[i](p.y)},
                       {"count", g.count},
                       {"volume", g.volume_estimate}});
  }
  json j = {{"command", "grid-rank"}, {"eps", a.eps}, {"results", results}};
  if (!a.example.empty()) j["example"] = a.example;
  if (results.size() == 1) j["volume"] = results[0]["volume"];
  out << j.dump(2) << "\n";
  return kExitOk;
}

int run_mc_volume(const OracleArgs& a, std::ostream& out) {
  const OracleProblem p = oracle_problem(a);
  const oracle::BoxDomain box = oracle_box(a, p.y.size());
  json results = json::array();
  for (std::size_t i = 0; i < p.losses.size(); ++i) {
    const oracle::VolumeEstimate v = oracle::mc_volume(p.losses[i], p.y, box, a.samples, a.seed);
    results.push_back({{"regressor", p.names[i]},
                       {"level", p.losses[i](p.y)},
                       {"estimate", v.estimate},
                       {"stderr", v.stderr_},
                       {"hits", v.hits},
                       {"zero_hit", v.zero_hit}});
  }
  json j = {{"command", "mc-volume"}, {"samples", a.samples}, {"seed", a.seed}, {"results", results}};
  if (!a.example.empty()) j["example"] = a.example;
  if (results.size() == 1) {
    j["estimate"] = results[0]["estimate"];
    j["stderr"] = results[0]["stderr"];
  }
  out << j.dump(2) << "\n";
  return kExitOk;
}

void add_oracle_options(CLI::App* cmd, OracleArgs& a) {
  cmd->add_option("--example", a.example, "Built-in fixture: sd (discrete) or sc (continuous)");
  cmd->add_option("--d", a.d, "Restrict the built-in fixture to regressor d in {0,1,2}");
  cmd->add_option("--x", a.x, "Covariates (comma separated)")->delimiter(',');
  cmd->add_option("--y", a.y, "Observed responses (comma separated)")->delimiter(',');
  cmd->add_option("--regressor", a.regressors, "Regressor family spec, e.g. poly:d=0..2");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Loss-rank model selection for linear regressors", "lorp"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  SelectArgs sel;
  CLI::App* select = app.add_subcommand("select", "Score candidate regressors and select by minimal loss rank");
  select->add_option("--data", sel.data, "CSV file with a header row")->required();
  select->add_option("--target", sel.target, "Response column name");
  select->add_option("--family", sel.families, "Sweep family:param=lo..hi[:step] (repeatable)")->required();
  select->add_option("--alpha", sel.alpha, "'auto' to optimize alpha, or a fixed positive value");
  select->add_option("--alpha-lo", sel.alpha_lo, "Lower bound of the alpha search");
  select->add_option("--alpha-hi", sel.alpha_hi, "Upper bound of the alpha search");
  select->add_option("--penalty", sel.penalty, "response (alpha |y|^2) or estimate (alpha |My|^2)");
  select->add_flag("--filter-generic", sel.filter_generic, "Drop the constant direction when M 1 = 1");
  select->add_flag("--include-vn", sel.include_vn, "Add the log unit-ball volume to lr");
  select->add_option("--baselines", sel.baselines, "Comma list of aic,bic,bms,trace (or none)");
  select->add_option("--bms-prior", sel.bms_prior, "identity or gram prior covariance for bms");
  select->add_option("--seed", sel.seed, "Seed echoed into the report");
  select->add_option("--out", sel.out, "Report path (default stdout)");
  select->add_option("--curves-dir", sel.curves_dir, "Directory for per-family LR curve CSVs");
  select->add_flag("--no-timestamp", sel.no_timestamp, "Omit the timestamp field");

  SynthArgs syn;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic regression dataset as CSV");
  synth->add_option("--kind", syn.kind, "poly or sine");
  synth->add_option("--coeffs", syn.coeffs, "Polynomial coefficients c0,c1,...")->delimiter(',');
  synth->add_option("--freq", syn.freq, "Sine frequency");
  synth->add_option("--n", syn.n, "Number of points");
  synth->add_option("--noise", syn.noise, "Gaussian noise standard deviation");
  synth->add_option("--x-lo", syn.x_lo, "Lower end of the x range");
  synth->add_option("--x-hi", syn.x_hi, "Upper end of the x range");
  synth->add_option("--seed", syn.seed, "Random seed");
  synth->add_option("--out", syn.out, "Output path (default stdout)");

  CLI::App* oracle_cmd = app.add_subcommand("oracle", "Brute-force loss rank and loss volume oracles");
  oracle_cmd->require_subcommand(1);
  OracleArgs ex, gr, mc;
  CLI::App* exact = oracle_cmd->add_subcommand("exact-rank", "Exact rank over a finite response alphabet");
  add_oracle_options(exact, ex);
  exact->add_option("--values", ex.values, "Response alphabet (comma separated)")->delimiter(',');
  CLI::App* grid = oracle_cmd->add_subcommand("grid-rank", "Count eps-grid points of the loss sublevel set");
  add_oracle_options(grid, gr);
  grid->add_option("--eps", gr.eps, "Grid spacing");
  grid->add_option("--lo", gr.lo, "Box lower bound (all coordinates)");
  grid->add_option("--hi", gr.hi, "Box upper bound (all coordinates)");
  CLI::App* mcv = oracle_cmd->add_subcommand("mc-volume", "Monte-Carlo volume of the loss sublevel set");
  add_oracle_options(mcv, mc);
  mcv->add_option("--samples", mc.samples, "Number of uniform samples");
  mcv->add_option("--seed", mc.seed, "Random seed");
  mcv->add_option("--lo", mc.lo, "Box lower bound (all coordinates)");
  mcv->add_option("--hi", mc.hi, "Box upper bound (all coordinates)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*select) return run_select(sel, out, err);
    if (*synth) return run_synth(syn, out);
    if (*exact) return run_exact_rank(ex, out);
    if (*grid) return run_grid_rank(gr, out);
    if (*mcv) return run_mc_volume(mc, out);
  } catch (const Error& e) {
    err << "lorp: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "lorp: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace lorp
