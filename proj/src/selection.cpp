#include "lorp/selection.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "lorp/projective.hpp"
#include "lorp/regressors.hpp"

namespace lorp {

namespace {

double parse_double(std::string_view s, const std::string& context) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(!s.empty() && ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(v),
          ErrorKind::InvalidInput, "bad number '" + std::string(s) + "' in " + context);
  return v;
}

int parse_int(std::string_view s, const std::string& context) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(!s.empty() && ec == std::errc() && ptr == s.data() + s.size(), ErrorKind::InvalidInput,
          "bad integer '" + std::string(s) + "' in " + context);
  return v;
}

double param_of(const RegressorSpec& spec) {
  struct Visitor {
    double operator()(const Knn& s) const { return s.k; }
    double operator()(const KnnPrime& s) const { return s.k; }
    double operator()(const GaussianKernel& s) const { return s.sigma; }
    double operator()(const Polynomial& s) const { return s.d; }
    double operator()(const Lbfr&) const { return 0; }
    double operator()(const Explicit&) const { return 0; }
  };
  return std::visit(Visitor{}, spec);
}

std::string family_of(const RegressorSpec& spec) {
  const std::string l = label(spec);
  return l.substr(0, l.find(':'));
}

std::optional<FeatureMatrix<double>> features_of(const RegressorSpec& spec, const Matrix<double>& x) {
  if (const auto* p = std::get_if<Polynomial>(&spec)) {
    if (x.cols() != 1) return std::nullopt;
    return polynomial_design<double>(x.col(0), p->d);
  }
  if (std::holds_alternative<Lbfr>(spec)) return linear_design<double>(x);
  return std::nullopt;
}

bool projective_eligible(const RegressorSpec& spec, const LossRankOptions<double>& opts) {
  return (std::holds_alternative<Polynomial>(spec) || std::holds_alternative<Lbfr>(spec)) &&
         opts.penalty == PenaltyKind::ResponseNorm && !opts.filter_generic && !opts.fixed_alpha;
}

// Closed form when it applies, otherwise nullopt and the caller goes numeric.
std::optional<LossRankResult<double>> projective_fast_path(const HatMatrix<double>& hat, const Vector<double>& y,
                                                           bool include_vn) {
  ProjectiveResult<double> r;
  try {
    r = projective_loss_rank(hat, y);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::NotAProjection || e.kind() == ErrorKind::PerfectFit ||
        e.kind() == ErrorKind::OutsideValidity)
      return std::nullopt;
    throw;
  }
  const double n = static_cast<double>(y.size());
  LossRankResult<double> out;
  out.alpha_star = r.alpha_min;
  out.lr = r.lr + (include_vn ? log_unit_ball_volume<double>(y.size()) : 0.0);
  out.loss_at_alpha = (r.rho + r.alpha_min) * y.squaredNorm();
  out.logdet_at_alpha = r.d * std::log(r.alpha_min) + (n - r.d) * std::log1p(r.alpha_min);
  out.n_kept = y.size();
  out.include_vn = include_vn;
  return out;
}

template <typename Get>
std::optional<std::size_t> argmin_over(const std::vector<CandidateRecord>& records, Get&& get) {
  std::optional<std::size_t> best;
  std::optional<double> best_value;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].ok()) continue;
    const std::optional<double> v = get(records[i]);
    if (!v || std::isnan(*v)) continue;
    if (!best_value || *v < *best_value) {
      best = i;
      best_value = v;
    }
  }
  return best;
}

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

nlohmann::json optional_number(const std::optional<double>& v) { return v ? number(*v) : nlohmann::json(); }

nlohmann::json optional_index(const std::optional<std::size_t>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

std::string csv_number(const std::optional<double>& v) {
  if (!v) return "";
  if (std::isnan(*v)) return "nan";
  if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), *v);
  return std::string(buf, ptr);
}

}  // namespace

FamilySweep parse_family(const std::string& text) {
  FamilySweep sweep;
  sweep.text = text;
  const auto colon = text.find(':');
  require(colon != std::string::npos, ErrorKind::InvalidInput, "family '" + text + "' needs the form family:param=...");
  sweep.family = text.substr(0, colon);
  const std::string rest = text.substr(colon + 1);
  const auto eq = rest.find('=');
  require(eq != std::string::npos, ErrorKind::InvalidInput, "family '" + text + "' needs param=value");
  const std::string param = rest.substr(0, eq);
  std::string range = rest.substr(eq + 1);

  if (sweep.family == "lbfr") {
    require(param == "map", ErrorKind::InvalidInput, "lbfr takes map=<feature map>");
    sweep.specs.push_back(Lbfr{range});
    return sweep;
  }

  std::string step_text;
  const auto dots = range.find("..");
  std::string lo_text = range;
  std::string hi_text = range;
  if (dots != std::string::npos) {
    lo_text = range.substr(0, dots);
    hi_text = range.substr(dots + 2);
    const auto step_colon = hi_text.find(':');
    if (step_colon != std::string::npos) {
      step_text = hi_text.substr(step_colon + 1);
      hi_text = hi_text.substr(0, step_colon);
    }
  }

  const std::string expected = sweep.family == "kernel" ? "sigma" : (sweep.family == "poly" ? "d" : "k");
  require(sweep.family == "knn" || sweep.family == "knnprime" || sweep.family == "poly" || sweep.family == "kernel",
          ErrorKind::InvalidInput, "unknown family '" + sweep.family + "'");
  require(param == expected, ErrorKind::InvalidInput,
          "family '" + sweep.family + "' sweeps parameter '" + expected + "', got '" + param + "'");

  if (sweep.family == "kernel") {
    const double lo = parse_double(lo_text, text);
    const double hi = parse_double(hi_text, text);
    const double ratio = step_text.empty() ? 2.0 : parse_double(step_text, text);
    require(lo > 0 && hi >= lo, ErrorKind::InvalidInput, "kernel sigma range needs 0 < lo <= hi");
    require(ratio > 1, ErrorKind::InvalidInput, "kernel sigma ratio must exceed 1");
    for (int i = 0;; ++i) {
      const double sigma = lo * std::pow(ratio, i);
      if (sigma > hi * (1 + 1e-12)) break;
      sweep.specs.push_back(GaussianKernel{sigma});
    }
    return sweep;
  }

  const int lo = parse_int(lo_text, text);
  const int hi = parse_int(hi_text, text);
  const int step = step_text.empty() ? 1 : parse_int(step_text, text);
  require(hi >= lo && step >= 1, ErrorKind::InvalidInput, "range needs lo <= hi and step >= 1");
  for (int v = lo; v <= hi; v += step) {
    if (sweep.family == "knn")
      sweep.specs.push_back(Knn{v});
    else if (sweep.family == "knnprime")
      sweep.specs.push_back(KnnPrime{v});
    else
      sweep.specs.push_back(Polynomial{v});
  }
  return sweep;
}

BaselineToggles parse_baselines(const std::string& csv) {
  BaselineToggles t{false, false, false, false};
  if (csv.empty() || csv == "none") return t;
  std::stringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item == "aic")
      t.aic = true;
    else if (item == "bic")
      t.bic = true;
    else if (item == "bms")
      t.bms = true;
    else if (item == "trace")
      t.trace = true;
    else if (item == "all")
      t = BaselineToggles{};
    else
      fail(ErrorKind::InvalidInput, "unknown baseline '" + item + "'");
  }
  return t;
}

SelectionReport run_selection(const RunConfig& config) {
  if (config.data_path) return run_selection(config, load_csv(*config.data_path, config.target));
  require(config.data.has_value(), ErrorKind::InvalidInput, "no data source configured");
  return run_selection(config, *config.data);
}

SelectionReport run_selection(const RunConfig& config, const Dataset<double>& data) {
  data.validate();
  require(!config.families.empty(), ErrorKind::InvalidInput, "at least one family is required");
  SelectionReport report;
  report.n = data.n();
  report.m = data.m();
  report.data_hash = content_hash(data);
  report.config = config;
  report.config.data.reset();

  const Vector<double>& y = data.y;
  for (const FamilySweep& sweep : config.families) {
    require(!sweep.specs.empty(), ErrorKind::InvalidInput, "family '" + sweep.text + "' has an empty range");
    for (const RegressorSpec& spec : sweep.specs) {
      CandidateRecord rec;
      rec.index = report.candidates.size();
      rec.family = family_of(spec);
      rec.spec = label(spec);
      rec.param = param_of(spec);
      try {
        const HatMatrix<double> hat = build_hat_matrix<double>(spec, data.x);
        std::optional<LossRankResult<double>> fast;
        if (projective_eligible(spec, config.lorp)) fast = projective_fast_path(hat, y, config.lorp.include_vn);
        rec.method = fast ? "projective" : "numeric";
        rec.lorp = fast ? *fast : loss_rank(hat, y, config.lorp);

        const double d_eff = d_eff_trace(hat);
        if (config.baselines.trace) rec.d_eff = d_eff;
        if (config.baselines.aic || config.baselines.bic) {
          const double rss = (y - hat.entries * y).squaredNorm();
          InformationCriteria<double> ic;
          try {
            ic = aic_bic(rss, d_eff, data.n());
          } catch (const Error& e) {
            if (e.kind() != ErrorKind::PerfectFit) throw;
            ic = {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
          }
          if (config.baselines.aic) rec.aic = ic.aic;
          if (config.baselines.bic) rec.bic = ic.bic;
        }
        if (config.baselines.bms) {
          if (const auto f = features_of(spec, data.x)) {
            try {
              const BmsOptimum<double> b = bms_minimize_alpha(*f, y, config.bms_prior);
              rec.bms = BmsRecord{b.result.neg_log_evidence, b.alpha, b.result.beta, b.result.beta_one_shot};
            } catch (const Error&) {
              // Not applicable to this candidate (e.g. rank-deficient Gram prior).
            }
          }
        }
      } catch (const Error& e) {
        rec.failure = e.what();
      }
      report.candidates.push_back(std::move(rec));
    }
  }

  report.winners.lorp = argmin_over(report.candidates, [](const CandidateRecord& r) {
    return std::optional<double>(r.lorp.lr);
  });
  report.winners.aic = argmin_over(report.candidates, [](const CandidateRecord& r) { return r.aic; });
  report.winners.bic = argmin_over(report.candidates, [](const CandidateRecord& r) { return r.bic; });
  report.winners.bms = argmin_over(report.candidates, [](const CandidateRecord& r) {
    return r.bms ? std::optional<double>(r.bms->neg_log_evidence) : std::nullopt;
  });
  return report;
}

nlohmann::json to_json(const SelectionReport& report, std::optional<std::string> timestamp) {
  using nlohmann::json;
  const RunConfig& cfg = report.config;
  json j;
  j["schema"] = kReportSchema;
  j["tool"] = {{"name", "lorp"}, {"version", kToolVersion}};
  if (timestamp) j["timestamp"] = *timestamp;

  char hash[32];
  std::snprintf(hash, sizeof(hash), "fnv1a64:%016llx", static_cast<unsigned long long>(report.data_hash));
  j["dataset"] = {{"n", report.n}, {"m", report.m}, {"hash", hash}};

  json families = json::array();
  for (const auto& f : cfg.families) families.push_back(f.text);
  json baselines = json::array();
  if (cfg.baselines.aic) baselines.push_back("aic");
  if (cfg.baselines.bic) baselines.push_back("bic");
  if (cfg.baselines.bms) baselines.push_back("bms");
  if (cfg.baselines.trace) baselines.push_back("trace");
  j["config"] = {
      {"data", cfg.data_path ? json(*cfg.data_path) : json("inline")},
      {"target", cfg.target},
      {"families", families},
      {"penalty", cfg.lorp.penalty == PenaltyKind::ResponseNorm ? "response" : "estimate"},
      {"filter_generic", cfg.lorp.filter_generic},
      {"alpha", cfg.lorp.fixed_alpha ? json(*cfg.lorp.fixed_alpha) : json("auto")},
      {"alpha_lo", cfg.lorp.alpha_lo},
      {"alpha_hi", cfg.lorp.alpha_hi},
      {"rel_tol", cfg.lorp.rel_tol},
      {"include_vn", cfg.lorp.include_vn},
      {"baselines", baselines},
      {"bms_prior", cfg.bms_prior == PriorKind::Identity ? "identity" : "gram"},
      {"seed", cfg.seed},
  };
  j["notes"] = {
      "all logarithms are natural",
      "lr excludes the log unit-ball volume unless include_vn is set",
      "aic and bic drop constant terms; d is the effective dimension tr M",
      "bms is minimized over the prior precision with the noise precision estimated self-consistently",
      "ties are broken toward the earlier candidate",
  };

  json candidates = json::array();
  for (const CandidateRecord& r : report.candidates) {
    json c = {{"index", r.index}, {"family", r.family}, {"spec", r.spec}, {"param", r.param}};
    if (!r.ok()) {
      c["status"] = "failed";
      c["failure"] = *r.failure;
      candidates.push_back(std::move(c));
      continue;
    }
    c["status"] = "ok";
    c["method"] = r.method;
    c["lr"] = number(r.lorp.lr);
    c["alpha_star"] = number(r.lorp.alpha_star);
    c["flat"] = r.lorp.flat_objective;
    c["loss"] = number(r.lorp.loss_at_alpha);
    c["logdet"] = number(r.lorp.logdet_at_alpha);
    json b = json::object();
    if (cfg.baselines.trace) b["d_eff_trace"] = optional_number(r.d_eff);
    if (cfg.baselines.aic) b["aic"] = optional_number(r.aic);
    if (cfg.baselines.bic) b["bic"] = optional_number(r.bic);
    if (cfg.baselines.bms) {
      b["bms"] = r.bms ? json{{"neg_log_evidence", number(r.bms->neg_log_evidence)},
                              {"alpha", number(r.bms->alpha)},
                              {"beta", number(r.bms->beta)},
                              {"beta_one_shot", number(r.bms->beta_one_shot)}}
                       : json();
    }
    c["baselines"] = std::move(b);
    candidates.push_back(std::move(c));
  }
  j["candidates"] = std::move(candidates);
  j["winners"] = {{"lorp", optional_index(report.winners.lorp)},
                  {"aic", optional_index(report.winners.aic)},
                  {"bic", optional_index(report.winners.bic)},
                  {"bms", optional_index(report.winners.bms)}};
  return j;
}

std::string curve_csv(const SelectionReport& report, const std::string& family) {
  std::string out = "index,spec,param,status,method,lr,alpha_star,flat,loss,logdet,d_eff_trace,aic,bic,bms\n";
  for (const CandidateRecord& r : report.candidates) {
    if (r.family != family) continue;
    out += std::to_string(r.index) + ',' + r.spec + ',' + csv_number(r.param) + ',';
    if (!r.ok()) {
      out += "failed,,,,,,,,,,\n";
      continue;
    }
    out += "ok," + r.method + ',' + csv_number(r.lorp.lr) + ',' + csv_number(r.lorp.alpha_star) + ',' +
           (r.lorp.flat_objective ? "1" : "0") + ',' + csv_number(r.lorp.loss_at_alpha) + ',' +
           csv_number(r.lorp.logdet_at_alpha) + ',' + csv_number(r.d_eff) + ',' + csv_number(r.aic) + ',' +
           csv_number(r.bic) + ',' + csv_number(r.bms ? std::optional<double>(r.bms->neg_log_evidence) : std::nullopt) +
           '\n';
  }
  return out;
}

}  // namespace lorp
