#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lorp/baselines.hpp"
#include "lorp/core.hpp"
#include "lorp/io.hpp"

namespace lorp {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kReportSchema = 1;

/// One `family:param=lo..hi[:step]` sweep. Integer parameters step
/// additively (default 1); kernel bandwidths step geometrically by the given
/// ratio (default 2).
struct FamilySweep {
  std::string text;
  std::string family;
  std::vector<RegressorSpec> specs;
};

FamilySweep parse_family(const std::string& text);

struct BaselineToggles {
  bool aic = true;
  bool bic = true;
  bool bms = true;
  bool trace = true;
};

BaselineToggles parse_baselines(const std::string& csv);

struct RunConfig {
  std::optional<std::string> data_path;
  std::string target = "y";
  /// Used when no data path is given.
  std::optional<Dataset<double>> data;
  std::vector<FamilySweep> families;
  LossRankOptions<double> lorp;
  BaselineToggles baselines;
  PriorKind bms_prior = PriorKind::Identity;
  std::uint64_t seed = 0;
};

struct BmsRecord {
  double neg_log_evidence = 0;
  double alpha = 0;
  double beta = 0;
  double beta_one_shot = 0;
};

struct CandidateRecord {
  std::size_t index = 0;
  std::string family;
  std::string spec;
  double param = 0;
  std::optional<std::string> failure;
  std::string method;  // "projective" or "numeric"
  LossRankResult<double> lorp;
  std::optional<double> d_eff;
  std::optional<double> aic;  // -inf for a perfect fit
  std::optional<double> bic;
  std::optional<BmsRecord> bms;

  bool ok() const { return !failure.has_value(); }
};

struct Winners {
  std::optional<std::size_t> lorp;
  std::optional<std::size_t> aic;
  std::optional<std::size_t> bic;
  std::optional<std::size_t> bms;
};

struct SelectionReport {
  Index n = 0;
  Index m = 0;
  std::uint64_t data_hash = 0;
  RunConfig config;
  std::vector<CandidateRecord> candidates;
  Winners winners;

  bool all_failed() const { return !winners.lorp.has_value(); }
};

/// Scores every swept candidate. Never throws for per-candidate failures;
/// check all_failed() on the result.
SelectionReport run_selection(const RunConfig& config);
SelectionReport run_selection(const RunConfig& config, const Dataset<double>& data);

/// JSON report. The timestamp, when present, is the only field that varies
/// between identical runs.
nlohmann::json to_json(const SelectionReport& report, std::optional<std::string> timestamp = std::nullopt);

/// LR-vs-complexity table for one family, for plotting.
std::string curve_csv(const SelectionReport& report, const std::string& family);

}  // namespace lorp
