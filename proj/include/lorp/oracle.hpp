#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lorp/types.hpp"

namespace lorp::oracle {

/// Loss of a fictitious response vector y'. Must be deterministic.
struct LossFunction {
  std::string name;
  std::function<double(std::span<const double>)> fn;

  double operator()(std::span<const double> y) const { return fn(y); }
};

/// y' -> |(I - M) y'|^2
LossFunction quadratic_loss(const Matrix<double>& hat, std::string name = "quadratic");
/// y' -> y'^T S y'
LossFunction quadratic_form_loss(const Matrix<double>& s, std::string name = "quadratic-form");

/// Axis-aligned box [lo_i, hi_i].
struct BoxDomain {
  std::vector<double> lo;
  std::vector<double> hi;

  static BoxDomain cube(std::size_t n, double lo, double hi);
  std::size_t dim() const { return lo.size(); }
  double volume() const;
  void validate() const;
};

/// [min(y) - 3 range, max(y) + 3 range]^n.
BoxDomain default_box(std::span<const double> y);
/// Tight bounding box of {y : y^T S y <= level} for positive definite S.
BoxDomain ellipsoid_box(const Matrix<double>& s, double level);

inline constexpr std::uint64_t kDefaultBudget = 10'000'000;

/// #{y' in values^n : loss(y') <= loss(y_obs)}.
std::uint64_t exact_rank(const LossFunction& loss, std::span<const double> y_obs, std::span<const double> values,
                         std::uint64_t budget = kDefaultBudget);

struct GridRank {
  std::uint64_t count = 0;
  double volume_estimate = 0;  // count * eps^n
};

/// Counts eps-grid points lo + i*eps inside the box with loss <= level.
GridRank grid_rank_at_level(const LossFunction& loss, double level, const BoxDomain& box, double eps,
                            std::uint64_t budget = kDefaultBudget);
GridRank grid_rank(const LossFunction& loss, std::span<const double> y_obs, const BoxDomain& box, double eps,
                   std::uint64_t budget = kDefaultBudget);

struct VolumeEstimate {
  double estimate = 0;
  double stderr_ = 0;
  std::uint64_t hits = 0;
  std::uint64_t samples = 0;
  bool zero_hit = false;
};

inline constexpr int kDefaultChunks = 8;

/// Uniform rejection sampling over the box. Samples are drawn in `chunks`
/// independent streams seeded from (seed, chunk index).
VolumeEstimate mc_volume_at_level(const LossFunction& loss, double level, const BoxDomain& box,
                                  std::uint64_t n_samples, std::uint64_t seed, int chunks = kDefaultChunks);
VolumeEstimate mc_volume(const LossFunction& loss, std::span<const double> y_obs, const BoxDomain& box,
                         std::uint64_t n_samples, std::uint64_t seed, int chunks = kDefaultChunks);

struct VolumeRatio {
  double ratio = 0;      // |V_B| / |V_A|
  double log_ratio = 0;  // LR_B - LR_A
  double stderr_log = 0;
  std::uint64_t hits_a = 0;
  std::uint64_t hits_b = 0;
  std::uint64_t hits_both = 0;
};

/// Ratio |V_B| / |V_A| of the sublevel sets {lossA <= level_a} and
/// {lossB <= level_b}. Each region is sampled uniformly by rejection from the
/// shared box; the ratio is formed from the cross-membership fractions
/// (|V_A n V_B| / |V_A|) / (|V_A n V_B| / |V_B|).
VolumeRatio mc_volume_ratio(const LossFunction& loss_a, double level_a, const LossFunction& loss_b, double level_b,
                            const BoxDomain& box, std::uint64_t n_samples, std::uint64_t seed,
                            int chunks = kDefaultChunks);

}  // namespace lorp::oracle
