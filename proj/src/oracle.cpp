#include "lorp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace lorp::oracle {

namespace {

// Rounding slack so that losses equal in exact arithmetic tie.
constexpr double kTieTol = 1e-12;

bool within_level(double loss, double level) { return loss <= level + kTieTol * (1.0 + std::abs(level)); }

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::mt19937_64 chunk_engine(std::uint64_t seed, int chunk) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chunk), 0x6c6f7270u};
  return std::mt19937_64(seq);
}

std::uint64_t chunk_size(std::uint64_t total, int chunks, int c) {
  const auto k = static_cast<std::uint64_t>(chunks);
  return total / k + (static_cast<std::uint64_t>(c) < total % k ? 1 : 0);
}

// Calls visit(point) for every uniform sample, chunk by chunk.
template <typename Visit>
void sample_box(const BoxDomain& box, std::uint64_t n_samples, std::uint64_t seed, int chunks, Visit&& visit) {
  require(chunks >= 1, ErrorKind::InvalidInput, "chunk count must be positive");
  const std::size_t n = box.dim();
  std::vector<double> point(n);
  for (int c = 0; c < chunks; ++c) {
    std::mt19937_64 rng = chunk_engine(seed, c);
    const std::uint64_t count = chunk_size(n_samples, chunks, c);
    for (std::uint64_t s = 0; s < count; ++s) {
      for (std::size_t i = 0; i < n; ++i) point[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * uniform01(rng);
      visit(std::span<const double>(point));
    }
  }
}

}  // namespace

LossFunction quadratic_loss(const Matrix<double>& hat, std::string name) {
  require(hat.rows() == hat.cols(), ErrorKind::InvalidInput, "hat matrix must be square");
  Matrix<double> residual = Matrix<double>::Identity(hat.rows(), hat.cols()) - hat;
  return {std::move(name), [residual = std::move(residual)](std::span<const double> y) {
            const Eigen::Map<const Vector<double>> v(y.data(), static_cast<Index>(y.size()));
            return (residual * v).squaredNorm();
          }};
}

LossFunction quadratic_form_loss(const Matrix<double>& s, std::string name) {
  require(s.rows() == s.cols(), ErrorKind::InvalidInput, "quadratic form must be square");
  return {std::move(name), [s](std::span<const double> y) {
            const Eigen::Map<const Vector<double>> v(y.data(), static_cast<Index>(y.size()));
            return v.dot(s * v);
          }};
}

BoxDomain BoxDomain::cube(std::size_t n, double lo, double hi) {
  return BoxDomain{std::vector<double>(n, lo), std::vector<double>(n, hi)};
}

double BoxDomain::volume() const {
  double v = 1.0;
  for (std::size_t i = 0; i < lo.size(); ++i) v *= hi[i] - lo[i];
  return v;
}

void BoxDomain::validate() const {
  require(!lo.empty() && lo.size() == hi.size(), ErrorKind::InvalidInput, "box bounds have mismatched dimension");
  for (std::size_t i = 0; i < lo.size(); ++i) {
    require(std::isfinite(lo[i]) && std::isfinite(hi[i]) && lo[i] < hi[i], ErrorKind::InvalidInput,
            "box needs finite lo < hi in every coordinate");
  }
}

BoxDomain default_box(std::span<const double> y) {
  require(!y.empty(), ErrorKind::InvalidInput, "empty response");
  const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
  double range = *mx - *mn;
  if (range <= 0) range = std::max(1.0, std::abs(*mx));
  return BoxDomain::cube(y.size(), *mn - 3 * range, *mx + 3 * range);
}

BoxDomain ellipsoid_box(const Matrix<double>& s, double level) {
  require(level > 0, ErrorKind::InvalidInput, "level must be positive");
  Eigen::LLT<Matrix<double>> llt(s);
  require(llt.info() == Eigen::Success, ErrorKind::Singularity, "quadratic form is not positive definite");
  const Matrix<double> inv = llt.solve(Matrix<double>::Identity(s.rows(), s.cols()));
  BoxDomain box;
  for (Index i = 0; i < s.rows(); ++i) {
    const double half = std::sqrt(level * inv(i, i));
    box.lo.push_back(-half);
    box.hi.push_back(half);
  }
  return box;
}

std::uint64_t exact_rank(const LossFunction& loss, std::span<const double> y_obs, std::span<const double> values,
                         std::uint64_t budget) {
  const std::size_t n = y_obs.size();
  require(n >= 1, ErrorKind::InvalidInput, "empty observation");
  require(!values.empty(), ErrorKind::InvalidInput, "value set is empty");
  const double per_dim = static_cast<double>(values.size());
  require(std::pow(per_dim, static_cast<double>(n)) <= static_cast<double>(budget), ErrorKind::TooLarge,
          "enumeration exceeds budget");

  const double level = loss(y_obs);
  std::vector<std::size_t> digit(n, 0);
  std::vector<double> point(n, values[0]);
  std::uint64_t count = 0;
  while (true) {
    if (within_level(loss(point), level)) ++count;
    std::size_t i = 0;
    while (i < n && ++digit[i] == values.size()) {
      digit[i] = 0;
      point[i] = values[0];
      ++i;
    }
    if (i == n) break;
    point[i] = values[digit[i]];
  }
  return count;
}

GridRank grid_rank_at_level(const LossFunction& loss, double level, const BoxDomain& box, double eps,
                            std::uint64_t budget) {
  box.validate();
  require(eps > 0, ErrorKind::InvalidInput, "eps must be positive");
  const std::size_t n = box.dim();
  std::vector<std::size_t> points(n);
  double total = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    points[i] = static_cast<std::size_t>(std::floor((box.hi[i] - box.lo[i]) / eps + 1e-9)) + 1;
    total *= static_cast<double>(points[i]);
  }
  require(total <= static_cast<double>(budget), ErrorKind::TooLarge, "grid exceeds enumeration budget");

  std::vector<std::size_t> digit(n, 0);
  std::vector<double> point(box.lo);
  GridRank out;
  while (true) {
    if (within_level(loss(point), level)) ++out.count;
    std::size_t i = 0;
    while (i < n && ++digit[i] == points[i]) {
      digit[i] = 0;
      point[i] = box.lo[i];
      ++i;
    }
    if (i == n) break;
    point[i] = box.lo[i] + eps * static_cast<double>(digit[i]);
  }
  out.volume_estimate = static_cast<double>(out.count) * std::pow(eps, static_cast<double>(n));
  return out;
}

GridRank grid_rank(const LossFunction& loss, std::span<const double> y_obs, const BoxDomain& box, double eps,
                   std::uint64_t budget) {
  require(y_obs.size() == box.dim(), ErrorKind::InvalidInput, "observation and box dimensions differ");
  return grid_rank_at_level(loss, loss(y_obs), box, eps, budget);
}

VolumeEstimate mc_volume_at_level(const LossFunction& loss, double level, const BoxDomain& box,
                                  std::uint64_t n_samples, std::uint64_t seed, int chunks) {
  box.validate();
  require(n_samples >= 1000, ErrorKind::InvalidInput, "need at least 1000 samples");
  VolumeEstimate out;
  out.samples = n_samples;
  sample_box(box, n_samples, seed, chunks, [&](std::span<const double> p) {
    if (within_level(loss(p), level)) ++out.hits;
  });
  const double p_hat = static_cast<double>(out.hits) / static_cast<double>(n_samples);
  const double vol = box.volume();
  out.estimate = vol * p_hat;
  out.stderr_ = vol * std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(n_samples));
  out.zero_hit = out.hits == 0;
  return out;
}

VolumeEstimate mc_volume(const LossFunction& loss, std::span<const double> y_obs, const BoxDomain& box,
                         std::uint64_t n_samples, std::uint64_t seed, int chunks) {
  require(y_obs.size() == box.dim(), ErrorKind::InvalidInput, "observation and box dimensions differ");
  return mc_volume_at_level(loss, loss(y_obs), box, n_samples, seed, chunks);
}

VolumeRatio mc_volume_ratio(const LossFunction& loss_a, double level_a, const LossFunction& loss_b, double level_b,
                            const BoxDomain& box, std::uint64_t n_samples, std::uint64_t seed, int chunks) {
  box.validate();
  require(n_samples >= 1000, ErrorKind::InvalidInput, "need at least 1000 samples");
  VolumeRatio out;
  sample_box(box, n_samples, seed, chunks, [&](std::span<const double> p) {
    const bool in_a = within_level(loss_a(p), level_a);
    const bool in_b = within_level(loss_b(p), level_b);
    out.hits_a += in_a;
    out.hits_b += in_b;
    out.hits_both += in_a && in_b;
  });
  require(out.hits_both > 0, ErrorKind::IndeterminateRatio, "no sample fell in both regions");

  // Fraction of V_A inside V_B over fraction of V_B inside V_A.
  const double frac_a_in_b = static_cast<double>(out.hits_both) / static_cast<double>(out.hits_a);
  const double frac_b_in_a = static_cast<double>(out.hits_both) / static_cast<double>(out.hits_b);
  out.ratio = frac_a_in_b / frac_b_in_a;
  out.log_ratio = std::log(out.ratio);

  const double total = static_cast<double>(n_samples);
  const double pa = static_cast<double>(out.hits_a) / total;
  const double pb = static_cast<double>(out.hits_b) / total;
  const double pab = static_cast<double>(out.hits_both) / total;
  const double var = (1 - pa) / (total * pa) + (1 - pb) / (total * pb) - 2 * (pab - pa * pb) / (total * pa * pb);
  out.stderr_log = std::sqrt(std::max(var, 0.0));
  return out;
}

}  // namespace lorp::oracle
