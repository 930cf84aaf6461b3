#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lorp/types.hpp"

namespace lorp {

/// Reads a comma-separated file with a header row. The target column becomes
/// y; every other column becomes a covariate, in header order.
Dataset<double> load_csv(const std::string& path, const std::string& target);
Dataset<double> parse_csv(const std::string& text, const std::string& target);

/// Writes covariates then the response, header row first, round-trip precision.
void write_csv(const Dataset<double>& data, const std::string& path);
std::string format_csv(const Dataset<double>& data);

/// 64-bit FNV-1a over the shape and the raw bytes of x and y.
std::uint64_t content_hash(const Dataset<double>& data);

enum class SyntheticKind { Polynomial, Sine };

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::Polynomial;
  /// Polynomial coefficients c0, c1, ... of c0 + c1 x + c2 x^2 + ...
  std::vector<double> coeffs{0.0, 1.0};
  /// Sine: y = sin(2 pi freq x).
  double freq = 1.0;
  Index n = 50;
  double noise_sd = 0.0;
  double x_lo = -1.0;
  double x_hi = 1.0;
};

/// Equally spaced x on [x_lo, x_hi], y = f(x) + N(0, noise_sd^2) noise.
Dataset<double> gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace lorp
