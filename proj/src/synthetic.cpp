#include <cmath>
#include <random>

#include "lorp/io.hpp"

namespace lorp {

Dataset<double> gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  require(spec.n >= 2, ErrorKind::InvalidInput, "synthetic data needs n >= 2");
  require(spec.noise_sd >= 0 && std::isfinite(spec.noise_sd), ErrorKind::InvalidInput, "noise_sd must be >= 0");
  require(std::isfinite(spec.x_lo) && std::isfinite(spec.x_hi) && spec.x_lo < spec.x_hi, ErrorKind::InvalidInput,
          "x range must satisfy lo < hi");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset<double> data;
  data.x.resize(spec.n, 1);
  data.y.resize(spec.n);
  data.x_names = {"x"};
  data.y_name = "y";
  const double step = (spec.x_hi - spec.x_lo) / static_cast<double>(spec.n - 1);
  for (Index i = 0; i < spec.n; ++i) {
    const double x = i + 1 == spec.n ? spec.x_hi : spec.x_lo + step * static_cast<double>(i);
    double f = 0;
    if (spec.kind == SyntheticKind::Polynomial) {
      for (auto it = spec.coeffs.rbegin(); it != spec.coeffs.rend(); ++it) f = f * x + *it;
    } else {
      f = std::sin(2.0 * M_PI * spec.freq * x);
    }
    data.x(i, 0) = x;
    data.y[i] = f + (spec.noise_sd > 0 ? spec.noise_sd * noise(rng) : 0.0);
  }
  data.validate();
  return data;
}

}  // namespace lorp
