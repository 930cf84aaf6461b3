#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lorp {

enum class ErrorKind {
  InvalidInput,
  NumericalFailure,
  FilterInapplicable,
  DegenerateData,
  Singularity,
  NotAProjection,
  OutsideValidity,
  PerfectFit,
  InfiniteDivergence,
  DivergentSeries,
  TooLarge,
  IndeterminateRatio,
  SelectionFailed,
  MissingColumn,
  DataError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::NumericalFailure: return "numerical-failure";
    case ErrorKind::FilterInapplicable: return "filter-inapplicable";
    case ErrorKind::DegenerateData: return "degenerate-data";
    case ErrorKind::Singularity: return "singularity";
    case ErrorKind::NotAProjection: return "not-a-projection";
    case ErrorKind::OutsideValidity: return "outside-validity";
    case ErrorKind::PerfectFit: return "perfect-fit";
    case ErrorKind::InfiniteDivergence: return "infinite-divergence";
    case ErrorKind::DivergentSeries: return "divergent-series";
    case ErrorKind::TooLarge: return "too-large";
    case ErrorKind::IndeterminateRatio: return "indeterminate-ratio";
    case ErrorKind::SelectionFailed: return "selection-failed";
    case ErrorKind::MissingColumn: return "missing-column";
    case ErrorKind::DataError: return "data-error";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the kinds above so
/// callers can branch (e.g. fall back from the projective closed form).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace lorp
