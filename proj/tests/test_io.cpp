#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lorp/io.hpp"
#include "lorp/selection.hpp"

using namespace lorp;

namespace {

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::InvalidInput;
}

}  // namespace

TEST_CASE("parse_csv") {
  SUBCASE("two rows") {
    const auto d = parse_csv("x,y\n1,2\n3,4\n", "y");
    CHECK(d.n() == 2);
    CHECK(d.m() == 1);
    CHECK(d.y[1] == 4.0);
    CHECK(d.x(0, 0) == 1.0);
  }
  SUBCASE("target in the middle keeps column order") {
    const auto d = parse_csv("a,t,b\n1,2,3\n4,5,6\n7,8,9\n", "t");
    CHECK(d.m() == 2);
    CHECK(d.x_names == std::vector<std::string>{"a", "b"});
    CHECK(d.x(2, 0) == 7.0);
    CHECK(d.x(2, 1) == 9.0);
    CHECK(d.y[2] == 8.0);
  }
  SUBCASE("CRLF line endings, whitespace and scientific notation") {
    const auto d = parse_csv("x, y\r\n1e-3, -2.5E2\r\n 0.5,+1\r\n", "y");
    CHECK(d.x(0, 0) == 1e-3);
    CHECK(d.y[0] == -250.0);
    CHECK(d.y[1] == 1.0);
  }
  SUBCASE("errors") {
    CHECK(kind_of([] { parse_csv("x,y\n1,2\n3,4\n", "z"); }) == ErrorKind::MissingColumn);
    CHECK(kind_of([] { parse_csv("x,y\n1,2\n", "y"); }) == ErrorKind::DataError);
    CHECK(kind_of([] { parse_csv("x,y\n1,2\n3,abc\n", "y"); }) == ErrorKind::DataError);
    CHECK(kind_of([] { parse_csv("x,y\n1,2\n3\n", "y"); }) == ErrorKind::DataError);
    CHECK(kind_of([] { parse_csv("", "y"); }) == ErrorKind::DataError);
    CHECK(kind_of([] { parse_csv("x,y\n1,2\n3,nan\n", "y"); }) == ErrorKind::DataError);
  }
  SUBCASE("error messages carry the location") {
    try {
      parse_csv("x,y\n1,2\n3,abc\n", "y");
    } catch (const Error& e) {
      const std::string msg = e.what();
      CHECK(msg.find("row 3") != std::string::npos);
      CHECK(msg.find("'y'") != std::string::npos);
    }
  }
}

TEST_CASE("csv round trip through a file") {
  SyntheticSpec spec;
  spec.kind = SyntheticKind::Sine;
  spec.n = 17;
  spec.noise_sd = 0.3;
  const auto d = gen_synthetic(spec, 5);
  const std::string path = std::string(LORP_TEST_DATA_DIR) + "/roundtrip.csv";
  write_csv(d, path);
  const auto back = load_csv(path, "y");
  CHECK(back.x == d.x);
  CHECK(back.y == d.y);
  CHECK(content_hash(back) == content_hash(d));
  std::remove(path.c_str());
  CHECK(kind_of([&] { load_csv(path, "y"); }) == ErrorKind::DataError);
}

TEST_CASE("gen_synthetic") {
  SUBCASE("noise-free line") {
    SyntheticSpec spec;
    spec.coeffs = {0.0, 1.0};
    spec.n = 11;
    const auto d = gen_synthetic(spec, 0);
    CHECK(d.y == d.x.col(0));
    CHECK(d.x(0, 0) == -1.0);
    CHECK(d.x(10, 0) == 1.0);
  }
  SUBCASE("seeded noise") {
    SyntheticSpec spec;
    spec.coeffs = {1.0, 0.0, 2.0};
    spec.noise_sd = 0.1;
    const auto a = gen_synthetic(spec, 3);
    const auto b = gen_synthetic(spec, 3);
    const auto c = gen_synthetic(spec, 4);
    CHECK(a.y == b.y);
    CHECK(a.x == c.x);
    CHECK(a.y != c.y);
    CHECK(content_hash(a) == content_hash(b));
    CHECK(content_hash(a) != content_hash(c));
  }
  SUBCASE("invalid specs") {
    SyntheticSpec spec;
    spec.n = 1;
    CHECK_THROWS_AS(gen_synthetic(spec, 0), Error);
    spec.n = 5;
    spec.noise_sd = -1;
    CHECK_THROWS_AS(gen_synthetic(spec, 0), Error);
    spec.noise_sd = 0;
    spec.x_lo = 2;
    spec.x_hi = 1;
    CHECK_THROWS_AS(gen_synthetic(spec, 0), Error);
  }
}

TEST_CASE("parse_family") {
  const auto knn = parse_family("knn:k=1..5");
  CHECK(knn.family == "knn");
  CHECK(knn.specs.size() == 5);
  CHECK(std::get<Knn>(knn.specs.back()).k == 5);

  const auto poly = parse_family("poly:d=0..10:2");
  CHECK(poly.specs.size() == 6);
  CHECK(std::get<Polynomial>(poly.specs[1]).d == 2);

  const auto kernel = parse_family("kernel:sigma=0.01..10");
  CHECK(kernel.specs.size() == 10);  // 0.01 * 2^9 = 5.12 <= 10
  CHECK(std::get<GaussianKernel>(kernel.specs[1]).sigma == doctest::Approx(0.02));

  CHECK(parse_family("knnprime:k=2..3").specs.size() == 2);
  CHECK(parse_family("lbfr:map=linear").specs.size() == 1);
  CHECK(parse_family("poly:d=3").specs.size() == 1);

  CHECK_THROWS_AS(parse_family("spline:k=1..3"), Error);
  CHECK_THROWS_AS(parse_family("knn:d=1..3"), Error);
  CHECK_THROWS_AS(parse_family("knn:k=5..1"), Error);
  CHECK_THROWS_AS(parse_family("knn"), Error);
  CHECK_THROWS_AS(parse_family("kernel:sigma=0..1"), Error);
}

TEST_CASE("run_selection on the two-point data") {
  RunConfig cfg;
  cfg.data = Dataset<double>((Matrix<double>(2, 1) << 1, 2).finished(), (Vector<double>(2) << 1, 2).finished());
  cfg.families = {parse_family("poly:d=0..2")};
  const auto report = run_selection(cfg);
  REQUIRE(report.candidates.size() == 3);
  REQUIRE(report.winners.lorp.has_value());
  CHECK(*report.winners.lorp == 1);
  CHECK(report.candidates[1].method == "projective");
  CHECK(report.candidates[1].lorp.lr == doctest::Approx(1.0986122886681097).epsilon(1e-10));
}

TEST_CASE("run_selection single candidate wins every criterion") {
  SyntheticSpec spec;
  spec.coeffs = {1.0, 0.5};
  spec.n = 20;
  spec.noise_sd = 0.2;
  RunConfig cfg;
  cfg.data = gen_synthetic(spec, 1);
  cfg.families = {parse_family("poly:d=2")};
  const auto report = run_selection(cfg);
  CHECK(report.winners.lorp == std::optional<std::size_t>(0));
  CHECK(report.winners.aic == std::optional<std::size_t>(0));
  CHECK(report.winners.bic == std::optional<std::size_t>(0));
  CHECK(report.winners.bms == std::optional<std::size_t>(0));
}

TEST_CASE("run_selection keeps every candidate and flags failures") {
  SyntheticSpec spec;
  spec.kind = SyntheticKind::Sine;
  spec.n = 12;
  spec.noise_sd = 0.1;
  RunConfig cfg;
  cfg.data = gen_synthetic(spec, 2);
  cfg.families = {parse_family("knn:k=1..14"), parse_family("knnprime:k=1..3"), parse_family("kernel:sigma=0.05..1")};
  const auto report = run_selection(cfg);
  std::size_t expected = 14 + 3 + parse_family("kernel:sigma=0.05..1").specs.size();
  CHECK(report.candidates.size() == expected);
  for (std::size_t i = 0; i < report.candidates.size(); ++i) CHECK(report.candidates[i].index == i);
  CHECK_FALSE(report.candidates[12].ok());  // k = 13 > n
  CHECK_FALSE(report.candidates[13].ok());
  REQUIRE(report.winners.lorp.has_value());
  CHECK(report.candidates[*report.winners.lorp].ok());
  CHECK_FALSE(report.candidates[14].bms.has_value());  // BMS only for linear-basis families

  const auto j = to_json(report);
  CHECK(j["schema"] == 1);
  CHECK(j["candidates"].size() == expected);
  CHECK(j["candidates"][12]["status"] == "failed");
  CHECK_FALSE(j.contains("timestamp"));
  CHECK(to_json(report, "2026-01-01T00:00:00Z")["timestamp"] == "2026-01-01T00:00:00Z");

  const std::string curve = curve_csv(report, "knn");
  CHECK(curve.rfind("index,", 0) == 0);
  CHECK(std::count(curve.begin(), curve.end(), '\n') == 15);
}

TEST_CASE("run_selection with every candidate failing") {
  RunConfig cfg;
  cfg.data = Dataset<double>((Matrix<double>(3, 1) << 1, 2, 3).finished(), Vector<double>::Zero(3));
  cfg.families = {parse_family("knn:k=1..2")};
  const auto report = run_selection(cfg);
  CHECK(report.all_failed());
  CHECK(to_json(report)["winners"]["lorp"].is_null());
}
