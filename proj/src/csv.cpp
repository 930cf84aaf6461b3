#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "lorp/io.hpp"

namespace lorp {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

double parse_number(std::string_view cell, std::size_t row, std::string_view column) {
  double value = 0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    fail(ErrorKind::DataError, "non-numeric cell '" + std::string(cell) + "' at row " + std::to_string(row) +
                                   ", column '" + std::string(column) + "'");
  }
  return value;
}

}  // namespace

Dataset<double> parse_csv(const std::string& text, const std::string& target) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::string_view view(line);
    if (view.size() >= 3 && std::memcmp(view.data(), "\xEF\xBB\xBF", 3) == 0) view.remove_prefix(3);
    for (auto cell : split(view)) header.emplace_back(cell);
    break;
  }
  require(!header.empty(), ErrorKind::DataError, "missing header row");

  std::size_t target_col = header.size();
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == target) target_col = c;
  require(target_col < header.size(), ErrorKind::MissingColumn, "target column '" + target + "' not in header");

  std::vector<std::vector<double>> rows;
  std::size_t row_number = 1;
  while (std::getline(in, line)) {
    ++row_number;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    require(cells.size() == header.size(), ErrorKind::DataError,
            "row " + std::to_string(row_number) + " has " + std::to_string(cells.size()) + " cells, expected " +
                std::to_string(header.size()));
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) values[c] = parse_number(cells[c], row_number, header[c]);
    rows.push_back(std::move(values));
  }
  require(rows.size() >= 2, ErrorKind::DataError, "need at least 2 data rows");

  const auto n = static_cast<Index>(rows.size());
  const auto m = static_cast<Index>(header.size() - 1);
  Dataset<double> data;
  data.x.resize(n, m);
  data.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    Index col = 0;
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == target_col)
        data.y[i] = rows[i][c];
      else
        data.x(i, col++) = rows[i][c];
    }
  }
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != target_col) data.x_names.push_back(header[c]);
  data.y_name = target;
  data.validate();
  return data;
}

Dataset<double> load_csv(const std::string& path, const std::string& target) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::DataError, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), target);
}

std::string format_csv(const Dataset<double>& data) {
  std::string out;
  for (Index c = 0; c < data.m(); ++c) {
    out += c < static_cast<Index>(data.x_names.size()) ? data.x_names[c] : "x" + std::to_string(c + 1);
    out += ',';
  }
  out += data.y_name + '\n';
  char buf[32];
  auto put = [&](double v) {
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, ptr);
  };
  for (Index i = 0; i < data.n(); ++i) {
    for (Index c = 0; c < data.m(); ++c) {
      put(data.x(i, c));
      out += ',';
    }
    put(data.y[i]);
    out += '\n';
  }
  return out;
}

void write_csv(const Dataset<double>& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::DataError, "cannot write '" + path + "'");
  out << format_csv(data);
}

std::uint64_t content_hash(const Dataset<double>& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&](const void* p, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ull;
    }
  };
  const std::int64_t shape[2] = {static_cast<std::int64_t>(data.n()), static_cast<std::int64_t>(data.m())};
  mix(shape, sizeof(shape));
  for (Index i = 0; i < data.n(); ++i) {
    for (Index c = 0; c < data.m(); ++c) {
      const double v = data.x(i, c);
      mix(&v, sizeof(v));
    }
    const double v = data.y[i];
    mix(&v, sizeof(v));
  }
  return h;
}

}  // namespace lorp
