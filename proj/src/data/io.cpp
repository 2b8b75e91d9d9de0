#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "klnmf/data.hpp"
#include "klnmf/errors.hpp"

namespace klnmf {

namespace {

[[noreturn]] void fail_at(const std::filesystem::path& path, std::size_t line,
                          const std::string& what) {
  throw DataError(path.string() + ":" + std::to_string(line) + ": " + what);
}

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<double> parse_double(std::string_view tok) {
  tok = trim(tok);
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) return std::nullopt;
  return v;
}

std::optional<std::size_t> parse_index(std::string_view tok) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) return std::nullopt;
  return v;
}

void check_entry(const std::filesystem::path& path, std::size_t line, double v, std::size_t i,
                 std::size_t j) {
  const std::string where = "entry (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")";
  if (!std::isfinite(v)) fail_at(path, line, "non-finite " + where);
  if (v < 0.0) fail_at(path, line, "negative " + where + " = " + std::to_string(v));
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

NonnegMatrix load_matrix_market(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) fail_at(path, 1, "empty file");
  ++lineno;
  const auto header = split_ws(line);
  if (header.size() != 5 || header[0] != "%%MatrixMarket" || lower(header[1]) != "matrix")
    fail_at(path, lineno, "expected '%%MatrixMarket matrix <coordinate|array> real general'");
  const std::string layout = lower(header[2]), field = lower(header[3]),
                    symmetry = lower(header[4]);
  if (layout != "coordinate" && layout != "array")
    fail_at(path, lineno, "unsupported layout '" + layout + "'");
  if (field != "real" && field != "integer" && field != "double")
    fail_at(path, lineno, "unsupported field '" + field + "'");
  if (symmetry != "general") fail_at(path, lineno, "unsupported symmetry '" + symmetry + "'");
  const bool coordinate = layout == "coordinate";

  auto next_data_line = [&](std::vector<std::string_view>& tokens) {
    while (std::getline(in, line)) {
      ++lineno;
      const auto t = trim(line);
      if (t.empty() || t.front() == '%') continue;
      tokens = split_ws(line);
      return true;
    }
    return false;
  };

  std::vector<std::string_view> tok;
  if (!next_data_line(tok)) fail_at(path, lineno + 1, "missing size line");
  if (tok.size() != (coordinate ? 3u : 2u))
    fail_at(path, lineno, coordinate ? "size line must be 'rows cols nnz'" : "size line must be 'rows cols'");
  const auto rows = parse_index(tok[0]), cols = parse_index(tok[1]);
  const auto count = coordinate ? parse_index(tok[2]) : std::optional<std::size_t>(0);
  if (!rows || !cols || !count || *rows == 0 || *cols == 0)
    fail_at(path, lineno, "invalid size line");
  Matrix M(*rows, *cols, 0.0);
  const std::size_t expected = coordinate ? *count : *rows * *cols;

  for (std::size_t e = 0; e < expected; ++e) {
    if (!next_data_line(tok))
      fail_at(path, lineno + 1,
              "expected " + std::to_string(expected) + " entries, found " + std::to_string(e));
    std::size_t i, j;
    std::optional<double> v;
    if (coordinate) {
      if (tok.size() != 3) fail_at(path, lineno, "entry line must be 'row col value'");
      const auto pi = parse_index(tok[0]), pj = parse_index(tok[1]);
      if (!pi || !pj || *pi < 1 || *pj < 1 || *pi > *rows || *pj > *cols)
        fail_at(path, lineno, "index out of range");
      i = *pi - 1;
      j = *pj - 1;
      v = parse_double(tok[2]);
    } else {
      if (tok.size() != 1) fail_at(path, lineno, "array entry line must hold one value");
      i = e % *rows;  // column-major
      j = e / *rows;
      v = parse_double(tok[0]);
    }
    if (!v) fail_at(path, lineno, "malformed number");
    check_entry(path, lineno, *v, i, j);
    M(i, j) += *v;  // duplicate coordinates accumulate
  }
  if (next_data_line(tok)) fail_at(path, lineno, "unexpected data after the last entry");
  return NonnegMatrix(std::move(M));
}

NonnegMatrix load_csv(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::string line;
  std::size_t lineno = 0, cols = 0, rows = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::size_t count = 0;
    std::string_view rest = line;
    while (true) {
      const auto comma = rest.find(',');
      const auto field = rest.substr(0, comma);
      const auto v = parse_double(field);
      if (!v) fail_at(path, lineno, "malformed number '" + std::string(trim(field)) + "'");
      check_entry(path, lineno, *v, rows, count);
      values.push_back(*v);
      ++count;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (rows == 0)
      cols = count;
    else if (count != cols)
      fail_at(path, lineno,
              "expected " + std::to_string(cols) + " columns, found " + std::to_string(count));
    ++rows;
  }
  if (rows == 0) throw DataError(path.string() + ": empty matrix file");
  return NonnegMatrix(Matrix(rows, cols, std::move(values)));
}

std::string format_value(double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace

MatrixFormat format_from_path(const std::filesystem::path& path) {
  return lower(path.extension().string()) == ".mtx" ? MatrixFormat::MatrixMarket
                                                    : MatrixFormat::CSV;
}

std::optional<MatrixFormat> parse_matrix_format(std::string_view name) {
  const auto s = lower(name);
  if (s == "mtx" || s == "mm" || s == "matrixmarket") return MatrixFormat::MatrixMarket;
  if (s == "mtx-array" || s == "array") return MatrixFormat::MatrixMarketArray;
  if (s == "csv") return MatrixFormat::CSV;
  return std::nullopt;
}

NonnegMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format) {
  return format == MatrixFormat::CSV ? load_csv(path) : load_matrix_market(path);
}

NonnegMatrix load_matrix(const std::filesystem::path& path) {
  return load_matrix(path, format_from_path(path));
}

void save_matrix(const Matrix& M, const std::filesystem::path& path, MatrixFormat format) {
  auto out = open_for_write(path);
  if (format == MatrixFormat::MatrixMarket) {
    std::size_t nnz = 0;
    for (double v : M.values()) nnz += v != 0.0;
    out << "%%MatrixMarket matrix coordinate real general\n"
        << M.rows() << ' ' << M.cols() << ' ' << nnz << '\n';
    for (std::size_t i = 0; i < M.rows(); ++i)
      for (std::size_t j = 0; j < M.cols(); ++j)
        if (M(i, j) != 0.0) out << i + 1 << ' ' << j + 1 << ' ' << format_value(M(i, j)) << '\n';
  } else if (format == MatrixFormat::MatrixMarketArray) {
    out << "%%MatrixMarket matrix array real general\n" << M.rows() << ' ' << M.cols() << '\n';
    for (std::size_t j = 0; j < M.cols(); ++j)
      for (std::size_t i = 0; i < M.rows(); ++i) out << format_value(M(i, j)) << '\n';
  } else {
    for (std::size_t i = 0; i < M.rows(); ++i) {
      for (std::size_t j = 0; j < M.cols(); ++j) {
        if (j) out << ',';
        out << format_value(M(i, j));
      }
      out << '\n';
    }
  }
  if (!out.flush()) throw DataError("write failed: " + path.string());
}

void save_matrix(const Matrix& M, const std::filesystem::path& path) {
  save_matrix(M, path, format_from_path(path));
}

}  // namespace klnmf
