// Copyright 2026 The sfolab Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfolab/harness/csv.hpp"

#include <charconv>
#include <cmath>

namespace sfolab::csv {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s == "nan") return std::nan("");
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> parse_uint(std::string_view s) {
  s = trim(s);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

void Row::sep() {
  if (!first_) text_.push_back(',');
  first_ = false;
}

Row& Row::add(double v) {
  sep();
  text_ += format_double(v);
  return *this;
}

Row& Row::add(std::uint64_t v) {
  sep();
  text_ += std::to_string(v);
  return *this;
}

Row& Row::add(std::string_view v) {
  sep();
  text_ += v;
  return *this;
}

Row& Row::add(std::optional<double> v) {
  if (v) return add(*v);
  return empty();
}

Row& Row::empty() {
  sep();
  return *this;
}

void write_header(std::ostream& os, const std::vector<std::string_view>& columns) {
  Row r;
  for (auto c : columns) r.add(c);
  write_row(os, r);
}

void write_row(std::ostream& os, const Row& row) { os << row.str() << '\n'; }

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace sfolab::csv
