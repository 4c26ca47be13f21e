// Copyright 2026 The sfolab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace sfolab::csv {

/// Shortest decimal string that parses back to exactly `v`; "nan", "inf", "-inf"
/// for non-finite values.
std::string format_double(double v);

std::optional<double> parse_double(std::string_view s);
std::optional<std::uint64_t> parse_uint(std::string_view s);

/// Builds one comma-separated record. Fields never need quoting here.
class Row {
 public:
  Row& add(double v);
  Row& add(std::uint64_t v);
  Row& add(int v) { return add(static_cast<std::uint64_t>(v)); }
  Row& add(std::string_view v);
  Row& add(std::optional<double> v);
  Row& empty();

  const std::string& str() const { return text_; }

 private:
  void sep();
  std::string text_;
  bool first_ = true;
};

void write_header(std::ostream& os, const std::vector<std::string_view>& columns);
void write_row(std::ostream& os, const Row& row);

std::vector<std::string_view> split(std::string_view line, char delim = ',');
std::string_view trim(std::string_view s);

}  // namespace sfolab::csv
