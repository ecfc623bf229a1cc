// Copyright 2026 The Streamsan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "streamsan/ingest.h"

#include <charconv>
#include <cmath>
#include <string_view>

#include "absl/strings/str_cat.h"

namespace streamsan {

namespace {

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::optional<std::string_view> Field(std::string_view line, int column,
                                      char delimiter) {
  for (int i = 0; i < column; ++i) {
    const auto cut = line.find(delimiter);
    if (cut == std::string_view::npos) return std::nullopt;
    line.remove_prefix(cut + 1);
  }
  return line.substr(0, line.find(delimiter));
}

std::optional<double> ParseNumber(std::string_view text) {
  text = Trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0;
  const auto [end, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty()) {
    return std::nullopt;
  }
  return value;
}

}  // namespace

absl::StatusOr<std::optional<Index>> RecordReader::Next() {
  while (std::getline(in_, line_)) {
    ++line_number_;
    if (options_.has_header && line_number_ == 1) continue;
    std::string_view text = line_;
    if (Trim(text).empty()) continue;
    std::optional<std::string_view> field = text;
    if (options_.csv_column.has_value()) {
      field = Field(text, *options_.csv_column, options_.delimiter);
    }
    std::optional<double> value;
    if (field.has_value()) value = ParseNumber(*field);
    if (!value.has_value() || std::isnan(*value)) {
      if (options_.lenient) {
        ++skipped_malformed_;
        continue;
      }
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_number_, ": malformed record '",
                       line_.substr(0, 64), "'"));
    }
    const bool in_range = *value >= domain_.lo() && *value <= domain_.hi();
    if (!in_range) {
      if (!options_.lenient) {
        return absl::OutOfRangeError(absl::StrCat(
            "line ", line_number_, ": value ", *value, " outside [",
            domain_.lo(), ", ", domain_.hi(), "]"));
      }
      ++clamped_;
    }
    ++records_;
    return std::optional<Index>(
        *Quantize(*value, domain_, QuantizeMode::kClamp));
  }
  return std::optional<Index>();
}

absl::StatusOr<std::vector<Index>> IngestAll(std::istream& in,
                                             const Domain& domain,
                                             const IngestOptions& options) {
  RecordReader reader(in, domain, options);
  std::vector<Index> out;
  while (true) {
    absl::StatusOr<std::optional<Index>> next = reader.Next();
    if (!next.ok()) return next.status();
    if (!next->has_value()) break;
    out.push_back(**next);
  }
  if (out.empty()) return absl::InvalidArgumentError("empty stream");
  return out;
}

}  // namespace streamsan
