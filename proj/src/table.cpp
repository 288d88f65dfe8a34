// Copyright 2026 The AGIA Risk Authors
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

#include "table.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "json.hpp"

namespace agia::cli {
namespace {

std::string cell_text(const Cell& cell) {
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&cell)) return format_real(*d);
  return std::get<std::string>(cell);
}

// JSON has no literal for non-finite numbers; those become strings.
std::string json_value(const Cell& cell) {
  if (const auto* d = std::get_if<double>(&cell)) {
    const std::string text = format_real(*d);
    return std::isfinite(*d) ? text : nlohmann::json(text).dump();
  }
  if (const auto* s = std::get_if<std::string>(&cell)) {
    return nlohmann::json(*s).dump();
  }
  return cell_text(cell);
}

}  // namespace

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(text);
  }
  std::string quoted = "\"";
  for (char c : text) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

void TableWriter::write(const Record& record) {
  if (header_.empty()) {
    for (const auto& [name, _] : record) header_.push_back(name);
    if (format_ == Format::kCsv) {
      for (std::size_t i = 0; i < header_.size(); ++i) {
        out_ << (i ? "," : "") << csv_field(header_[i]);
      }
      out_ << '\n';
    }
  } else if (record.size() != header_.size()) {
    throw std::logic_error("TableWriter: ragged record");
  }
  if (format_ == Format::kCsv) {
    for (std::size_t i = 0; i < record.size(); ++i) {
      out_ << (i ? "," : "") << csv_field(cell_text(record[i].second));
    }
    out_ << '\n';
    return;
  }
  out_ << '{';
  for (std::size_t i = 0; i < record.size(); ++i) {
    out_ << (i ? "," : "") << nlohmann::json(record[i].first).dump() << ':'
         << json_value(record[i].second);
  }
  out_ << "}\n";
}

}  // namespace agia::cli
