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

#ifndef AGIA_SRC_TABLE_HPP_
#define AGIA_SRC_TABLE_HPP_

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace agia::cli {

using Cell = std::variant<std::int64_t, double, std::string>;
using Record = std::vector<std::pair<std::string, Cell>>;

enum class Format { kCsv, kJson };

// Lossless text for a real: 17 significant digits, "inf"/"-inf"/"nan" for
// non-finite values.
std::string format_real(double value);

// RFC 4180: quote when the field holds a comma, quote, CR or LF.
std::string csv_field(std::string_view text);

/// Streams records as CSV (header from the first record) or JSON lines.
/// Every record of one table must have the same columns.
class TableWriter {
 public:
  TableWriter(std::ostream& out, Format format) : out_(out), format_(format) {}

  void write(const Record& record);

 private:
  std::ostream& out_;
  Format format_;
  std::vector<std::string> header_;
};

}  // namespace agia::cli

#endif  // AGIA_SRC_TABLE_HPP_
