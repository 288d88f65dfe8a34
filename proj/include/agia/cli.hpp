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

// Command-line front end. `run` is the whole program minus process setup so
// it can be driven from tests with string streams.

#ifndef AGIA_CLI_HPP_
#define AGIA_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace agia::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;

struct RunOptions {
  // Highlight the "error:" prefix of diagnostics.
  bool color = false;
};

/// Runs one command. `args` excludes the program name. Data goes to `out`,
/// diagnostics to `err`; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err, RunOptions options = {});

}  // namespace agia::cli

#endif  // AGIA_CLI_HPP_
