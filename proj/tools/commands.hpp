/*
 *   Copyright 2026 The rambo-msmt Authors
 *
 *   Licensed under the Apache License, Version 2.0 (the "License");
 *   you may not use this file except in compliance with the License.
 *   You may obtain a copy of the License at
 *
 *       http://www.apache.org/licenses/LICENSE-2.0
 *
 *   Unless required by applicable law or agreed to in writing, software
 *   distributed under the License is distributed on an "AS IS" BASIS,
 *   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *   See the License for the specific language governing permissions and
 *   limitations under the License.
 */

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rambo::tools {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitDataError = 2,
  kExitCorruptIndex = 3,
};

/// Runs the rambo command line. args excludes the program name.
/// Subcommands: build, query, fold, stack, bench-fp, analyze, stats.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            std::istream& in);

}  // namespace rambo::tools
