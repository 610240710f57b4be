// Copyright 2026 The frih Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <vector>

namespace frih::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,    // bad flags, unknown subcommand, invalid configuration
  kData = 2,     // unreadable, malformed or empty inputs
  kNumeric = 3,  // non-finite loss or gradient during training
};

// Runs one subcommand. args excludes the program name.
int dispatch(const std::vector<std::string>& args);
int dispatch(int argc, const char* const* argv);

std::string version_string();

}  // namespace frih::cli
