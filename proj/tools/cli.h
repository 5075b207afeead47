// Copyright 2026 The GTA Authors
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

#ifndef GTA_TOOLS_CLI_H_
#define GTA_TOOLS_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace gta::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitFailure = 3;

// Parses and runs one subcommand. Exit codes: 0 success, 2 usage or
// validation error, 3 runtime failure.
int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Keeps large per-step activation buffers on the heap instead of returning
// them to the OS after every step. Call once at process start.
void ConfigureAllocator();

}  // namespace gta::cli

#endif  // GTA_TOOLS_CLI_H_
