// Copyright 2026 The JFT Authors.
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

#ifndef JFT_CLI_H_
#define JFT_CLI_H_

#include <iosfwd>

namespace jft {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;  // bad flags, input, or lookups
inline constexpr int kExitRuntime = 2;  // training or evaluation failures

// Entry point of the `jft` tool. Subcommands: ingest, train, evaluate,
// recommend, topics, feature-map, counterexample, synth.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace jft

#endif  // JFT_CLI_H_
