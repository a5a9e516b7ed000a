// Copyright 2026 The anomdet authors
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

#ifndef ANOMDET_CLI_HPP
#define ANOMDET_CLI_HPP

#include <string>
#include <vector>

namespace anomdet::cli {

// Entry point shared by the binary and the tests. Returns the process exit
// code: 0 ok, 1 usage, 2 data, 3 divergence, 4 capacity.
int run_cli(const std::vector<std::string>& args);

}  // namespace anomdet::cli

#endif  // ANOMDET_CLI_HPP
