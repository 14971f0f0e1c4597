// Copyright (c) 2026 USM Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef USM_CLI_H_
#define USM_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace usm::cli {

// Runs one CLI invocation. `args` excludes the program name. Results go to
// `out`, progress and diagnostics to `err`. Returns the process exit code:
// 0 success, 2 shape/format error, 3 empty corpus, 4 invalid weights,
// 5 insufficient data.
int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace usm::cli

#endif  // USM_CLI_H_
