// Copyright 2026 The sifkit Authors
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

#ifndef SIFKIT_TESTS_SUPPORT_HPP
#define SIFKIT_TESTS_SUPPORT_HPP

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sifkit/sifkit.hpp"

namespace sifkit::testing {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string problem_path(const std::string& name) { return std::string(SIFKIT_PROBLEMS_DIR) + "/" + name; }
inline std::string data_path(const std::string& name) { return std::string(SIFKIT_TEST_DATA_DIR) + "/" + name; }

inline Problem load_problem(const std::string& name, const std::vector<ParamValue>& params = {},
                            const DecodeOptions& options = {}) {
  return decode_or_throw(read_file(problem_path(name)), params, options);
}

/// Valid corpus files; BADFILE.SIF is the deliberately broken one.
inline const std::vector<std::string>& valid_corpus() {
  static const std::vector<std::string> files{"ROSENBR.SIF", "HQUAD.SIF",  "LINPROG.SIF", "CONGPS.SIF",
                                              "CHAINROS.SIF", "XSCALED.SIF", "GRPPAR.SIF",  "ROSENE.SIF"};
  return files;
}

/// Builds a SIF line with the fields at their fixed columns.
inline std::string record(const std::string& f1, const std::string& f2 = "", const std::string& f3 = "",
                          const std::string& f4 = "", const std::string& f5 = "", const std::string& f6 = "") {
  std::string line;
  auto put = [&](std::size_t col, const std::string& s) {
    if (s.empty()) return;
    if (line.size() < col) line.resize(col, ' ');
    line += s;
  };
  put(1, f1);
  put(4, f2);
  put(14, f3);
  put(24, f4);
  put(39, f5);
  put(49, f6);
  if (line.empty()) line = " ";
  return line;
}

inline std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

}  // namespace sifkit::testing

#endif  // SIFKIT_TESTS_SUPPORT_HPP
