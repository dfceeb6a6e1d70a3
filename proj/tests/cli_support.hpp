// Copyright 2026 The sweetfloq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Helpers for driving the command-line tool from tests.

#include <sys/wait.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace sweetfloq::testing {

namespace fs = std::filesystem;

// Fresh scratch directory, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("sweetfloq_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }
  size_t file_count() const {
    size_t n = 0;
    for (const auto& e : fs::directory_iterator(path_)) n += e.is_regular_file() ? 1 : 0;
    return n;
  }

 private:
  fs::path path_;
};

inline std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

// Runs the tool with stdout and stderr captured to files in `dir`;
// returns the exit status.
inline int run_cli(const std::string& args, const ScratchDir& dir, const std::string& tag = "run") {
  const std::string cmd = std::string("env -u SOURCE_DATE_EPOCH ") + SWEETFLOQ_CLI_PATH + " " + args + " > " +
                          (dir / (tag + ".stdout")).string() + " 2> " + (dir / (tag + ".stderr")).string();
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

inline std::string config_path(const std::string& name) { return std::string(SWEETFLOQ_CONFIG_DIR) + "/" + name; }

}  // namespace sweetfloq::testing
