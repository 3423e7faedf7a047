// Copyright 2026 The gbm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GBM_TESTS_TEST_UTIL_H_
#define GBM_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace gbm {

inline std::filesystem::path FixtureDir() { return GBM_FIXTURE_DIR; }

inline std::filesystem::path FixturePath(const std::string& name) { return FixtureDir() / name; }

// Sorted names of the `.ll` fixtures.
inline std::vector<std::string> FixtureNames() {
  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(FixtureDir())) {
    if (entry.path().extension() == ".ll") names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

// Fresh empty directory below the system temp dir, unique per process.
inline std::filesystem::path ScratchDir(const std::string& name) {
  static const std::string stamp = std::to_string(std::random_device{}());
  const auto dir = std::filesystem::temp_directory_path() / ("gbm_test_" + stamp) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace gbm

#endif  // GBM_TESTS_TEST_UTIL_H_
