// Copyright 2026 The kdprobe Authors
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

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace kdprobe::cli {

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& file);

// Exclusive advisory lock on <dir>/.kdprobe.lock for the lifetime of the
// object. A second holder fails with ErrorCode::kBusy instead of waiting.
class DirLock {
 public:
  explicit DirLock(const std::filesystem::path& dir);
  ~DirLock();
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  int fd_ = -1;
};

// Writes through a sibling temporary and renames it into place, so readers
// never observe a half-written artifact.
void write_file_atomic(const std::filesystem::path& file,
                       const std::function<void(std::ostream&)>& fill);
void write_file_atomic(const std::filesystem::path& file,
                       const std::function<void(const std::filesystem::path&)>& fill_path);

// Collected while a stage runs, then serialized as <name>.manifest.json.
// Holds no clocks or host details so that reruns are byte-identical.
class Manifest {
 public:
  explicit Manifest(std::string stage);

  void add_input(const std::string& role, const std::filesystem::path& file);
  // `file` is relative to the output directory.
  void add_artifact(const std::filesystem::path& out_dir, const std::filesystem::path& file);
  void set_parameters(std::string json_object);
  void add_warning(std::string text);
  const std::vector<std::string>& warnings() const { return warnings_; }

  std::string to_json() const;

 private:
  struct Entry {
    std::string role;
    std::string path;
    std::string sha256;
    std::uintmax_t bytes = 0;
  };
  std::string stage_;
  std::vector<Entry> inputs_;
  std::vector<Entry> artifacts_;
  std::string parameters_ = "{}";
  std::vector<std::string> warnings_;
};

}  // namespace kdprobe::cli
