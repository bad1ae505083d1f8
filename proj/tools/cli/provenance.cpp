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

#include "provenance.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <sys/file.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <memory>

#include "kdprobe/error.hpp"

namespace kdprobe::cli {

namespace fs = std::filesystem;

std::string sha256_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kMissingInput, "cannot open " + file.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                             &EVP_MD_CTX_free);
  require(ctx && EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) == 1, ErrorCode::kIo,
          "sha256 init failed");
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<size_t>(in.gcount()));
  }
  require(in.eof(), ErrorCode::kIo, "read error on " + file.string());
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

DirLock::DirLock(const fs::path& dir) {
  const auto file = dir / ".kdprobe.lock";
  fd_ = ::open(file.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  require(fd_ >= 0, ErrorCode::kIo,
          "cannot create lock " + file.string() + ": " + std::strerror(errno));
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    fail(ErrorCode::kBusy, "another stage holds " + file.string());
  }
}

DirLock::~DirLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

void write_file_atomic(const fs::path& file,
                       const std::function<void(const fs::path&)>& fill_path) {
  fs::path tmp = file;
  tmp += ".tmp";
  try {
    fill_path(tmp);
    fs::rename(tmp, file);
  } catch (...) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw;
  }
}

void write_file_atomic(const fs::path& file, const std::function<void(std::ostream&)>& fill) {
  write_file_atomic(file, [&](const fs::path& tmp) {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + tmp.string());
    fill(out);
    out.flush();
    require(static_cast<bool>(out), ErrorCode::kIo, "write failed for " + tmp.string());
  });
}

Manifest::Manifest(std::string stage) : stage_(std::move(stage)) {}

void Manifest::add_input(const std::string& role, const fs::path& file) {
  require(fs::is_regular_file(file), ErrorCode::kMissingInput,
          role + " input not found: " + file.string());
  inputs_.push_back({role, file.string(), sha256_file(file), fs::file_size(file)});
}

void Manifest::add_artifact(const fs::path& out_dir, const fs::path& file) {
  const auto full = out_dir / file;
  artifacts_.push_back({"", file.generic_string(), sha256_file(full), fs::file_size(full)});
}

void Manifest::set_parameters(std::string json_object) { parameters_ = std::move(json_object); }

void Manifest::add_warning(std::string text) { warnings_.push_back(std::move(text)); }

std::string Manifest::to_json() const {
  using json = nlohmann::ordered_json;
  json j;
  j["format"] = "kdprobe-manifest/1";
  j["stage"] = stage_;
  j["parameters"] = json::parse(parameters_);
  j["inputs"] = json::array();
  for (const auto& e : inputs_) {
    j["inputs"].push_back(
        {{"role", e.role}, {"path", e.path}, {"sha256", e.sha256}, {"bytes", e.bytes}});
  }
  j["artifacts"] = json::array();
  for (const auto& e : artifacts_) {
    j["artifacts"].push_back({{"path", e.path}, {"sha256", e.sha256}, {"bytes", e.bytes}});
  }
  j["warnings"] = warnings_;
  return j.dump(2) + "\n";
}

}  // namespace kdprobe::cli
