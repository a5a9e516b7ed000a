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

#include "anomdet/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace anomdet::io {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::string format_sample_value(double v) {
  // Integers (the quantum case) print compactly; reals keep full precision.
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    return buf;
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_latent_file(const std::filesystem::path& path,
                       const LatentFile& file) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write latent file: " + path.string());
  out << "# modes=" << file.modes << " photons=" << file.photons
      << " source=" << file.source << '\n';
  for (const auto& rec : file.records) {
    if (rec.size() != file.modes) {
      throw DataError("latent record length does not match header modes");
    }
    for (Eigen::Index i = 0; i < rec.size(); ++i) {
      if (i > 0) out << ' ';
      out << format_sample_value(rec(i));
    }
    out << '\n';
  }
  if (!out) throw DataError("latent file write failed: " + path.string());
}

LatentFile read_latent_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open latent file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError("empty latent file: " + path.string());
  }
  LatentFile file;
  {
    std::istringstream hs(line);
    std::string hash, field;
    hs >> hash;
    if (hash != "#") throw DataError("latent file header must start with '#'");
    while (hs >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = field.substr(0, eq);
      const std::string value = field.substr(eq + 1);
      if (key == "modes") {
        file.modes = std::stoi(value);
      } else if (key == "photons") {
        file.photons = std::stoi(value);
      } else if (key == "source") {
        file.source = value;
      }
    }
  }
  if (file.modes <= 0) {
    throw DataError("latent file header missing modes: " + path.string());
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    std::istringstream ls(t);
    Eigen::VectorXd rec(file.modes);
    for (int i = 0; i < file.modes; ++i) {
      if (!(ls >> rec(i))) {
        throw DataError("latent file " + path.string() + " line " +
                        std::to_string(line_no) + ": expected " +
                        std::to_string(file.modes) + " values");
      }
    }
    double extra;
    if (ls >> extra) {
      throw DataError("latent file " + path.string() + " line " +
                      std::to_string(line_no) + ": too many values");
    }
    file.records.push_back(std::move(rec));
  }
  return file;
}

KvMap read_kv_file(const std::filesystem::path& path,
                   const std::vector<std::string>& allowed_keys) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open config file: " + path.string());
  KvMap out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config " + path.string() + " line " +
                       std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (std::find(allowed_keys.begin(), allowed_keys.end(), key) ==
        allowed_keys.end()) {
      throw UsageError("config " + path.string() + " line " +
                       std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (out.count(key)) {
      throw UsageError("config " + path.string() + " line " +
                       std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    out[key] = value;
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path.string());
  out << content;
  if (!out) throw DataError("write failed: " + path.string());
}

void write_run_manifest(const std::filesystem::path& path,
                        RunManifest manifest) {
  manifest.version = kVersion;
  std::string identity = manifest.command;
  for (const auto& a : manifest.args) identity += " " + a;
  for (const auto& [k, v] : manifest.input_digests) identity += " " + k + "=" + v;
  manifest.run_id = sha256_hex(identity);

  nlohmann::json j;
  j["command"] = manifest.command;
  j["args"] = manifest.args;
  j["input_digests"] = manifest.input_digests;
  j["output_digests"] = manifest.output_digests;
  j["seeds"] = manifest.seeds;
  j["version"] = manifest.version;
  j["timestamp"] = manifest.timestamp;
  j["run_id"] = manifest.run_id;
  write_text_file(path, j.dump(2) + "\n");
}

std::map<std::string, std::string> digest_directory(
    const std::filesystem::path& dir, const std::vector<std::string>& skip) {
  std::map<std::string, std::string> out;
  if (!std::filesystem::is_directory(dir)) {
    throw DataError("not a directory: " + dir.string());
  }
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (std::find(skip.begin(), skip.end(), name) != skip.end()) continue;
    const std::string rel =
        std::filesystem::relative(entry.path(), dir).generic_string();
    out[rel] = sha256_file(entry.path().string());
  }
  return out;
}

}  // namespace anomdet::io
