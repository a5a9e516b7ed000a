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

#ifndef ANOMDET_IO_HPP
#define ANOMDET_IO_HPP

#include <Eigen/Dense>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "anomdet/common.hpp"

namespace anomdet::io {

// Latent sample file: header `# modes=M photons=N source=<id>`, then one
// sample per line as space-separated values. Quantum samples are integer
// counts; Gaussian exports reuse the format with reals and photons=0.
struct LatentFile {
  int modes = 0;
  int photons = 0;
  std::string source;
  std::vector<Eigen::VectorXd> records;
};

void write_latent_file(const std::filesystem::path& path,
                       const LatentFile& file);
LatentFile read_latent_file(const std::filesystem::path& path);

// Key/value configuration: `key = value` lines, '#' comments. Unknown keys
// are rejected against the schema the caller supplies.
using KvMap = std::map<std::string, std::string>;
KvMap read_kv_file(const std::filesystem::path& path,
                   const std::vector<std::string>& allowed_keys);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path,
                     const std::string& content);

// Run manifest: JSON record of a command invocation, its seeds, and the
// digests of its inputs and outputs. Reruns are reproducible from it.
struct RunManifest {
  std::string command;
  std::vector<std::string> args;
  std::map<std::string, std::string> input_digests;
  std::map<std::string, std::string> output_digests;
  std::map<std::string, std::string> seeds;
  std::string version;
  std::string timestamp;
  std::string run_id;  // digest of command + args + input digests
};

void write_run_manifest(const std::filesystem::path& path,
                        RunManifest manifest);

// Sorted (path relative to dir) -> sha256 map over regular files. `skip`
// entries are filenames to ignore.
std::map<std::string, std::string> digest_directory(
    const std::filesystem::path& dir, const std::vector<std::string>& skip = {});

}  // namespace anomdet::io

#endif  // ANOMDET_IO_HPP
