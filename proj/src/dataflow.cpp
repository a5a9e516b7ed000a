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

#include "anomdet/dataflow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace anomdet::data {

namespace {

constexpr double kStdFloor = 1e-8;

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("malformed number '" + s + "' in " + context);
  }
}

std::string series_index_id(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%04d", prefix, i);
  return buf;
}

}  // namespace

std::string label_name(Label label) {
  return label == Label::kNormal ? "normal" : "anomalous";
}

Label label_from_name(const std::string& name) {
  if (name == "normal") return Label::kNormal;
  if (name == "anomalous") return Label::kAnomalous;
  throw DataError("unknown label: " + name);
}

std::vector<std::string> default_quantity_names() {
  return {"q1", "q2", "q3", "q4", "q5"};
}

std::vector<RawSeries> generate_surrogate(const SurrogateConfig& config,
                                          int n_normal, int n_anomalous,
                                          std::uint64_t seed) {
  if (n_normal < 0 || n_anomalous < 0) {
    throw UsageError("generate_surrogate: counts must be >= 0");
  }
  if (config.gains.size() != config.lags.size() || config.gains.empty()) {
    throw UsageError("generate_surrogate: gains/lags size mismatch");
  }
  if (config.noise_std < 0.0 || config.mean_variance < 0.0) {
    throw UsageError("generate_surrogate: negative variance");
  }
  if (config.fault_onset < 1 || config.fault_onset > config.length) {
    throw UsageError("generate_surrogate: fault onset outside series length");
  }
  const int q = static_cast<int>(config.gains.size());
  const int hours = config.length;
  const double mean_std = std::sqrt(config.mean_variance);

  std::vector<RawSeries> out;
  out.reserve(static_cast<std::size_t>(n_normal + n_anomalous));
  auto make_series = [&](Label label, int index, std::uint64_t series_seed) {
    Rng rng(series_seed);
    RawSeries s;
    s.label = label;
    s.quantity_names = default_quantity_names();
    s.quantity_names.resize(static_cast<std::size_t>(q), "q?");
    for (int i = 5; i < q; ++i) {
      s.quantity_names[static_cast<std::size_t>(i)] = "q" + std::to_string(i + 1);
    }
    s.values.resize(hours, q);

    const double level = (label == Label::kNormal)
                             ? config.baseline + mean_std * rng.gaussian()
                             : config.baseline;
    if (label == Label::kAnomalous) s.fault_onset_hour = config.fault_onset;
    s.id = series_index_id(
        label == Label::kNormal ? "normal" : "anomalous", index);

    // Driver signal, then first-order lag responses per quantity.
    std::vector<double> state(static_cast<std::size_t>(q));
    for (int f = 0; f < q; ++f) {
      state[static_cast<std::size_t>(f)] =
          config.baseline * config.gains[static_cast<std::size_t>(f)];
    }
    for (int t = 1; t <= hours; ++t) {
      double target = level;
      if (label == Label::kAnomalous && t >= config.fault_onset) {
        target = config.fault_level;
      }
      const double driver = target + config.noise_std * rng.gaussian();
      for (int f = 0; f < q; ++f) {
        const double gain = config.gains[static_cast<std::size_t>(f)];
        const double lag = config.lags[static_cast<std::size_t>(f)];
        double& y = state[static_cast<std::size_t>(f)];
        y += (gain * driver - y) / lag;
        s.values(t - 1, f) = y;
      }
    }
    return s;
  };

  for (int i = 0; i < n_normal; ++i) {
    out.push_back(make_series(Label::kNormal, i, derive_seed(seed, static_cast<std::uint64_t>(i))));
  }
  for (int i = 0; i < n_anomalous; ++i) {
    out.push_back(make_series(
        Label::kAnomalous, i,
        derive_seed(seed, 1000000 + static_cast<std::uint64_t>(i))));
  }
  return out;
}

void write_dataset(const std::filesystem::path& dir,
                   const std::vector<RawSeries>& series) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream manifest(dir / "manifest.csv", std::ios::binary);
  if (!manifest) {
    throw DataError("cannot write manifest in " + dir.string());
  }
  manifest << "file,label,fault_onset\n";
  for (const auto& s : series) {
    const std::string filename = s.id + ".csv";
    manifest << filename << ',' << label_name(s.label) << ',';
    if (s.fault_onset_hour) manifest << *s.fault_onset_hour;
    manifest << '\n';
    std::ofstream f(dir / filename, std::ios::binary);
    if (!f) throw DataError("cannot write series file " + filename);
    f << "hour";
    for (const auto& name : s.quantity_names) f << ',' << name;
    f << '\n';
    for (int t = 0; t < s.hours(); ++t) {
      f << (t + 1);
      for (int c = 0; c < s.quantities(); ++c) {
        f << ',' << format_value(s.values(t, c));
      }
      f << '\n';
    }
    if (!f) throw DataError("write failed for series file " + filename);
  }
  if (!manifest) throw DataError("manifest write failed in " + dir.string());
}

namespace {

RawSeries load_series_file(const std::filesystem::path& path, Label label,
                           std::optional<int> onset) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open series file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError("empty series file: " + path.string());
  }
  auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "hour") {
    throw DataError("series file " + path.string() +
                    ": header must start with 'hour'");
  }
  RawSeries s;
  s.id = path.stem().string();
  s.label = label;
  s.fault_onset_hour = onset;
  s.quantity_names.assign(header.begin() + 1, header.end());
  const int q = static_cast<int>(s.quantity_names.size());
  std::vector<double> flat;
  int rows = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != q + 1) {
      throw DataError("series file " + path.string() + " line " +
                      std::to_string(line_no) + ": expected " +
                      std::to_string(q + 1) + " fields");
    }
    const std::string ctx = path.string() + " line " + std::to_string(line_no);
    const double hour = parse_double(fields[0], ctx);
    if (static_cast<int>(hour) != rows + 1) {
      throw DataError("series file " + path.string() + " line " +
                      std::to_string(line_no) + ": hours must be 1,2,...");
    }
    for (int c = 0; c < q; ++c) {
      flat.push_back(parse_double(fields[static_cast<std::size_t>(c) + 1], ctx));
    }
    ++rows;
  }
  if (rows == 0) throw DataError("series file has no rows: " + path.string());
  s.values.resize(rows, q);
  for (int t = 0; t < rows; ++t) {
    for (int c = 0; c < q; ++c) {
      s.values(t, c) = flat[static_cast<std::size_t>(t) * q + c];
    }
  }
  return s;
}

}  // namespace

std::vector<RawSeries> load_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.csv";
  std::ifstream manifest(manifest_path, std::ios::binary);
  if (!manifest) {
    throw DataError("no manifest.csv in dataset directory: " + dir.string());
  }
  std::string line;
  if (!std::getline(manifest, line) || line != "file,label,fault_onset") {
    throw DataError("manifest header mismatch in " + manifest_path.string());
  }
  std::vector<RawSeries> out;
  int line_no = 1;
  while (std::getline(manifest, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 3) {
      throw DataError("manifest line " + std::to_string(line_no) +
                      ": expected file,label,fault_onset");
    }
    std::optional<int> onset;
    if (!fields[2].empty()) {
      onset = static_cast<int>(
          parse_double(fields[2], manifest_path.string() + " line " +
                                      std::to_string(line_no)));
    }
    out.push_back(
        load_series_file(dir / fields[0], label_from_name(fields[1]), onset));
  }
  if (out.empty()) {
    throw DataError("dataset manifest lists no series: " + dir.string());
  }
  return out;
}

StandardizationStats fit_standardization(const std::vector<RawSeries>& train) {
  if (train.empty()) {
    throw DataError("fit_standardization: empty training set");
  }
  const int q = train.front().quantities();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(q);
  long count = 0;
  for (const auto& s : train) {
    if (s.quantities() != q) {
      throw DataError("fit_standardization: inconsistent quantity counts");
    }
    if (s.hours() < kRetainedHours[kNumRetainedHours - 1]) {
      throw DataError("fit_standardization: series " + s.id +
                      " shorter than 48 hours");
    }
    for (int h : kRetainedHours) {
      for (int c = 0; c < q; ++c) {
        const double v = s.values(h - 1, c);
        sum(c) += v;
        sum_sq(c) += v * v;
      }
      ++count;
    }
  }
  StandardizationStats stats;
  stats.mean = sum / static_cast<double>(count);
  stats.stddev.resize(q);
  for (int c = 0; c < q; ++c) {
    const double var =
        sum_sq(c) / static_cast<double>(count) - stats.mean(c) * stats.mean(c);
    stats.stddev(c) = std::max(std::sqrt(std::max(var, 0.0)), kStdFloor);
  }
  return stats;
}

ProcessWindow preprocess(const RawSeries& series,
                         const StandardizationStats& stats) {
  if (series.hours() < kRetainedHours[kNumRetainedHours - 1]) {
    throw DataError("preprocess: series " + series.id +
                    " shorter than 48 hours");
  }
  if (series.quantities() != stats.mean.size()) {
    throw DataError("preprocess: stats do not match series quantities");
  }
  if (series.quantities() != kNumQuantities) {
    throw DataError("preprocess: expected " + std::to_string(kNumQuantities) +
                    " quantities, got " + std::to_string(series.quantities()));
  }
  ProcessWindow w;
  w.source_id = series.id;
  w.label = series.label;
  w.features.resize(kWindowDim);
  int k = 0;
  for (int h : kRetainedHours) {
    for (int c = 0; c < kNumQuantities; ++c) {
      w.features(k++) = (series.values(h - 1, c) - stats.mean(c)) / stats.stddev(c);
    }
  }
  return w;
}

void write_windows(const std::filesystem::path& path,
                   const std::vector<ProcessWindow>& windows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write window file: " + path.string());
  out << "id,label";
  for (int i = 0; i < kWindowDim; ++i) out << ",f" << i;
  out << '\n';
  for (const auto& w : windows) {
    if (w.features.size() != kWindowDim) {
      throw DataError("write_windows: window dimension must be " +
                      std::to_string(kWindowDim));
    }
    out << w.source_id << ',' << label_name(w.label);
    for (int i = 0; i < kWindowDim; ++i) {
      out << ',' << format_value(w.features(i));
    }
    out << '\n';
  }
  if (!out) throw DataError("window file write failed: " + path.string());
}

std::vector<ProcessWindow> load_windows(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open window file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError("empty window file: " + path.string());
  }
  auto header = split_csv_line(line);
  if (header.size() != 2 + kWindowDim || header[0] != "id" ||
      header[1] != "label") {
    throw DataError("window file header mismatch: " + path.string());
  }
  std::vector<ProcessWindow> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 2 + kWindowDim) {
      throw DataError("window file " + path.string() + " line " +
                      std::to_string(line_no) + ": wrong field count");
    }
    ProcessWindow w;
    w.source_id = fields[0];
    w.label = label_from_name(fields[1]);
    w.features.resize(kWindowDim);
    for (int i = 0; i < kWindowDim; ++i) {
      w.features(i) = parse_double(
          fields[static_cast<std::size_t>(i) + 2],
          path.string() + " line " + std::to_string(line_no));
    }
    out.push_back(std::move(w));
  }
  return out;
}

Eigen::MatrixXd windows_to_matrix(const std::vector<ProcessWindow>& windows) {
  if (windows.empty()) return Eigen::MatrixXd(kWindowDim, 0);
  Eigen::MatrixXd m(windows.front().features.size(),
                    static_cast<Eigen::Index>(windows.size()));
  for (std::size_t i = 0; i < windows.size(); ++i) {
    m.col(static_cast<Eigen::Index>(i)) = windows[i].features;
  }
  return m;
}

}  // namespace anomdet::data
