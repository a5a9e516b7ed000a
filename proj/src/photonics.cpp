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

#include "anomdet/photonics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace anomdet::photonics {

namespace {

constexpr std::uint64_t kEnumerationGuard = 100000;

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= static_cast<double>(i);
  return f;
}

}  // namespace

FockState FockState::first_modes(int num_modes, int photons) {
  if (photons > num_modes) {
    throw UsageError("first_modes: more photons than modes");
  }
  std::vector<int> occ(static_cast<std::size_t>(num_modes), 0);
  for (int i = 0; i < photons; ++i) occ[static_cast<std::size_t>(i)] = 1;
  return FockState(std::move(occ));
}

int FockState::total_photons() const {
  return std::accumulate(occupations.begin(), occupations.end(), 0);
}

Interferometer build_time_bin_circuit(int num_modes,
                                      const std::vector<int>& loop_delays,
                                      std::uint64_t seed) {
  if (num_modes < 2) {
    throw UsageError("build_time_bin_circuit: num_modes must be >= 2");
  }
  for (int d : loop_delays) {
    if (d < 1 || d >= num_modes) {
      throw UsageError("build_time_bin_circuit: delay out of range [1, num_modes)");
    }
  }
  Interferometer circ;
  circ.num_modes = num_modes;
  circ.seed = seed;
  Rng rng(seed);
  for (int d : loop_delays) {
    for (int i = 0; i + d < num_modes; ++i) {
      BeamSplitterGate g;
      g.mode_a = i;
      g.mode_b = i + d;
      g.theta = rng.uniform(0.0, M_PI / 2.0);
      g.phi = rng.uniform(0.0, 2.0 * M_PI);
      circ.gates.push_back(g);
    }
  }
  return circ;
}

Eigen::MatrixXcd interferometer_to_unitary(const Interferometer& circ) {
  using cd = std::complex<double>;
  const int m = circ.num_modes;
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(m, m);
  for (const auto& g : circ.gates) {
    if (g.mode_a == g.mode_b || g.mode_a < 0 || g.mode_b < 0 ||
        g.mode_a >= m || g.mode_b >= m) {
      throw UsageError("interferometer_to_unitary: invalid gate modes");
    }
    const double c = std::cos(g.theta);
    const double s = std::sin(g.theta);
    const cd eip = std::polar(1.0, g.phi);
    // Left-multiply the 2x2 block: rows mode_a and mode_b of u change.
    Eigen::RowVectorXcd ra = u.row(g.mode_a);
    Eigen::RowVectorXcd rb = u.row(g.mode_b);
    u.row(g.mode_a) = c * ra - std::conj(eip) * s * rb;
    u.row(g.mode_b) = eip * s * ra + c * rb;
  }
  return u;
}

double unitarity_defect(const Eigen::MatrixXcd& u) {
  const Eigen::MatrixXcd d =
      u.adjoint() * u - Eigen::MatrixXcd::Identity(u.rows(), u.cols());
  return d.cwiseAbs().maxCoeff();
}

std::complex<double> permanent(const Eigen::MatrixXcd& m) {
  if (m.rows() != m.cols()) {
    throw UsageError("permanent: matrix must be square");
  }
  const int n = static_cast<int>(m.rows());
  if (n == 0) return {1.0, 0.0};
  if (n > 62) throw CapacityError("permanent: dimension too large");

  // Ryser with Gray-code column subsets: maintain per-row sums over the
  // current subset, flip one column per step.
  std::vector<std::complex<double>> row_sums(static_cast<std::size_t>(n),
                                             {0.0, 0.0});
  std::complex<double> total = 0.0;
  std::uint64_t gray = 0;
  const std::uint64_t count = 1ULL << n;
  for (std::uint64_t k = 1; k < count; ++k) {
    const std::uint64_t next_gray = k ^ (k >> 1);
    const std::uint64_t changed = gray ^ next_gray;
    const int col = std::countr_zero(changed);
    const double sign_col = (next_gray & changed) ? 1.0 : -1.0;
    for (int i = 0; i < n; ++i) {
      row_sums[static_cast<std::size_t>(i)] += sign_col * m(i, col);
    }
    gray = next_gray;
    std::complex<double> prod = 1.0;
    for (int i = 0; i < n; ++i) prod *= row_sums[static_cast<std::size_t>(i)];
    const double subset_sign = (std::popcount(gray) & 1) ? -1.0 : 1.0;
    total += subset_sign * prod;
  }
  const double outer_sign = (n & 1) ? -1.0 : 1.0;
  return outer_sign * total;
}

namespace {

// U_ST: column j of u repeated input_j times, row i repeated output_i times.
Eigen::MatrixXcd submatrix(const Eigen::MatrixXcd& u, const FockState& input,
                           const FockState& output) {
  const int n = input.total_photons();
  Eigen::MatrixXcd cols(u.rows(), n);
  int c = 0;
  for (int j = 0; j < input.num_modes(); ++j) {
    for (int r = 0; r < input.occupations[static_cast<std::size_t>(j)]; ++r) {
      cols.col(c++) = u.col(j);
    }
  }
  Eigen::MatrixXcd st(n, n);
  int rrow = 0;
  for (int i = 0; i < output.num_modes(); ++i) {
    for (int r = 0; r < output.occupations[static_cast<std::size_t>(i)]; ++r) {
      st.row(rrow++) = cols.row(i);
    }
  }
  return st;
}

}  // namespace

double output_probability(const Eigen::MatrixXcd& u, const FockState& input,
                          const FockState& output) {
  if (input.num_modes() != u.cols() || output.num_modes() != u.rows()) {
    throw UsageError("output_probability: state length does not match unitary");
  }
  if (input.total_photons() != output.total_photons()) {
    throw UsageError("output_probability: photon count mismatch");
  }
  for (int v : input.occupations) {
    if (v < 0) throw UsageError("output_probability: negative occupation");
  }
  for (int v : output.occupations) {
    if (v < 0) throw UsageError("output_probability: negative occupation");
  }
  const std::complex<double> per = permanent(submatrix(u, input, output));
  double denom = 1.0;
  for (int v : input.occupations) denom *= factorial(v);
  for (int v : output.occupations) denom *= factorial(v);
  return std::norm(per) / denom;
}

std::uint64_t output_space_size(int num_modes, int photons) {
  // C(n + m - 1, n), capped to avoid overflow.
  std::uint64_t result = 1;
  for (int i = 1; i <= photons; ++i) {
    result = result * static_cast<std::uint64_t>(num_modes - 1 + i) /
             static_cast<std::uint64_t>(i);
    if (result > 100 * kEnumerationGuard) return 100 * kEnumerationGuard;
  }
  return result;
}

std::map<std::vector<int>, double> brute_force_distribution(
    const Eigen::MatrixXcd& u, const FockState& input) {
  const int m = static_cast<int>(u.rows());
  const int n = input.total_photons();
  if (output_space_size(m, n) > kEnumerationGuard) {
    throw CapacityError("brute_force_distribution: output space too large");
  }
  std::map<std::vector<int>, double> dist;
  std::vector<int> occ(static_cast<std::size_t>(m), 0);
  // Enumerate all occupation patterns summing to n, lexicographically.
  auto recurse = [&](auto&& self, int mode, int remaining) -> void {
    if (mode == m - 1) {
      occ[static_cast<std::size_t>(mode)] = remaining;
      dist[occ] = output_probability(u, input, FockState(occ));
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      occ[static_cast<std::size_t>(mode)] = k;
      self(self, mode + 1, remaining - k);
    }
    occ[static_cast<std::size_t>(mode)] = 0;
  };
  if (m == 0) return dist;
  recurse(recurse, 0, n);
  return dist;
}

CliffordSampler::CliffordSampler(const Eigen::MatrixXcd& u,
                                 const FockState& input) {
  if (u.rows() != u.cols()) {
    throw UsageError("CliffordSampler: unitary must be square");
  }
  if (input.num_modes() != u.cols()) {
    throw UsageError("CliffordSampler: input length does not match unitary");
  }
  if (unitarity_defect(u) > 1e-8) {
    throw UsageError("CliffordSampler: matrix is not unitary");
  }
  const int n = input.total_photons();
  if (n > 24) {
    throw CapacityError("CliffordSampler: photon number too large for exact sampling");
  }
  columns_.resize(u.rows(), n);
  int c = 0;
  for (int j = 0; j < input.num_modes(); ++j) {
    const int occ = input.occupations[static_cast<std::size_t>(j)];
    if (occ < 0) throw UsageError("CliffordSampler: negative occupation");
    for (int r = 0; r < occ; ++r) columns_.col(c++) = u.col(j);
  }
}

FockState CliffordSampler::sample(Rng& rng) const {
  using cd = std::complex<double>;
  const int m = num_modes();
  const int n = photons();
  std::vector<int> occ(static_cast<std::size_t>(m), 0);
  if (n == 0) return FockState(std::move(occ));

  // Uniformly permuting the photon columns is what makes the sequential
  // single-photon marginals below exact (Clifford & Clifford 2018, Alg. B).
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  Eigen::MatrixXcd a(m, n);
  for (int j = 0; j < n; ++j) {
    a.col(j) = columns_.col(order[static_cast<std::size_t>(j)]);
  }

  std::vector<int> rows;  // modes of the photons placed so far
  rows.reserve(static_cast<std::size_t>(n));
  std::vector<double> weights(static_cast<std::size_t>(m), 0.0);
  std::vector<cd> col_sums;   // per-column sums over the current row subset
  std::vector<cd> sub_perms;  // permanents with one column removed
  std::vector<cd> prefix, suffix;

  for (int k = 1; k <= n; ++k) {
    if (k == 1) {
      for (int r = 0; r < m; ++r) weights[static_cast<std::size_t>(r)] = std::norm(a(r, 0));
    } else {
      // Laplace expansion along the candidate row:
      //   Per(B + row r) = sum_j a(r, j) * Per(B minus column j)
      // where B is the (k-1) x k matrix of placed rows. All k "minus one
      // column" permanents come from one Ryser pass over row subsets,
      // with prefix/suffix products skipping column j.
      const int kr = k - 1;  // rows in B
      col_sums.assign(static_cast<std::size_t>(k), cd(0.0, 0.0));
      sub_perms.assign(static_cast<std::size_t>(k), cd(0.0, 0.0));
      prefix.assign(static_cast<std::size_t>(k) + 1, cd(1.0, 0.0));
      suffix.assign(static_cast<std::size_t>(k) + 1, cd(1.0, 0.0));
      std::uint64_t gray = 0;
      const std::uint64_t count = 1ULL << kr;
      for (std::uint64_t s = 1; s < count; ++s) {
        const std::uint64_t next_gray = s ^ (s >> 1);
        const std::uint64_t changed = gray ^ next_gray;
        const int row_bit = std::countr_zero(changed);
        const double sgn = (next_gray & changed) ? 1.0 : -1.0;
        const int row = rows[static_cast<std::size_t>(row_bit)];
        for (int j = 0; j < k; ++j) {
          col_sums[static_cast<std::size_t>(j)] += sgn * a(row, j);
        }
        gray = next_gray;
        const double subset_sign = (std::popcount(gray) & 1) ? -1.0 : 1.0;
        prefix[0] = cd(1.0, 0.0);
        for (int j = 0; j < k; ++j) {
          prefix[static_cast<std::size_t>(j) + 1] =
              prefix[static_cast<std::size_t>(j)] * col_sums[static_cast<std::size_t>(j)];
        }
        suffix[static_cast<std::size_t>(k)] = cd(1.0, 0.0);
        for (int j = k - 1; j >= 0; --j) {
          suffix[static_cast<std::size_t>(j)] =
              suffix[static_cast<std::size_t>(j) + 1] * col_sums[static_cast<std::size_t>(j)];
        }
        for (int j = 0; j < k; ++j) {
          sub_perms[static_cast<std::size_t>(j)] +=
              subset_sign * prefix[static_cast<std::size_t>(j)] *
              suffix[static_cast<std::size_t>(j) + 1];
        }
      }
      const double outer_sign = (kr & 1) ? -1.0 : 1.0;
      for (auto& p : sub_perms) p *= outer_sign;

      for (int r = 0; r < m; ++r) {
        cd amp(0.0, 0.0);
        for (int j = 0; j < k; ++j) {
          amp += a(r, j) * sub_perms[static_cast<std::size_t>(j)];
        }
        weights[static_cast<std::size_t>(r)] = std::norm(amp);
      }
    }

    double total = 0.0;
    for (double w : weights) total += w;
    const double target = rng.uniform() * total;
    double acc = 0.0;
    int chosen = m - 1;
    for (int r = 0; r < m; ++r) {
      acc += weights[static_cast<std::size_t>(r)];
      if (target < acc) {
        chosen = r;
        break;
      }
    }
    rows.push_back(chosen);
    occ[static_cast<std::size_t>(chosen)] += 1;
  }
  return FockState(std::move(occ));
}

std::vector<FockState> sample_exact(const Eigen::MatrixXcd& u,
                                    const FockState& input, int count,
                                    std::uint64_t seed) {
  CliffordSampler sampler(u, input);
  Rng rng(seed);
  std::vector<FockState> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(sampler.sample(rng));
  return out;
}

FockState apply_loss(const FockState& input, const LossModel& loss, Rng& rng) {
  if (loss.transmission < 0.0 || loss.transmission > 1.0) {
    throw UsageError("apply_loss: transmission must be in [0, 1]");
  }
  std::vector<int> occ(input.occupations.size(), 0);
  for (std::size_t i = 0; i < input.occupations.size(); ++i) {
    for (int p = 0; p < input.occupations[i]; ++p) {
      if (rng.uniform() < loss.transmission) occ[i] += 1;
    }
  }
  return FockState(std::move(occ));
}

FockState apply_loss(const FockState& input, const LossModel& loss,
                     std::uint64_t seed) {
  Rng rng(seed);
  return apply_loss(input, loss, rng);
}

Eigen::VectorXd fock_to_latent(const FockState& state, int latent_dim) {
  if (state.num_modes() != latent_dim) {
    throw UsageError("fock_to_latent: state length does not match latent dimension");
  }
  Eigen::VectorXd v(latent_dim);
  for (int i = 0; i < latent_dim; ++i) {
    v(i) = static_cast<double>(state.occupations[static_cast<std::size_t>(i)]);
  }
  return v;
}

}  // namespace anomdet::photonics
