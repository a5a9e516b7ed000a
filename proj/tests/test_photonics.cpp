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
#include <cmath>
#include <numeric>

#include "doctest.h"

using namespace anomdet;
using namespace anomdet::photonics;

namespace {

// Independent oracle: permanent by direct permutation sum, O(n!).
std::complex<double> permanent_naive(const Eigen::MatrixXcd& m) {
  const int n = static_cast<int>(m.rows());
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::complex<double> total = 0.0;
  do {
    std::complex<double> prod = 1.0;
    for (int i = 0; i < n; ++i) prod *= m(i, perm[static_cast<std::size_t>(i)]);
    total += prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

Eigen::MatrixXcd balanced_beam_splitter() {
  Eigen::MatrixXcd u(2, 2);
  const double r = 1.0 / std::sqrt(2.0);
  u << r, r, r, -r;
  return u;
}

double total_variation(const std::map<std::vector<int>, double>& exact,
                       const std::vector<FockState>& samples) {
  std::map<std::vector<int>, double> empirical;
  const double w = 1.0 / static_cast<double>(samples.size());
  for (const auto& s : samples) empirical[s.occupations] += w;
  double tv = 0.0;
  for (const auto& [occ, p] : exact) {
    const auto it = empirical.find(occ);
    tv += std::abs(p - (it == empirical.end() ? 0.0 : it->second));
  }
  for (const auto& [occ, p] : empirical) {
    if (!exact.count(occ)) tv += p;
  }
  return 0.5 * tv;
}

}  // namespace

TEST_CASE("time-bin circuit construction follows the ladder rule") {
  const auto circ = build_time_bin_circuit(16, {1, 2}, 11);
  CHECK(circ.gates.size() == 29);  // 15 + 14
  for (std::size_t i = 0; i < 15; ++i) {
    CHECK(circ.gates[i].mode_a == static_cast<int>(i));
    CHECK(circ.gates[i].mode_b == static_cast<int>(i) + 1);
  }
  for (std::size_t i = 0; i < 14; ++i) {
    CHECK(circ.gates[15 + i].mode_a == static_cast<int>(i));
    CHECK(circ.gates[15 + i].mode_b == static_cast<int>(i) + 2);
  }
  for (const auto& g : circ.gates) {
    CHECK(g.theta >= 0.0);
    CHECK(g.theta <= M_PI / 2.0);
    CHECK(g.phi >= 0.0);
    CHECK(g.phi < 2.0 * M_PI);
  }

  const auto two_mode = build_time_bin_circuit(2, {1}, 5);
  CHECK(two_mode.gates.size() == 1);
  CHECK(two_mode.gates[0].mode_a == 0);
  CHECK(two_mode.gates[0].mode_b == 1);

  const auto again = build_time_bin_circuit(16, {1, 2}, 11);
  for (std::size_t i = 0; i < circ.gates.size(); ++i) {
    CHECK(circ.gates[i].theta == again.gates[i].theta);
    CHECK(circ.gates[i].phi == again.gates[i].phi);
  }

  CHECK_THROWS_AS(build_time_bin_circuit(1, {1}, 0), UsageError);
  CHECK_THROWS_AS(build_time_bin_circuit(4, {0}, 0), UsageError);
  CHECK_THROWS_AS(build_time_bin_circuit(4, {4}, 0), UsageError);
}

TEST_CASE("interferometer unitaries") {
  Interferometer empty;
  empty.num_modes = 3;
  CHECK(interferometer_to_unitary(empty).isApprox(
      Eigen::MatrixXcd::Identity(3, 3)));

  Interferometer zero_angle;
  zero_angle.num_modes = 2;
  zero_angle.gates.push_back({0, 1, 0.0, 1.3});
  CHECK(interferometer_to_unitary(zero_angle)
            .isApprox(Eigen::MatrixXcd::Identity(2, 2), 1e-15));

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto circ = build_time_bin_circuit(16, {1, 2}, seed);
    CHECK(unitarity_defect(interferometer_to_unitary(circ)) < 1e-10);
  }
}

TEST_CASE("permanent matches hand values and the naive oracle") {
  CHECK(permanent(Eigen::MatrixXcd::Identity(2, 2)).real() == doctest::Approx(1.0));
  CHECK(permanent(Eigen::MatrixXcd::Ones(2, 2)).real() == doctest::Approx(2.0));
  CHECK(permanent(Eigen::MatrixXcd::Ones(3, 3)).real() == doctest::Approx(6.0));
  CHECK(permanent(Eigen::MatrixXcd(0, 0)).real() == doctest::Approx(1.0));

  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_index(5));
    Eigen::MatrixXcd m(n, n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        m(r, c) = std::complex<double>(rng.uniform(-1, 1), rng.uniform(-1, 1));
      }
    }
    const auto expected = permanent_naive(m);
    const auto got = permanent(m);
    CHECK(std::abs(got - expected) < 1e-10 * std::max(1.0, std::abs(expected)));
  }

  CHECK_THROWS_AS(permanent(Eigen::MatrixXcd::Ones(2, 3)), UsageError);
}

TEST_CASE("output probabilities: identity, Hong-Ou-Mandel, bunching") {
  const Eigen::MatrixXcd id4 = Eigen::MatrixXcd::Identity(4, 4);
  const FockState in4({1, 0, 1, 0});
  CHECK(output_probability(id4, in4, in4) == doctest::Approx(1.0));

  const Eigen::MatrixXcd bs = balanced_beam_splitter();
  const FockState in11({1, 1});
  CHECK(output_probability(bs, in11, in11) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(output_probability(bs, in11, FockState({2, 0})) == doctest::Approx(0.5));
  CHECK(output_probability(bs, in11, FockState({0, 2})) == doctest::Approx(0.5));

  // The gate convention reproduces the suppression at theta = pi/4, phi = 0.
  Interferometer hom;
  hom.num_modes = 2;
  hom.gates.push_back({0, 1, M_PI / 4.0, 0.0});
  const auto hom_u = interferometer_to_unitary(hom);
  CHECK(std::abs(output_probability(hom_u, in11, in11)) < 1e-12);

  CHECK_THROWS_AS(output_probability(bs, in11, FockState({1, 0})), UsageError);
}

TEST_CASE("brute-force distribution: hand values and completeness") {
  const Eigen::MatrixXcd bs = balanced_beam_splitter();
  const auto dist = brute_force_distribution(bs, FockState({1, 1}));
  CHECK(dist.size() == 3);
  CHECK(dist.at({2, 0}) == doctest::Approx(0.5));
  CHECK(dist.at({0, 2}) == doctest::Approx(0.5));
  CHECK(dist.at({1, 1}) == doctest::Approx(0.0).epsilon(1e-12));

  const auto ident = brute_force_distribution(
      Eigen::MatrixXcd::Identity(3, 3), FockState({2, 1, 0}));
  CHECK(ident.at({2, 1, 0}) == doctest::Approx(1.0));

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto circ = build_time_bin_circuit(6, {1, 2}, seed);
    const auto u = interferometer_to_unitary(circ);
    const auto d = brute_force_distribution(u, FockState::first_modes(6, 3));
    double total = 0.0;
    for (const auto& [occ, p] : d) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0 + 1e-12);
      total += p;
    }
    CHECK(std::abs(total - 1.0) < 1e-9);
  }

  CHECK_THROWS_AS(
      brute_force_distribution(Eigen::MatrixXcd::Identity(16, 16),
                               FockState::first_modes(16, 8)),
      CapacityError);
}

TEST_CASE("exact sampler: fixed points, determinism, oracle agreement") {
  const Eigen::MatrixXcd id3 = Eigen::MatrixXcd::Identity(3, 3);
  const FockState in({1, 1, 0});
  for (const auto& s : sample_exact(id3, in, 50, 99)) {
    CHECK(s == in);
  }

  const auto a = sample_exact(id3, in, 20, 123);
  const auto b = sample_exact(id3, in, 20, 123);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

  // Zero photons: all-zero outputs.
  for (const auto& s : sample_exact(id3, FockState({0, 0, 0}), 3, 1)) {
    CHECK(s.total_photons() == 0);
  }

  CHECK_THROWS_AS(sample_exact(Eigen::MatrixXcd::Ones(3, 3), in, 1, 1),
                  UsageError);

  // Photon-number conservation on a lossless circuit.
  const auto circ = build_time_bin_circuit(6, {1, 2}, 21);
  const auto u = interferometer_to_unitary(circ);
  const auto samples = sample_exact(u, FockState::first_modes(6, 3), 200, 5);
  for (const auto& s : samples) CHECK(s.total_photons() == 3);

  // Empirical distribution against the brute-force oracle.
  const auto circ4 = build_time_bin_circuit(4, {1, 2}, 31);
  const auto u4 = interferometer_to_unitary(circ4);
  const FockState in4 = FockState::first_modes(4, 2);
  const auto exact = brute_force_distribution(u4, in4);
  const auto draws = sample_exact(u4, in4, 100000, 77);
  CHECK(total_variation(exact, draws) < 0.02);
}

TEST_CASE("loss channel") {
  const FockState in = FockState::first_modes(16, 8);
  CHECK(apply_loss(in, LossModel{1.0}, 4) == in);
  CHECK(apply_loss(in, LossModel{0.0}, 4).total_photons() == 0);

  double total = 0.0;
  const int trials = 4000;
  for (int t = 0; t < trials; ++t) {
    total += apply_loss(in, LossModel{0.5}, static_cast<std::uint64_t>(t))
                 .total_photons();
  }
  const double mean = total / trials;
  // Binomial(8, 0.5): mean 4, sd of the sample mean ~ sqrt(2/4000).
  CHECK(std::abs(mean - 4.0) < 0.1);
}

TEST_CASE("fock_to_latent") {
  FockState s({8, 0, 0, 0});
  const auto v = fock_to_latent(s, 4);
  CHECK(v(0) == 8.0);
  CHECK(v(1) == 0.0);
  CHECK(v.sum() == doctest::Approx(8.0));

  const auto zeros = fock_to_latent(FockState({0, 0, 0, 0}), 4);
  CHECK(zeros.cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(fock_to_latent(s, 16), UsageError);
}
