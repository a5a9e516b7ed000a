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

#ifndef ANOMDET_PHOTONICS_HPP
#define ANOMDET_PHOTONICS_HPP

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <map>
#include <vector>

#include "anomdet/common.hpp"

namespace anomdet::photonics {

// One programmable beam splitter acting on a pair of optical modes.
struct BeamSplitterGate {
  int mode_a = 0;
  int mode_b = 0;
  double theta = 0.0;  // mixing angle, radians
  double phi = 0.0;    // relative phase, radians
};

// A beam-splitter network; gates apply in list order.
struct Interferometer {
  int num_modes = 0;
  std::vector<BeamSplitterGate> gates;
  std::uint64_t seed = 0;  // seed the angles were drawn from
};

// Photon occupation numbers, one entry per mode.
struct FockState {
  std::vector<int> occupations;

  FockState() = default;
  explicit FockState(std::vector<int> occ) : occupations(std::move(occ)) {}
  static FockState first_modes(int num_modes, int photons);

  int num_modes() const { return static_cast<int>(occupations.size()); }
  int total_photons() const;
  bool operator==(const FockState& o) const {
    return occupations == o.occupations;
  }
};

// Uniform per-photon survival probability.
struct LossModel {
  double transmission = 1.0;
};

// Time-bin loop circuit: one ladder of gates per delay, coupling modes
// (i, i+d) for ascending i. Angles are theta ~ U[0, pi/2], phi ~ U[0, 2*pi)
// drawn from `seed` in construction order.
Interferometer build_time_bin_circuit(int num_modes,
                                      const std::vector<int>& loop_delays,
                                      std::uint64_t seed);

// Mode-basis unitary of the circuit. Each gate applies
//   [[cos(t), -e^{-i p} sin(t)], [e^{i p} sin(t), cos(t)]]
// on (mode_a, mode_b), identity elsewhere, composed in gate order.
Eigen::MatrixXcd interferometer_to_unitary(const Interferometer& circ);

// Max-norm of U^dagger U - I; unitarity check helper.
double unitarity_defect(const Eigen::MatrixXcd& u);

// Matrix permanent by Ryser's formula with Gray-code subset updates,
// O(n 2^n). Per(empty) = 1.
std::complex<double> permanent(const Eigen::MatrixXcd& m);

// Probability of measuring `output` given `input` photons through `u`:
// |Per(U_ST)|^2 / (prod_i input_i! * prod_j output_j!), where U_ST repeats
// column j input_j times and row i output_i times.
double output_probability(const Eigen::MatrixXcd& u, const FockState& input,
                          const FockState& output);

// Exhaustive output distribution; keys are occupation vectors. Guarded by
// C(n+m-1, n) <= 10^5. Probabilities sum to 1 within 1e-9.
std::map<std::vector<int>, double> brute_force_distribution(
    const Eigen::MatrixXcd& u, const FockState& input);

// Number of Fock outputs for n photons in m modes, i.e. C(n+m-1, n).
// Saturates at the capacity guard rather than overflowing.
std::uint64_t output_space_size(int num_modes, int photons);

// Exact boson sampling via the Clifford & Clifford (2018) chain rule,
// O(n 2^n + m n^2) per sample. Prepared once per (unitary, input) pair.
class CliffordSampler {
 public:
  CliffordSampler(const Eigen::MatrixXcd& u, const FockState& input);

  FockState sample(Rng& rng) const;
  int num_modes() const { return static_cast<int>(columns_.rows()); }
  int photons() const { return static_cast<int>(columns_.cols()); }

 private:
  // Input columns of the unitary, one per photon.
  Eigen::MatrixXcd columns_;
};

std::vector<FockState> sample_exact(const Eigen::MatrixXcd& u,
                                    const FockState& input, int count,
                                    std::uint64_t seed);

// Binomial thinning: each photon survives with probability
// loss.transmission. Consumes one uniform draw per input photon.
FockState apply_loss(const FockState& input, const LossModel& loss, Rng& rng);
FockState apply_loss(const FockState& input, const LossModel& loss,
                     std::uint64_t seed);

// Occupation counts as a real vector; length must equal latent_dim.
Eigen::VectorXd fock_to_latent(const FockState& state, int latent_dim);

}  // namespace anomdet::photonics

#endif  // ANOMDET_PHOTONICS_HPP
