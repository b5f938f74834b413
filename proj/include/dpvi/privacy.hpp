#pragma once
// Differential privacy plumbing: adjacency, sensitivity bounds derived from
// the constraint's Lipschitz constants, Laplace/Gaussian calibration with the
// Gaussian tail function and its inverse, and seeded reproducible noise.

#include <cstdint>
#include <map>
#include <vector>

#include "dpvi/problem.hpp"
#include "dpvi/types.hpp"

namespace dpvi {

enum class Mechanism { None, Laplace, Gaussian };

struct PrivacyPolicy {
  Mechanism mechanism = Mechanism::None;
  double epsilon = 0.0;
  double delta = 0.0;  // 0 for Laplace; in (0, 1/2) for Gaussian
  double B = 1.0;      // adjacency bound
  int p = 1;           // norm index: 1 for Laplace, 2 for Gaussian

  void validate() const;  // throws ValidationError on inconsistent combos
};

// Worst-case output changes over B-adjacent inputs: Delta_p g = K^g_p * B and
// Delta_p g_{x_i} = K^i_p * B.
struct SensitivityBundle {
  double delta_g = 0.0;
  std::map<int, double> delta_blocks;  // agent_id -> Delta_p g_{x_i}
};
SensitivityBundle compute_sensitivities(const ConstraintFunction& constraint,
                                        const PrivacyPolicy& policy);

// Gaussian tail Q(y) = P[N(0,1) > y], its inverse, and the (eps, delta)
// calibration factor kappa = (K_delta + sqrt(K_delta^2 + 2 eps)) / (2 eps).
double q_function(double y);
double q_inverse(double delta);  // |Q(q_inverse(d)) - d| <= 1e-12, d in (0,1)
double kappa(double delta, double epsilon);

// One additive noise source: Laplace(0, scale) or N(0, scale^2) per entry,
// shaped rows x cols, addressed by a dedicated stream id.
struct NoiseChannel {
  Mechanism kind = Mechanism::None;
  double scale = 0.0;
  int rows = 0;
  int cols = 0;
  std::uint64_t stream = 0;

  double entry_variance() const;
};

// Calibrated channels for one run: blocks[i] perturbs g_{x_i} (shape m x n_i,
// stream i+1) and g_channel perturbs g (shape m x 1, stream 0).
struct NoiseChannelSet {
  bool active = false;
  std::vector<NoiseChannel> blocks;
  NoiseChannel g_channel;
};

// Least noise meeting the stated guarantee: Laplace scale Delta_1/eps,
// Gaussian sigma = kappa(delta, eps) * Delta_2. Mechanism::None gives an
// inactive (noise-free) set.
NoiseChannelSet calibrate(const PrivacyPolicy& policy, const SensitivityBundle& sens,
                          const ProblemSpec& spec);

// One entry of channel noise at (master seed, channel stream, timestep k,
// flat index). Zero-scale channels yield exactly +0.0.
double channel_entry(const NoiseChannel& ch, std::uint64_t master_seed, std::int64_t k,
                     std::uint64_t idx);

// Full sample of the channel at timestep k.
Matrix draw(const NoiseChannel& ch, std::uint64_t master_seed, std::int64_t k);

// True iff the stacked signals are within B in the p-norm.
bool adjacency(const std::vector<Vec>& s1, const std::vector<Vec>& s2, double B, int p);

}  // namespace dpvi
