#include "dpvi/privacy.hpp"

#include <cmath>
#include <sstream>

#include "dpvi/rng.hpp"

namespace dpvi {

void PrivacyPolicy::validate() const {
  if (!(B > 0.0)) throw ValidationError("privacy: adjacency bound B must be positive");
  switch (mechanism) {
    case Mechanism::None:
      return;
    case Mechanism::Laplace:
      if (!(epsilon > 0.0)) throw ValidationError("privacy: laplace needs epsilon > 0");
      if (delta != 0.0) throw ValidationError("privacy: laplace is a pure eps guarantee, delta must be 0");
      if (p != 1) throw ValidationError("privacy: laplace calibrates against l1 sensitivity (p = 1)");
      return;
    case Mechanism::Gaussian:
      if (!(epsilon > 0.0)) throw ValidationError("privacy: gaussian needs epsilon > 0");
      if (!(delta > 0.0 && delta < 0.5))
        throw ValidationError("privacy: gaussian needs delta in (0, 1/2)");
      if (p != 2) throw ValidationError("privacy: gaussian calibrates against l2 sensitivity (p = 2)");
      return;
  }
  throw ValidationError("privacy: unknown mechanism");
}

SensitivityBundle compute_sensitivities(const ConstraintFunction& constraint,
                                        const PrivacyPolicy& policy) {
  SensitivityBundle out;
  if (policy.mechanism == Mechanism::None) {
    for (std::size_t i = 0; i < constraint.agent_blocks.size(); ++i)
      out.delta_blocks[static_cast<int>(i) + 1] = 0.0;
    return out;
  }
  policy.validate();

  const auto git = constraint.lipschitz_g.find(policy.p);
  if (git == constraint.lipschitz_g.end())
    throw ValidationError("sensitivity: constraint has no Lipschitz constant for this norm");
  out.delta_g = git->second * policy.B;

  for (std::size_t i = 0; i < constraint.agent_blocks.size(); ++i) {
    const int agent_id = static_cast<int>(i) + 1;
    const auto bit = constraint.lipschitz_blocks.find({agent_id, policy.p});
    if (bit == constraint.lipschitz_blocks.end()) {
      std::ostringstream os;
      os << "sensitivity: no block Lipschitz constant for agent " << agent_id;
      throw ValidationError(os.str());
    }
    out.delta_blocks[agent_id] = bit->second * policy.B;
  }
  return out;
}

double q_function(double y) { return 0.5 * std::erfc(y / std::sqrt(2.0)); }

double q_inverse(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("q_inverse: delta must be in (0, 1)");
  // Q is strictly decreasing; bisect until the bracket collapses.
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (q_function(mid) > delta)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double kappa(double delta, double epsilon) {
  if (!(epsilon > 0.0)) throw ValidationError("kappa: epsilon must be positive");
  const double kd = q_inverse(delta);
  return (kd + std::sqrt(kd * kd + 2.0 * epsilon)) / (2.0 * epsilon);
}

double NoiseChannel::entry_variance() const {
  switch (kind) {
    case Mechanism::None:
      return 0.0;
    case Mechanism::Laplace:
      return 2.0 * scale * scale;
    case Mechanism::Gaussian:
      return scale * scale;
  }
  return 0.0;
}

NoiseChannelSet calibrate(const PrivacyPolicy& policy, const SensitivityBundle& sens,
                          const ProblemSpec& spec) {
  policy.validate();
  NoiseChannelSet set;
  set.active = policy.mechanism != Mechanism::None;

  auto scale_for = [&](double delta_p) {
    switch (policy.mechanism) {
      case Mechanism::Laplace:
        return delta_p / policy.epsilon;
      case Mechanism::Gaussian:
        return kappa(policy.delta, policy.epsilon) * delta_p;
      case Mechanism::None:
        return 0.0;
    }
    return 0.0;
  };

  const int m = spec.constraint.m;
  for (int i = 0; i < spec.num_agents(); ++i) {
    const int agent_id = i + 1;
    NoiseChannel ch;
    ch.kind = policy.mechanism;
    ch.rows = m;
    ch.cols = spec.boxes[i].dim();
    ch.stream = static_cast<std::uint64_t>(agent_id);
    ch.scale = set.active ? scale_for(sens.delta_blocks.at(agent_id)) : 0.0;
    set.blocks.push_back(ch);
  }

  set.g_channel.kind = policy.mechanism;
  set.g_channel.rows = m;
  set.g_channel.cols = 1;
  set.g_channel.stream = 0;
  set.g_channel.scale = set.active ? scale_for(sens.delta_g) : 0.0;
  return set;
}

double channel_entry(const NoiseChannel& ch, std::uint64_t master_seed, std::int64_t k,
                     std::uint64_t idx) {
  if (ch.kind == Mechanism::None || ch.scale == 0.0) return 0.0;
  const auto ku = static_cast<std::uint64_t>(k);
  if (ch.kind == Mechanism::Laplace)
    return laplace_sample(master_seed, ch.stream, ku, idx, ch.scale);
  return ch.scale * normal_sample(master_seed, ch.stream, ku, idx);
}

Matrix draw(const NoiseChannel& ch, std::uint64_t master_seed, std::int64_t k) {
  Matrix w(ch.rows, ch.cols);
  for (int r = 0; r < ch.rows; ++r)
    for (int c = 0; c < ch.cols; ++c)
      w(r, c) = channel_entry(ch, master_seed, k,
                              static_cast<std::uint64_t>(r) * ch.cols + c);
  return w;
}

bool adjacency(const std::vector<Vec>& s1, const std::vector<Vec>& s2, double B, int p) {
  if (!(B > 0.0)) throw ValidationError("adjacency: B must be positive");
  if (p != 1 && p != 2) throw ValidationError("adjacency: p must be 1 or 2");
  if (s1.size() != s2.size()) throw ValidationError("adjacency: signal count mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < s1.size(); ++i) {
    if (s1[i].size() != s2[i].size()) throw ValidationError("adjacency: signal size mismatch");
    for (std::size_t d = 0; d < s1[i].size(); ++d) {
      const double diff = std::fabs(s1[i][d] - s2[i][d]);
      acc += (p == 1) ? diff : diff * diff;
    }
  }
  const double dist = (p == 1) ? acc : std::sqrt(acc);
  return dist <= B;
}

}  // namespace dpvi
