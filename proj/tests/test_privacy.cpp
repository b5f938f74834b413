#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"

#include "dpvi/privacy.hpp"
#include "dpvi/rng.hpp"
#include "helpers.hpp"

using namespace dpvi;
using testutil::ref10;

namespace {

PrivacyPolicy laplace_ln2() {
  PrivacyPolicy p;
  p.mechanism = Mechanism::Laplace;
  p.epsilon = std::log(2.0);
  p.delta = 0.0;
  p.B = 1.0;
  p.p = 1;
  return p;
}

PrivacyPolicy gaussian_ln2() {
  PrivacyPolicy p;
  p.mechanism = Mechanism::Gaussian;
  p.epsilon = std::log(2.0);
  p.delta = 0.01;
  p.B = 1.0;
  p.p = 2;
  return p;
}

}  // namespace

TEST_CASE("policy validation enforces mechanism-specific domains") {
  CHECK_NOTHROW(laplace_ln2().validate());
  CHECK_NOTHROW(gaussian_ln2().validate());

  PrivacyPolicy p = laplace_ln2();
  p.delta = 0.01;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = laplace_ln2();
  p.p = 2;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = laplace_ln2();
  p.epsilon = 0.0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = laplace_ln2();
  p.B = 0.0;
  CHECK_THROWS_AS(p.validate(), ValidationError);

  p = gaussian_ln2();
  p.delta = 0.0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = gaussian_ln2();
  p.delta = 0.5;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = gaussian_ln2();
  p.p = 1;
  CHECK_THROWS_AS(p.validate(), ValidationError);

  PrivacyPolicy none;
  CHECK_NOTHROW(none.validate());
}

TEST_CASE("gaussian tail function hits the table values") {
  CHECK(q_function(0.0) == 0.5);
  CHECK(q_function(2.3263) == doctest::Approx(0.01).epsilon(2e-3));
  CHECK(q_function(2.3263) == doctest::Approx(0.0100012760167986077).epsilon(1e-12));
  for (double y : {0.1, 0.7, 1.5, 3.0, 6.0}) {
    CHECK(q_function(-y) + q_function(y) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(q_function(y) < q_function(y - 0.05));
  }
}

TEST_CASE("tail inverse matches the frozen quantiles and round-trips") {
  CHECK(std::fabs(q_inverse(0.5)) <= 1e-13);
  CHECK(q_inverse(0.01) == doctest::Approx(2.32634787404084110).epsilon(1e-9));
  CHECK(std::fabs(q_inverse(0.01) - 2.3263) <= 1e-4);
  CHECK(q_inverse(0.25) == doctest::Approx(0.674489750196081743).epsilon(1e-9));
  CHECK(q_inverse(0.001) == doctest::Approx(3.09023230616781354).epsilon(1e-9));
  for (double d : {1e-8, 1e-6, 1e-4, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99,
                   0.9999, 1.0 - 1e-6, 1.0 - 1e-8}) {
    CHECK(std::fabs(q_function(q_inverse(d)) - d) <= 1e-12);
  }
  CHECK_THROWS_AS((void)q_inverse(0.0), ValidationError);
  CHECK_THROWS_AS((void)q_inverse(1.0), ValidationError);
  CHECK_THROWS_AS((void)q_inverse(-0.1), ValidationError);
}

TEST_CASE("kappa matches the frozen values and decreases in epsilon") {
  CHECK(kappa(0.01, std::log(2.0)) == doctest::Approx(3.559).epsilon(1e-3));
  CHECK(kappa(0.01, std::log(2.0)) == doctest::Approx(3.55889893814520867).epsilon(1e-12));
  CHECK(kappa(0.25, 1.0) == doctest::Approx(1.12065671173308508).epsilon(1e-12));
  double prev = kappa(0.01, 0.1);
  for (double eps : {0.2, 0.5, 1.0, 2.0, 5.0}) {
    const double k = kappa(0.01, eps);
    CHECK(k < prev);
    prev = k;
  }
  CHECK_THROWS_AS((void)kappa(0.01, 0.0), ValidationError);
  CHECK_THROWS_AS((void)kappa(0.0, 1.0), ValidationError);

  // delta = 0.5 zeroes the tail quantile, leaving kappa = sqrt(2 eps) / (2 eps).
  CHECK(kappa(0.5, 1.0) == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-9));
}

TEST_CASE("sensitivities follow the Lipschitz constants and scale with B") {
  const ProblemSpec& spec = ref10();
  SensitivityBundle s1 = compute_sensitivities(spec.constraint, laplace_ln2());
  CHECK(s1.delta_g == 39.82);
  CHECK(s1.delta_blocks.at(1) == 4.0);
  CHECK(s1.delta_blocks.at(2) == 2.0);
  CHECK(s1.delta_blocks.at(4) == 4.0);
  CHECK(s1.delta_blocks.at(10) == 2.0);

  PrivacyPolicy doubled = laplace_ln2();
  doubled.B = 2.0;
  SensitivityBundle s2 = compute_sensitivities(spec.constraint, doubled);
  CHECK(s2.delta_g == 2.0 * s1.delta_g);
  for (int i = 1; i <= 10; ++i)
    CHECK(s2.delta_blocks.at(i) == 2.0 * s1.delta_blocks.at(i));

  SensitivityBundle sg = compute_sensitivities(spec.constraint, gaussian_ln2());
  CHECK(sg.delta_g == 56.71);
  CHECK(sg.delta_blocks.at(1) == std::sqrt(8.0));
  CHECK(sg.delta_blocks.at(2) == 2.0);

  ConstraintFunction no_l2 = spec.constraint;
  no_l2.lipschitz_g.erase(2);
  CHECK_THROWS_AS((void)compute_sensitivities(no_l2, gaussian_ln2()), ValidationError);
}

TEST_CASE("laplace calibration reproduces the published noise table") {
  const ProblemSpec& spec = ref10();
  const PrivacyPolicy pol = laplace_ln2();
  const NoiseChannelSet ch = calibrate(pol, compute_sensitivities(spec.constraint, pol), spec);
  CHECK(ch.active);
  REQUIRE(ch.blocks.size() == 10);
  for (int i = 0; i < 10; ++i) {
    CHECK(ch.blocks[i].kind == Mechanism::Laplace);
    CHECK(ch.blocks[i].rows == 6);
    CHECK(ch.blocks[i].cols == 2);
    CHECK(ch.blocks[i].stream == static_cast<std::uint64_t>(i + 1));
  }
  CHECK(ch.g_channel.stream == 0);
  CHECK(ch.g_channel.rows == 6);
  CHECK(ch.g_channel.cols == 1);

  CHECK(ch.blocks[0].scale == doctest::Approx(5.77078016355585363).epsilon(1e-12));
  CHECK(ch.blocks[0].entry_variance() == doctest::Approx(66.6038073921794495).epsilon(1e-12));
  CHECK(ch.blocks[1].scale == doctest::Approx(2.88539008177792681).epsilon(1e-12));
  CHECK(ch.blocks[1].entry_variance() == doctest::Approx(16.6509518480448624).epsilon(1e-12));
  CHECK(ch.g_channel.scale == doctest::Approx(57.4481165281985229).epsilon(1e-12));
  CHECK(ch.g_channel.entry_variance() == doctest::Approx(6600.57218527495261).epsilon(1e-12));

  // Exactly the stated formula, not merely close to it.
  CHECK(ch.blocks[0].scale == doctest::Approx(4.0 / pol.epsilon).epsilon(1e-15));
  CHECK(ch.g_channel.scale == doctest::Approx(39.82 / pol.epsilon).epsilon(1e-15));
}

TEST_CASE("gaussian calibration reproduces the published noise table") {
  const ProblemSpec& spec = ref10();
  const PrivacyPolicy pol = gaussian_ln2();
  const NoiseChannelSet ch = calibrate(pol, compute_sensitivities(spec.constraint, pol), spec);
  CHECK(ch.blocks[0].scale == doctest::Approx(10.0660862908803216).epsilon(1e-12));
  CHECK(ch.blocks[0].entry_variance() == doctest::Approx(101.326093215448750).epsilon(1e-12));
  CHECK(ch.blocks[1].entry_variance() == doctest::Approx(50.6630466077243751).epsilon(1e-12));
  CHECK(ch.g_channel.scale == doctest::Approx(201.825158782214783).epsilon(1e-12));
  CHECK(ch.g_channel.entry_variance() == doctest::Approx(40733.3947174662091).epsilon(1e-12));
}

TEST_CASE("noise scales are linear in the adjacency bound") {
  const ProblemSpec& spec = ref10();
  PrivacyPolicy b1 = laplace_ln2();
  PrivacyPolicy b2 = laplace_ln2();
  b2.B = 2.0;
  const NoiseChannelSet c1 = calibrate(b1, compute_sensitivities(spec.constraint, b1), spec);
  const NoiseChannelSet c2 = calibrate(b2, compute_sensitivities(spec.constraint, b2), spec);
  for (int i = 0; i < 10; ++i) CHECK(c2.blocks[i].scale == 2.0 * c1.blocks[i].scale);
  CHECK(c2.g_channel.scale == 2.0 * c1.g_channel.scale);
  CHECK(c2.g_channel.entry_variance() == 4.0 * c1.g_channel.entry_variance());
}

TEST_CASE("inactive mechanism draws exact positive zero everywhere") {
  const ProblemSpec& spec = ref10();
  PrivacyPolicy none;
  const NoiseChannelSet ch = calibrate(none, SensitivityBundle{}, spec);
  CHECK_FALSE(ch.active);
  for (const auto& b : ch.blocks) CHECK(b.scale == 0.0);
  const Matrix w = draw(ch.g_channel, 77, 3);
  for (double v : w.data) {
    CHECK(v == 0.0);
    CHECK_FALSE(std::signbit(v));
  }
  for (std::uint64_t idx : {0ull, 1ull, 999ull})
    CHECK_FALSE(std::signbit(channel_entry(ch.blocks[2], 5, 12, idx)));
}

TEST_CASE("draws are a pure function of seed, stream, timestep and index") {
  NoiseChannel ch{Mechanism::Laplace, 1.5, 4, 3, 9};
  const Matrix a = draw(ch, 123, 7);
  const Matrix b = draw(ch, 123, 7);
  CHECK(a.data == b.data);
  const Matrix c = draw(ch, 123, 8);
  CHECK(a.data != c.data);
  const Matrix d = draw(ch, 124, 7);
  CHECK(a.data != d.data);
  CHECK(a(1, 2) == channel_entry(ch, 123, 7, 1 * 3 + 2));
}

TEST_CASE("sampled moments match the calibrated channel variance") {
  const long n = 1000000;
  NoiseChannel lap{Mechanism::Laplace, 5.77078016355585363, 1, 1, 3};
  double sum = 0.0, sumsq = 0.0;
  for (long i = 0; i < n; ++i) {
    const double v = channel_entry(lap, 2024, 1, static_cast<std::uint64_t>(i));
    sum += v;
    sumsq += v * v;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  const double lap_var = lap.entry_variance();
  CHECK(std::fabs(mean) <= 4.0 * std::sqrt(lap_var / n));
  CHECK(std::fabs(var - lap_var) <= 0.02 * lap_var);

  NoiseChannel gau{Mechanism::Gaussian, 10.0660862908803216, 1, 1, 4};
  sum = 0.0;
  sumsq = 0.0;
  for (long i = 0; i < n; ++i) {
    const double v = channel_entry(gau, 2024, 1, static_cast<std::uint64_t>(i));
    sum += v;
    sumsq += v * v;
  }
  mean = sum / n;
  var = sumsq / n - mean * mean;
  const double gau_var = gau.entry_variance();
  CHECK(std::fabs(mean) <= 4.0 * std::sqrt(gau_var / n));
  CHECK(std::fabs(var - gau_var) <= 0.02 * gau_var);
}

TEST_CASE("distinct streams are empirically uncorrelated") {
  NoiseChannel a{Mechanism::Gaussian, 1.0, 1, 1, 0};
  NoiseChannel b{Mechanism::Gaussian, 1.0, 1, 1, 1};
  const long n = 200000;
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (long k = 1; k <= n; ++k) {
    const double va = channel_entry(a, 55, k, 0);
    const double vb = channel_entry(b, 55, k, 0);
    sa += va;
    sb += vb;
    saa += va * va;
    sbb += vb * vb;
    sab += va * vb;
  }
  const double cov = sab / n - (sa / n) * (sb / n);
  const double corr =
      cov / std::sqrt((saa / n - (sa / n) * (sa / n)) * (sbb / n - (sb / n) * (sb / n)));
  CHECK(std::fabs(corr) < 0.01);
}

TEST_CASE("adjacency is boundary inclusive in both norms") {
  const std::vector<Vec> s1{{0.0, 0.0}, {1.0, 1.0}};
  std::vector<Vec> s2 = s1;
  s2[1][0] += 1.0;
  CHECK(adjacency(s1, s1, 1.0, 1));
  CHECK(adjacency(s1, s2, 1.0, 1));
  CHECK(adjacency(s1, s2, 1.0, 2));
  s2[1][1] += 0.001;
  CHECK_FALSE(adjacency(s1, s2, 1.0, 1));
  CHECK(adjacency(s1, s2, 1.0001, 2));

  std::vector<Vec> shape{{0.0}, {1.0, 1.0}};
  CHECK_THROWS_AS((void)adjacency(s1, shape, 1.0, 1), ValidationError);
  CHECK_THROWS_AS((void)adjacency(s1, {{0.0, 0.0}}, 1.0, 1), ValidationError);
  CHECK_THROWS_AS((void)adjacency(s1, s2, 0.0, 1), ValidationError);
  CHECK_THROWS_AS((void)adjacency(s1, s2, 1.0, 3), ValidationError);
}

TEST_CASE("empirical likelihood ratios respect the epsilon budget") {
  // Two B-adjacent constant signals through the scalar Laplace mechanism.
  const double eps = std::log(2.0);
  const double b = 1.0 / eps;
  const long n = 1000000;
  const int nbins = 5;  // width b, centred range covering both means
  const double lo = -2.0 * b;
  std::vector<long> h0(nbins, 0), h1(nbins, 0);
  NoiseChannel ch0{Mechanism::Laplace, b, 1, 1, 0};
  NoiseChannel ch1{Mechanism::Laplace, b, 1, 1, 1};
  for (long i = 0; i < n; ++i) {
    const double y0 = 0.0 + channel_entry(ch0, 4242, 1, static_cast<std::uint64_t>(i));
    const double y1 = 1.0 + channel_entry(ch1, 4242, 1, static_cast<std::uint64_t>(i));
    const int i0 = static_cast<int>(std::floor((y0 - lo) / b));
    const int i1 = static_cast<int>(std::floor((y1 - lo) / b));
    if (i0 >= 0 && i0 < nbins) ++h0[i0];
    if (i1 >= 0 && i1 < nbins) ++h1[i1];
  }
  for (int j = 0; j < nbins; ++j) {
    REQUIRE(h0[j] >= 1000);
    REQUIRE(h1[j] >= 1000);
    const double llr = std::log(static_cast<double>(h0[j]) / static_cast<double>(h1[j]));
    CHECK(std::fabs(llr) <= eps + 0.05);
  }
}
