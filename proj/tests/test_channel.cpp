#include <cmath>
#include <random>

#include "doctest.h"
#include "random_models.hpp"
#include "msd/channel.hpp"
#include "msd/errors.hpp"

using namespace msd;

namespace {

// r(l) = sum_i E[X_i X_{i+l}] with X_i = a_i (1{tau = i} - p_i), by direct
// expectation over the delay outcome.
std::vector<double> autocorr_by_enumeration(const ChannelSpec& c) {
  const auto& p = c.pmf();
  const auto& a = c.weights();
  const std::size_t n = p.size();
  std::vector<double> r(n, 0.0);
  for (std::size_t l = 0; l < n; ++l)
    for (std::size_t i = 0; i + l < n; ++i)
      for (std::size_t t = 0; t < n; ++t) {
        const double xi = a[i] * ((t == i ? 1.0 : 0.0) - p[i]);
        const double xj = a[i + l] * ((t == i + l ? 1.0 : 0.0) - p[i + l]);
        r[l] += p[t] * xi * xj;
      }
  return r;
}

ChannelSpec random_channel(std::mt19937_64& rng) { return models::random_channel(rng, 6, -1.5, 1.5); }

}  // namespace

TEST_CASE("channel validation") {
  CHECK_THROWS_AS(ChannelSpec({}, {}), InputError);
  CHECK_THROWS_AS(ChannelSpec({0.5, 0.5}, {1.0}), InputError);
  CHECK_THROWS_AS(ChannelSpec({0.6, 0.3}, {1.0, 1.0}), InputError);
  CHECK_THROWS_AS(ChannelSpec({1.2, -0.2}, {1.0, 1.0}), InputError);
  CHECK_THROWS_AS(ChannelSpec({1.0}, {NAN}), InputError);
  CHECK_NOTHROW(ChannelSpec({0.6, 0.3, 0.1}, {0.6, 0.4, 0.0}));
}

TEST_CASE("mean channel") {
  const Polynomial h = mean_channel(ChannelSpec({0.6, 0.3, 0.1}, {0.6, 0.4, 0.0}));
  REQUIRE(h.size() == 3);
  CHECK(h[0] == 0.6 * 0.6);
  CHECK(h[1] == 0.3 * 0.4);
  CHECK(h[2] == 0.0);
  CHECK(max_coeff_diff(mean_channel(ChannelSpec({1.0}, {1.0})), Polynomial{1.0}) == 0.0);
  CHECK(max_coeff_diff(mean_channel(ChannelSpec({0.0, 1.0}, {1.0, 1.0})), Polynomial{0.0, 1.0}) == 0.0);
}

TEST_CASE("autocorrelation") {
  const AutoCorr r = autocorrelation(ChannelSpec({0.6, 0.3, 0.1}, {0.6, 0.4, 0.0}));
  CHECK(r(0) == doctest::Approx(0.12).epsilon(1e-15));
  CHECK(r(1) == doctest::Approx(-0.0432).epsilon(1e-15));
  CHECK(r(-1) == r(1));
  CHECK(r(2) == 0.0);
  CHECK(r(7) == 0.0);

  CHECK(autocorrelation(ChannelSpec({1.0}, {0.7})).r[0] == 0.0);
  const AutoCorr u = autocorrelation(ChannelSpec({0.5, 0.5}, {1.0, 1.0}));
  CHECK(u(0) == 0.5);
  CHECK(u(1) == -0.25);

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const ChannelSpec c = random_channel(rng);
    const auto ref = autocorr_by_enumeration(c);
    const AutoCorr got = autocorrelation(c);
    for (std::size_t l = 0; l < ref.size(); ++l) CHECK(got.r[l] == doctest::Approx(ref[l]).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("spectral density") {
  const SpectralDensity s = spectral_density(ChannelSpec({0.6, 0.3, 0.1}, {0.6, 0.4, 0.0}));
  CHECK(s.at(-1) == doctest::Approx(-0.0432));
  CHECK(s.at(0) == doctest::Approx(0.12));
  CHECK(s.at(2) == 0.0);
  CHECK(s.on_unit_circle(0.0) == doctest::Approx(0.12 - 2 * 0.0432));
  CHECK(s.grid_minimum() > 0.0);
}

TEST_CASE("spectral factor of the two-tap channel") {
  const ChannelSpec c({0.6, 0.3, 0.1}, {0.6, 0.4, 0.0});
  const SpectralFactor f = spectral_factor(c);
  CHECK_FALSE(f.degenerate);
  REQUIRE(f.phi.size() == 2);
  // Closed form: phi = k (1 - w z^-1), w the root of r1 w^2 + r0 w + r1 inside the disk.
  const double r0 = 0.12, r1 = -0.0432;
  const double w = (-r0 + std::sqrt(r0 * r0 - 4 * r1 * r1)) / (2 * r1);
  const double k = std::sqrt(r0 / (1 + w * w));
  CHECK(f.phi[0] == doctest::Approx(k).epsilon(1e-13));
  CHECK(f.phi[1] == doctest::Approx(-k * w).epsilon(1e-13));
  CHECK(std::abs(f.phi[0] - 0.3188) < 5e-5);
  CHECK(std::abs(f.phi[1] + 0.1355) < 5e-5);
  const auto prod = factor_product(f.phi);
  CHECK(std::abs(prod[1] - 0.12) < 1e-15);
  CHECK(std::abs(prod[0] + 0.0432) < 1e-15);
}

TEST_CASE("spectral factor edge cases") {
  const SpectralFactor d = spectral_factor(ChannelSpec({1.0}, {1.0}));
  CHECK(d.degenerate);
  CHECK(d.phi.is_zero());

  // Single tap with r = [r0]: phi = sqrt(r0).
  const SpectralFactor s = spectral_factor(ChannelSpec({0.5, 0.5}, {1.0, 0.0}));
  REQUIRE(s.phi.size() == 1);
  CHECK(s.phi[0] == doctest::Approx(0.5));

  // S(e^jt) = 0.5 - 0.5 cos t vanishes at t = 0.
  CHECK_THROWS_AS(spectral_factor(ChannelSpec({0.5, 0.5}, {1.0, 1.0})), MarginalFactorizationError);
}

TEST_CASE("spectral factor on random channels") {
  std::mt19937_64 rng(17);
  int factored = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const ChannelSpec c = random_channel(rng);
    SpectralFactor f;
    try {
      f = spectral_factor(c);
    } catch (const MarginalFactorizationError&) {
      // Only admissible when the density actually touches zero.
      CHECK(spectral_density(c).grid_minimum(4096) < 1e-6);
      continue;
    }
    ++factored;
    if (f.degenerate) continue;
    CHECK(f.phi[0] > 0.0);
    for (const auto& z : f.phi.roots_in_z()) CHECK(std::abs(z) < 1.0);
    const AutoCorr r = autocorrelation(c);
    const auto prod = factor_product(f.phi);
    const long d = static_cast<long>(prod.size() / 2);
    for (long l = 0; l < static_cast<long>(r.r.size()); ++l) {
      const double pl = l <= d ? prod[static_cast<std::size_t>(d + l)] : 0.0;
      CHECK(std::abs(pl - r(l)) <= 1e-10);
    }
  }
  CHECK(factored > 900);
}

TEST_CASE("delay sampling") {
  CHECK(delay_from_uniform(ChannelSpec({1.0}, {1.0}), 0.999) == 0);
  CHECK(delay_from_uniform(ChannelSpec({0.0, 1.0}, {1.0, 1.0}), 0.0) == 1);
  CHECK(delay_from_uniform(ChannelSpec({0.5, 0.5, 0.0}, {1.0, 1.0, 1.0}), 0.9999999999999999) == 1);

  const ChannelSpec c({0.6, 0.3, 0.1}, {0.6, 0.4, 0.0});
  CounterRng rng(42, 0, StreamTag::kTest);
  const std::size_t n = 1000000;
  std::vector<double> count(3, 0.0);
  for (std::size_t i = 0; i < n; ++i) count[sample_delay(c, rng)] += 1.0;
  CHECK(rng.counter() == n);
  for (std::size_t i = 0; i < 3; ++i) {
    const double p = c.pmf()[i];
    CHECK(std::abs(count[i] / n - p) <= 3.0 * std::sqrt(p * (1 - p) / n));
  }
}

TEST_CASE("counter RNG streams") {
  const CounterRng a(1, 0, StreamTag::kDelay), b(1, 0, StreamTag::kNoise), c(1, 1, StreamTag::kDelay);
  CHECK(a.bits_at(0) != b.bits_at(0));
  CHECK(a.bits_at(0) != c.bits_at(0));
  CHECK(a.uniform_at(5) == CounterRng(1, 0, StreamTag::kDelay).uniform_at(5));
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = a.normal_at(static_cast<std::uint64_t>(i));
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(s2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}
