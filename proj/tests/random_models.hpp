#pragma once

// Random channels, systems and loops shared by the property tests and the
// acceptance runner.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "msd/analysis.hpp"
#include "msd/channel.hpp"
#include "msd/errors.hpp"
#include "msd/lti.hpp"

namespace models {

// pmf entries bounded away from zero, weights uniform on [w_lo, w_hi].
inline msd::ChannelSpec random_channel(std::mt19937_64& rng, std::size_t max_len, double w_lo, double w_hi) {
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_real_distribution<double> u(0.05, 1.05), w(w_lo, w_hi);
  const std::size_t n = len(rng);
  std::vector<double> p(n), a(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s += (p[i] = u(rng));
    a[i] = w(rng);
  }
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) acc += (p[i] /= s);
  p[n - 1] = 1.0 - acc;
  return msd::ChannelSpec(p, a);
}

// Real poles in (-0.95, 0.95), coefficients uniform on [-1, 1].
inline msd::StateSpace random_system(std::mt19937_64& rng, int order, bool strictly_proper) {
  std::uniform_real_distribution<double> pole(-0.95, 0.95), coef(-1.0, 1.0);
  std::vector<std::complex<double>> poles;
  for (int i = 0; i < order; ++i) poles.emplace_back(pole(rng), 0.0);
  std::vector<double> num(static_cast<std::size_t>(order) + 1);
  for (double& c : num) c = coef(rng);
  if (strictly_proper) num[0] = 0.0;
  return msd::ss_from_tf(msd::RationalTF(msd::Polynomial(num), msd::Polynomial::from_roots(poles)));
}

// Strictly proper plant with poles in (-1.3, 1.3) and zeros inside the unit
// disc: without measurement noise the filter equation has no stabilizing
// solution otherwise.
inline msd::StateSpace random_min_phase_plant(std::mt19937_64& rng, int order) {
  std::uniform_real_distribution<double> pole(-1.3, 1.3), coef(-1.0, 1.0);
  std::vector<std::complex<double>> poles, zeros;
  for (int i = 0; i < order; ++i) poles.emplace_back(pole(rng), 0.0);
  for (int i = 1; i < order; ++i) zeros.emplace_back(0.9 * coef(rng), 0.0);
  const msd::Polynomial num = msd::Polynomial{0.0, 1.0} * msd::Polynomial::from_roots(zeros, 0.5 + std::abs(coef(rng)));
  return msd::ss_from_tf(msd::RationalTF(num, msd::Polynomial::from_roots(poles)));
}

struct Loop {
  msd::StateSpace P, K;
  msd::ChannelSpec spec{{1.0}, {1.0}};
  msd::StateSpace G;
  msd::Polynomial phi;
};

// Nominally stable loops (spectral radius <= 0.97) with a non-marginal channel.
inline std::vector<Loop> random_loops(std::size_t count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::vector<Loop> out;
  while (out.size() < count) {
    Loop l;
    l.P = random_system(rng, 1 + static_cast<int>(rng() % 3), true);
    l.K = random_system(rng, static_cast<int>(rng() % 3), false);
    l.spec = random_channel(rng, 4, 0.0, 1.0);
    try {
      l.phi = msd::spectral_factor(l.spec).phi;
    } catch (const msd::MarginalFactorizationError&) {
      continue;
    }
    l.G = msd::nominal_loop(l.P, l.K, l.spec);
    if (msd::is_schur(l.G.A).spectral_radius > 0.97) continue;
    out.push_back(std::move(l));
  }
  return out;
}

}  // namespace models
