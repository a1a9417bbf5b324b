#include <cmath>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "moment_checks.hpp"
#include "moment_oracle.hpp"
#include "msd/analysis.hpp"
#include "msd/errors.hpp"
#include "msd/simulation.hpp"

using namespace msd;

namespace {

SimConfig two_tap_config(double kappa, std::size_t horizon, std::size_t trials) {
  SimConfig cfg;
  cfg.P = fixtures::two_pole_plant();
  cfg.K = fixtures::optimal_controller(kappa);
  cfg.spec = fixtures::two_tap_channel();
  cfg.horizon = horizon;
  cfg.trials = trials;
  cfg.seed = 77;
  cfg.input_mode = WhiteInput{1.0};
  return cfg;
}

// Re-runs the loop from recorded delays and noise, keeping the whole send
// history instead of a ring buffer.
std::vector<double> replay(const SimConfig& cfg, const SimPath& path) {
  const StateSpace& P = cfg.P;
  const StateSpace& K = cfg.K;
  Vector xp = Vector::Zero(P.states()), xk = Vector::Zero(K.states());
  std::vector<double> u(path.u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double y = (P.C * xp)(0, 0);
    u[k] = (K.C * xk)(0, 0) + K.D(0, 0) * y;
    double ud = 0.0;
    for (std::size_t j = 0; j <= k; ++j)
      if (path.tau[j] == k - j) ud += cfg.spec.weights()[k - j] * u[j];
    xp = (P.A * xp + P.B * (path.v[k] - ud)).eval();
    xk = (K.A * xk + K.B * y).eval();
  }
  return u;
}

}  // namespace

TEST_CASE("configuration checks") {
  SimConfig cfg = two_tap_config(1.0, 10, 10);
  CHECK_NOTHROW(cfg.validate());
  cfg.P.D(0, 0) = 1.0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = two_tap_config(1.0, 10, 10);
  cfg.input_mode = WhiteInput{-1.0};
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg.input_mode = ZeroInput{Matrix::Identity(3, 3)};
  CHECK_THROWS_AS(cfg.validate(), InputError);
  Matrix bad = Matrix::Identity(4, 4);
  bad(0, 0) = -1.0;
  cfg.input_mode = ZeroInput{bad};
  CHECK_THROWS_AS(cfg.validate(), InputError);
}

TEST_CASE("paths agree with an independent replay") {
  for (double kappa : {0.5, 1.0, 2.2}) {
    const SimConfig cfg = two_tap_config(kappa, 60, 1);
    for (std::uint64_t trial = 0; trial < 5; ++trial) {
      const SimPath p = simulate_path(cfg, trial);
      const auto u = replay(cfg, p);
      for (std::size_t k = 0; k < u.size(); ++k) CHECK(p.u[k] == doctest::Approx(u[k]).epsilon(1e-12).scale(1e-12));
    }
  }
}

TEST_CASE("deterministic zero-delay channel is the nominal loop") {
  SimConfig cfg = two_tap_config(1.0, 40, 1);
  cfg.spec = ChannelSpec({1.0}, {1.0});
  const SimPath p = simulate_path(cfg, 3);
  for (std::size_t k = 0; k <= 40; ++k) {
    CHECK(p.tau[k] == 0);
    CHECK(p.u_d[k] == p.u[k]);
  }
  // u = G v with G the nominal loop.
  const StateSpace G = nominal_loop(cfg.P, cfg.K, cfg.spec);
  const ImpulseResponse g = impulse_response(G, 40);
  for (std::size_t k = 0; k <= 40; ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j <= k; ++j) acc += g.g[k - j] * p.v[j];
    CHECK(p.u[k] == doctest::Approx(acc).epsilon(1e-9).scale(1e-9));
  }
}

TEST_CASE("zero controller") {
  SimConfig cfg = two_tap_config(1.0, 30, 64);
  cfg.K = StateSpace::gain(0.0);
  const SimPath p = simulate_path(cfg, 0);
  for (std::size_t k = 0; k <= 30; ++k) {
    CHECK(p.u[k] == 0.0);
    CHECK(p.u_d[k] == 0.0);
  }
  cfg.spec = ChannelSpec({1.0}, {1.0});
  const SimResult r = estimate_variance(cfg);
  for (double v : r.var_u.sigma_sq) CHECK(v == 0.0);
}

TEST_CASE("exhaustive delay enumeration at horizon 2") {
  // Scalar loop: x+ = a x + b e, y = c x, u = kk y.
  const double a = 0.9, b = 1.0, c = 1.0, kk = 0.7;
  SimConfig cfg;
  cfg.P = StateSpace(Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b), Matrix::Constant(1, 1, c), Matrix::Zero(1, 1));
  cfg.K = StateSpace::gain(kk);
  cfg.spec = fixtures::two_tap_channel();
  cfg.horizon = 2;
  cfg.trials = 200000;
  cfg.seed = 5;
  cfg.input_mode = WhiteInput{1.0};
  const auto& p = cfg.spec.pmf();
  const auto& w = cfg.spec.weights();

  // u(k) = sum_j coef[j] v(j); enumerate tau_0 and tau_1.
  double e1 = 0.0, e2 = 0.0;
  for (std::size_t t0 = 0; t0 < 3; ++t0)
    for (std::size_t t1 = 0; t1 < 3; ++t1) {
      const double pr = p[t0] * p[t1];
      // u(0) = 0 since x(0) = 0, so u_d(0) = u_d(1)'s packet-0 part = 0.
      // x(1) = b v0, u(1) = kk c b v0.
      const double u1_v0 = kk * c * b;
      // u_d(1) = w0 1{t1 = 0} u(1); x(2) = a x(1) + b (v1 - u_d(1)).
      const double ud1_v0 = (t1 == 0 ? w[0] : 0.0) * u1_v0;
      const double x2_v0 = a * b - b * ud1_v0, x2_v1 = b;
      const double u2_v0 = kk * c * x2_v0, u2_v1 = kk * c * x2_v1;
      e1 += pr * u1_v0 * u1_v0;
      e2 += pr * (u2_v0 * u2_v0 + u2_v1 * u2_v1);
    }
  const SimResult r = estimate_variance(cfg);
  CHECK(r.var_u.sigma_sq[0] == 0.0);
  CHECK(std::abs(r.var_u.sigma_sq[1] - e1) <= 4.0 * r.stderr_u[1]);
  CHECK(std::abs(r.var_u.sigma_sq[2] - e2) <= 4.0 * r.stderr_u[2]);

  const auto exact = oracle::exact_u_variance(cfg.P, cfg.K, cfg.spec, 1.0, Matrix::Zero(1, 1), 2);
  CHECK(exact[1] == doctest::Approx(e1).epsilon(1e-14));
  CHECK(exact[2] == doctest::Approx(e2).epsilon(1e-14));
}

TEST_CASE("results do not depend on the thread count") {
  SimConfig cfg = two_tap_config(1.0, 50, 3000);
  cfg.threads = 1;
  const SimResult a = estimate_variance(cfg);
  cfg.threads = 4;
  const SimResult b = estimate_variance(cfg);
  CHECK(a.var_u.sigma_sq == b.var_u.sigma_sq);
  CHECK(a.mean_u == b.mean_u);
  CHECK(a.stderr_u == b.stderr_u);
  cfg.seed = 78;
  const SimResult c = estimate_variance(cfg);
  CHECK(c.var_u.sigma_sq != a.var_u.sigma_sq);
}

TEST_CASE("empirical variance follows the recursion") {
  const SimConfig cfg = two_tap_config(1.0, 50, 20000);
  const SimResult r = estimate_variance(cfg);
  const StateSpace G = nominal_loop(cfg.P, cfg.K, cfg.spec);
  const VarianceTrace rec = variance_recursion(recursion_kernels(G, cfg.spec, 50), VarianceTrace::constant(1.0, 50));
  for (std::size_t k = 1; k <= 50; ++k) CHECK(std::abs(r.var_u.sigma_sq[k] - rec.sigma_sq[k]) <= 4.0 * r.stderr_u[k]);

  std::ostringstream os;
  write_csv(os, r);
  CHECK(os.str().rfind("k,mean_u,var_u,stderr_u\n0,", 0) == 0);
}

TEST_CASE("channel uncertainty moments") {
  SimConfig cfg = two_tap_config(1.0, 45, 20000);
  const std::size_t k = 40;
  const auto exact = oracle::exact_u_variance(cfg.P, cfg.K, cfg.spec, 1.0, Matrix::Zero(4, 4), cfg.horizon);
  for (const moments::Check& c : moments::run(cfg, k, exact)) {
    INFO(c.name, " estimate ", c.estimate, " predicted ", c.predicted, " stderr ", c.se);
    CHECK(c.z() <= 4.0);
  }
}

TEST_CASE("state covariance decay") {
  SimConfig cfg = two_tap_config(1.0, 300, 4000);
  cfg.input_mode = ZeroInput{Matrix::Identity(4, 4)};
  const DecayVerdict good = covariance_decay(cfg);
  CHECK(good.decaying);
  CHECK(good.cov_norm.front() == doctest::Approx(2.0).epsilon(0.05));

  cfg.K = fixtures::optimal_controller(2.2);
  const DecayVerdict bad = covariance_decay(cfg);
  CHECK_FALSE(bad.decaying);

  SimConfig simple;
  simple.P = ss_from_tf(RationalTF(Polynomial{0.0, 1.0}, Polynomial{1.0, -0.5}));
  simple.K = StateSpace::gain(0.2);
  simple.horizon = 200;
  simple.trials = 500;
  simple.input_mode = ZeroInput{Matrix::Identity(1, 1)};
  CHECK(covariance_decay(simple).decaying);

  cfg.input_mode = WhiteInput{1.0};
  CHECK_THROWS_AS(covariance_decay(cfg), InputError);
}
