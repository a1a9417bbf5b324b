#include "msd/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <thread>

#include "msd/errors.hpp"
#include "msd/rng.hpp"

namespace msd {

void SimConfig::validate() const {
  P.validate();
  K.validate();
  if (!P.is_siso() || !K.is_siso()) throw InputError("simulation: SISO plant and controller required");
  if (P.D(0, 0) != 0.0) throw InputError("simulation: plant must be strictly proper");
  if (horizon < 1) throw InputError("simulation: horizon must be at least 1");
  if (trials < 1) throw InputError("simulation: trials must be at least 1");
  if (const auto* w = std::get_if<WhiteInput>(&input_mode)) {
    if (!(w->sigma_v_sq >= 0.0) || !std::isfinite(w->sigma_v_sq))
      throw InputError("simulation: sigma_v_sq must be finite and nonnegative");
  } else {
    const Matrix& S = std::get<ZeroInput>(input_mode).sigma0;
    const auto n = P.states() + K.states();
    if (S.rows() != n || S.cols() != n)
      throw InputError("simulation: initial covariance must be " + std::to_string(n) + "x" + std::to_string(n) +
                       " over [x_P; x_K]");
    if (!S.allFinite() || (S - S.transpose()).norm() > 1e-12 * std::max(1.0, S.norm()))
      throw InputError("simulation: initial covariance must be symmetric");
    if (n > 0) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(S);
      if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, S.norm()))
        throw InputError("simulation: initial covariance must be positive semidefinite");
    }
  }
}

namespace {

constexpr std::size_t kBlock = 512;

// Loop data copied into flat row-major arrays; small matrices, hot loop.
class Stepper {
 public:
  explicit Stepper(const SimConfig& cfg)
      : cfg_(cfg),
        np_(static_cast<std::size_t>(cfg.P.states())),
        nk_(static_cast<std::size_t>(cfg.K.states())),
        ap_(flat(cfg.P.A)),
        bp_(flat(cfg.P.B)),
        cp_(flat(cfg.P.C)),
        ak_(flat(cfg.K.A)),
        bk_(flat(cfg.K.B)),
        ck_(flat(cfg.K.C)),
        dk_(cfg.K.D(0, 0)),
        tau_max_(cfg.spec.max_delay()) {
    if (const auto* w = std::get_if<WhiteInput>(&cfg.input_mode)) {
      sigma_v_ = std::sqrt(w->sigma_v_sq);
    } else {
      const Matrix& S = std::get<ZeroInput>(cfg.input_mode).sigma0;
      zero_input_ = true;
      if (S.rows() > 0) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(S);
        const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        init_factor_ = es.eigenvectors() * root.asDiagonal();
      }
    }
  }

  std::size_t states() const noexcept { return np_ + nk_; }
  bool zero_input() const noexcept { return zero_input_; }

  // Runs one trial; visit(k, u, u_d, v, tau, x) sees x = [x_P; x_K] at time k
  // before the update. Returns false if the state left the finite range.
  template <class Visit>
  bool run(std::uint64_t trial, Visit&& visit) const {
    const CounterRng delay_rng(cfg_.seed, trial, StreamTag::kDelay);
    const CounterRng noise_rng(cfg_.seed, trial, StreamTag::kNoise);
    std::vector<double> x(states(), 0.0), xn(states(), 0.0);
    if (zero_input_ && states() > 0) {
      const CounterRng init_rng(cfg_.seed, trial, StreamTag::kInitialState);
      Vector z(static_cast<Eigen::Index>(states()));
      for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = init_rng.normal_at(static_cast<std::uint64_t>(i));
      const Vector x0 = init_factor_ * z;
      for (std::size_t i = 0; i < states(); ++i) x[i] = x0(static_cast<Eigen::Index>(i));
    }
    // Ring of the last tau+1 sent values and their delays; index k mod (tau+1).
    const std::size_t ring = tau_max_ + 1;
    std::vector<double> sent(ring, 0.0);
    std::vector<std::size_t> delay(ring, 0);
    std::vector<bool> filled(ring, false);
    const auto& a = cfg_.spec.weights();
    bool finite = true;

    for (std::size_t k = 0; k <= cfg_.horizon; ++k) {
      const double* xp = x.data();
      const double* xk = x.data() + np_;
      double y = 0.0;
      for (std::size_t j = 0; j < np_; ++j) y += cp_[j] * xp[j];
      double u = dk_ * y;
      for (std::size_t j = 0; j < nk_; ++j) u += ck_[j] * xk[j];

      const std::size_t tau = delay_from_uniform(cfg_.spec, delay_rng.uniform_at(k));
      const std::size_t slot = k % ring;
      sent[slot] = u;
      delay[slot] = tau;
      filled[slot] = true;

      // Packet sent at k - i contributes iff its delay was exactly i.
      double ud = 0.0;
      for (std::size_t i = 0; i <= tau_max_ && i <= k; ++i) {
        const std::size_t s = (k - i) % ring;
        if (filled[s] && delay[s] == i) ud += a[i] * sent[s];
      }
      const double v = zero_input_ ? 0.0 : sigma_v_ * noise_rng.normal_at(k);
      visit(k, u, ud, v, tau, x);

      const double e = v - ud;
      for (std::size_t i = 0; i < np_; ++i) {
        double acc = bp_[i] * e;
        for (std::size_t j = 0; j < np_; ++j) acc += ap_[i * np_ + j] * xp[j];
        xn[i] = acc;
      }
      for (std::size_t i = 0; i < nk_; ++i) {
        double acc = bk_[i] * y;
        for (std::size_t j = 0; j < nk_; ++j) acc += ak_[i * nk_ + j] * xk[j];
        xn[np_ + i] = acc;
      }
      x.swap(xn);
      if (finite && !std::isfinite(u)) finite = false;
    }
    return finite;
  }

 private:
  static std::vector<double> flat(const Matrix& M) {
    std::vector<double> out(static_cast<std::size_t>(M.size()));
    for (Eigen::Index i = 0; i < M.rows(); ++i)
      for (Eigen::Index j = 0; j < M.cols(); ++j) out[static_cast<std::size_t>(i * M.cols() + j)] = M(i, j);
    return out;
  }

  const SimConfig& cfg_;
  std::size_t np_, nk_;
  std::vector<double> ap_, bp_, cp_, ak_, bk_, ck_;
  double dk_;
  std::size_t tau_max_;
  double sigma_v_ = 0.0;
  bool zero_input_ = false;
  Matrix init_factor_;
};

struct BlockSums {
  std::vector<double> s1, s2, s4;  // sums of u, u^2, u^4 per k
  std::vector<double> xx;          // sums of x x' per k, row-major n x n
  bool overflow = false;
};

BlockSums run_block(const Stepper& st, const SimConfig& cfg, std::size_t first, std::size_t last, bool track_cov) {
  const std::size_t T = cfg.horizon + 1;
  const std::size_t n = st.states();
  BlockSums b;
  b.s1.assign(T, 0.0);
  b.s2.assign(T, 0.0);
  b.s4.assign(T, 0.0);
  if (track_cov) b.xx.assign(T * n * n, 0.0);
  for (std::size_t trial = first; trial < last; ++trial) {
    const bool ok = st.run(trial, [&](std::size_t k, double u, double, double, std::size_t,
                                      const std::vector<double>& x) {
      const double u2 = u * u;
      b.s1[k] += u;
      b.s2[k] += u2;
      b.s4[k] += u2 * u2;
      if (track_cov) {
        double* c = b.xx.data() + k * n * n;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) c[i * n + j] += x[i] * x[j];
      }
    });
    if (!ok) b.overflow = true;
  }
  return b;
}

}  // namespace

SimPath simulate_path(const SimConfig& cfg, std::uint64_t trial) {
  cfg.validate();
  const Stepper st(cfg);
  SimPath p;
  const std::size_t T = cfg.horizon + 1;
  p.u.resize(T);
  p.u_d.resize(T);
  p.v.resize(T);
  p.tau.resize(T);
  p.overflow = !st.run(trial, [&](std::size_t k, double u, double ud, double v, std::size_t tau,
                                  const std::vector<double>&) {
    p.u[k] = u;
    p.u_d[k] = ud;
    p.v[k] = v;
    p.tau[k] = tau;
  });
  return p;
}

SimResult estimate_variance(const SimConfig& cfg) {
  cfg.validate();
  const Stepper st(cfg);
  const bool track_cov = st.zero_input();
  const std::size_t blocks = (cfg.trials + kBlock - 1) / kBlock;
  std::vector<BlockSums> sums(blocks);

  unsigned workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, blocks));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t b; (b = next.fetch_add(1)) < blocks;)
      sums[b] = run_block(st, cfg, b * kBlock, std::min(cfg.trials, (b + 1) * kBlock), track_cov);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  const std::size_t T = cfg.horizon + 1;
  const std::size_t n = st.states();
  std::vector<double> s1(T, 0.0), s2(T, 0.0), s4(T, 0.0), xx(track_cov ? T * n * n : 0, 0.0);
  SimResult r;
  for (const BlockSums& b : sums) {
    for (std::size_t k = 0; k < T; ++k) {
      s1[k] += b.s1[k];
      s2[k] += b.s2[k];
      s4[k] += b.s4[k];
    }
    for (std::size_t i = 0; i < xx.size(); ++i) xx[i] += b.xx[i];
    r.overflow = r.overflow || b.overflow;
  }

  const double N = static_cast<double>(cfg.trials);
  r.mean_u.resize(T);
  r.var_u.sigma_sq.resize(T);
  r.stderr_u.resize(T);
  for (std::size_t k = 0; k < T; ++k) {
    const double m = s1[k] / N;
    const double m2 = s2[k] / N;
    r.mean_u[k] = m;
    r.var_u.sigma_sq[k] = cfg.trials > 1 ? std::max(0.0, (s2[k] - N * m * m) / (N - 1.0)) : 0.0;
    const double var_u2 = cfg.trials > 1 ? std::max(0.0, (s4[k] - N * m2 * m2) / (N - 1.0)) : 0.0;
    r.stderr_u[k] = std::sqrt(var_u2 / N);
  }
  if (track_cov) {
    r.cov_norm.emplace(T);
    for (std::size_t k = 0; k < T; ++k) {
      double f = 0.0;
      for (std::size_t i = 0; i < n * n; ++i) {
        const double c = xx[k * n * n + i] / N;
        f += c * c;
      }
      (*r.cov_norm)[k] = std::sqrt(f);
    }
  }
  return r;
}

DecayVerdict covariance_decay(const SimConfig& cfg) {
  const auto* zi = std::get_if<ZeroInput>(&cfg.input_mode);
  if (!zi) throw InputError("covariance_decay: zero-input mode required");
  const SimResult r = estimate_variance(cfg);
  DecayVerdict d;
  d.cov_norm = *r.cov_norm;
  d.overflow = r.overflow;
  d.threshold = 1e-4 * zi->sigma0.norm();
  const std::size_t T = d.cov_norm.size();
  const std::size_t tail = std::max<std::size_t>(1, T / 10);
  d.decaying = !r.overflow;
  for (std::size_t k = T - tail; k < T; ++k)
    if (!(d.cov_norm[k] < d.threshold)) d.decaying = false;
  return d;
}

void write_csv(std::ostream& os, const SimResult& r) {
  os << "k,mean_u,var_u,stderr_u" << (r.cov_norm ? ",cov_norm" : "") << '\n';
  os << std::setprecision(17);
  for (std::size_t k = 0; k < r.mean_u.size(); ++k) {
    os << k << ',' << r.mean_u[k] << ',' << r.var_u.sigma_sq[k] << ',' << r.stderr_u[k];
    if (r.cov_norm) os << ',' << (*r.cov_norm)[k];
    os << '\n';
  }
}

}  // namespace msd
