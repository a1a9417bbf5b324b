#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <variant>
#include <vector>

#include "msd/analysis.hpp"
#include "msd/channel.hpp"
#include "msd/lti.hpp"

namespace msd {

struct WhiteInput {
  double sigma_v_sq = 1.0;
};

/// v = 0 and [x_P(0); x_K(0)] ~ N(0, sigma0).
struct ZeroInput {
  Matrix sigma0;
};

using InputMode = std::variant<WhiteInput, ZeroInput>;

struct SimConfig {
  StateSpace P;
  StateSpace K;
  ChannelSpec spec{{1.0}, {1.0}};
  std::size_t horizon = 1;  // samples k = 0..horizon
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  InputMode input_mode = WhiteInput{};
  unsigned threads = 0;  // 0: hardware concurrency; never affects results

  /// Throws InputError on an improper plant, bad dimensions, negative
  /// variance or a covariance that is not symmetric PSD.
  void validate() const;
};

/// One realization of the loop, k = 0..horizon.
struct SimPath {
  std::vector<double> u;
  std::vector<double> u_d;
  std::vector<double> v;
  std::vector<std::size_t> tau;
  bool overflow = false;
};

SimPath simulate_path(const SimConfig& cfg, std::uint64_t trial);

struct SimResult {
  std::vector<double> mean_u;
  VarianceTrace var_u{{}, TraceSource::kEmpirical};
  std::vector<double> stderr_u;              // sqrt(sample var of u^2 / trials)
  std::optional<std::vector<double>> cov_norm;  // ||E x x'||_F over [x_P; x_K]
  bool overflow = false;                     // some trial left the finite range
};

/// Across-trial moments of u(k). Trials are grouped into fixed blocks whose
/// partial sums are combined in block order, so the result is bit-identical
/// for any thread count. The state covariance trace is filled in zero-input
/// mode.
SimResult estimate_variance(const SimConfig& cfg);

struct DecayVerdict {
  bool decaying = false;
  double threshold = 0.0;
  std::vector<double> cov_norm;
  bool overflow = false;
};

/// Requires ZeroInput mode. Decaying when ||cov|| < 1e-4 ||sigma0|| over the
/// final 10% of the horizon.
DecayVerdict covariance_decay(const SimConfig& cfg);

/// k, mean_u, var_u, stderr_u[, cov_norm]
void write_csv(std::ostream& os, const SimResult& r);

}  // namespace msd
