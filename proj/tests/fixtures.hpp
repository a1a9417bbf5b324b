#pragma once

#include "msd/channel.hpp"
#include "msd/lti.hpp"

namespace fixtures {

// Unstable second-order plant with poles 1.2 and 1.1.
inline msd::StateSpace two_pole_plant() {
  msd::Matrix A(2, 2), B(2, 1), C(1, 2);
  A << 1.2, 0.0, 1.0, 1.1;
  B << 1.0, 0.0;
  C << 1.0, 1.0;
  return msd::StateSpace(A, B, C, msd::Matrix::Zero(1, 1));
}

// Delays 0, 1, 2 with probabilities 0.6, 0.3, 0.1; the late packet is dropped.
inline msd::ChannelSpec two_tap_channel() { return msd::ChannelSpec({0.6, 0.3, 0.1}, {0.6, 0.4, 0.0}); }

// Optimal controller for the pair above, as produced by synthesize().
inline msd::StateSpace optimal_controller(double kappa = 1.0) {
  const msd::RationalTF k(msd::Polynomial{0.8315885263432586, -0.8481547386124744},
                          msd::Polynomial{1.0, -0.26683213563573377, 0.01668321356357339});
  return msd::scaled(msd::ss_from_tf(k), kappa);
}

}  // namespace fixtures
