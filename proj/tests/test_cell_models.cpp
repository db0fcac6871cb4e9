#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "diffnet/cell_models.hpp"

using namespace diffnet;

TEST_CASE("preset parameter values") {
  const ParamPreset p = paper_sec4_preset();
  CHECK(p.signal.alpha == 1.0);
  CHECK(p.signal.a_u == 2.0);
  CHECK(p.signal.gamma_u == 0.01);
  CHECK(p.sender.a_s == 5.0);
  CHECK(p.sender.gamma_s == 0.01);
  CHECK(p.receiver.a_r1 == 5.0);
  CHECK(p.receiver.a_r2 == 2.5);
  CHECK(p.receiver.gamma_r1 == 0.01);
  CHECK(p.receiver.gamma_r2 == 0.01);
  CHECK(p.receiver.K_1 == 50.0);
  CHECK(p.receiver.K_2 == 50.0);
  CHECK(p.receiver.K_u == 10.0);
  CHECK(p.R == 1.5);
  CHECK(p.D == 2e4);
}

TEST_CASE("preset lookup by name") {
  const ParamPreset a = paper_sec4_preset();
  const ParamPreset b = named_preset("paper-sec4");
  CHECK(a.signal.alpha == b.signal.alpha);
  CHECK(a.receiver.K_u == b.receiver.K_u);
  CHECK(a.D == b.D);
  CHECK_THROWS(named_preset("no-such-preset"));
}

TEST_CASE("sender rate") {
  const SenderParams p = paper_sec4_preset().sender;
  CHECK(sender_rate(0.0, p) == doctest::Approx(5.0));
  // production balances degradation at a_s / gamma_s
  CHECK(std::abs(sender_rate(500.0, p)) <= 1e-13);
  CHECK(sender_rate(600.0, p) == doctest::Approx(-1.0));
}

TEST_CASE("receiver rates at half-saturation points") {
  const ReceiverParams p = paper_sec4_preset().receiver;

  // Fully derepressed LacI production, no signal: dx1 = a_r1, dx2 = a_r2 (the
  // u-term vanishes and the LacI repression term is at full strength).
  Eigen::Vector2d r = receiver_rate({0.0, 0.0}, 0.0, p);
  CHECK(r[0] == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(r[1] == doctest::Approx(2.5).epsilon(1e-15));

  // TetR at K_2 halves LacI production; LacI at K_1 and u at K_u put both TetR
  // production terms at one half, so they sum back to a_r2.
  r = receiver_rate({50.0, 50.0}, 10.0, p);
  CHECK(r[0] == doctest::Approx(5.0 / 2 - 0.01 * 50.0).epsilon(1e-15));
  CHECK(r[1] == doctest::Approx(2.5 * (0.5 + 0.5) - 0.01 * 50.0).epsilon(1e-15));

  // Saturated signal drive: u >> K_u pushes the activation term to 1.
  r = receiver_rate({0.0, 0.0}, 1e6, p);
  CHECK(r[1] == doctest::Approx(2.5 * (1.0 + 1.0)).epsilon(1e-6));
}

TEST_CASE("TetR production increases with the signal, LacI production falls with TetR") {
  const ReceiverParams p = paper_sec4_preset().receiver;
  double prev = receiver_rate({100.0, 100.0}, 0.0, p)[1];
  for (double u : {1.0, 5.0, 20.0, 100.0}) {
    double cur = receiver_rate({100.0, 100.0}, u, p)[1];
    CHECK(cur > prev);
    prev = cur;
  }
  CHECK(receiver_rate({100.0, 300.0}, 0.0, p)[0] < receiver_rate({100.0, 30.0}, 0.0, p)[0]);
}

TEST_CASE("rates point inward on the boundary of the nonnegative orthant") {
  const ParamPreset p = paper_sec4_preset();
  CHECK(sender_rate(0.0, p.sender) >= 0.0);
  for (double other : {0.0, 10.0, 1e4})
    for (double u : {0.0, 5.0, 1e3}) {
      CHECK(receiver_rate({0.0, other}, u, p.receiver)[0] >= 0.0);
      CHECK(receiver_rate({other, 0.0}, u, p.receiver)[1] >= 0.0);
    }
  CHECK(signal_rate(0.0, 0.0, 0.0, p.signal) == 0.0);
  CHECK(signal_rate(0.0, 4.0, 2.0, p.signal) >= 0.0);
}

TEST_CASE("signal balance") {
  const SignalParams p = paper_sec4_preset().signal;
  // a_u y - gamma_u u + alpha (v - u) at sample values
  CHECK(signal_rate(100.0, 50.0, 80.0, p) ==
        doctest::Approx(2.0 * 50.0 - 0.01 * 100.0 + 1.0 * (80.0 - 100.0)).epsilon(1e-15));
  // equilibrium u* = (a_u y + alpha v) / (alpha + gamma_u)
  const double y = 3.0, v = 7.0;
  const double ustar = (p.a_u * y + p.alpha * v) / (p.alpha + p.gamma_u);
  CHECK(signal_rate(ustar, y, v, p) == doctest::Approx(0.0).scale(p.a_u * y));
}
