#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "condyn/envs.hpp"
#include "condyn/errors.hpp"
#include "helpers.hpp"

using namespace condyn;
using namespace condyn::env;
using diff::RngStream;
using diff::Tensor;
using testutil::tensor1;

TEST_CASE("environment registry") {
  EnvSpec pm = make_env("pointmass2d");
  CHECK(pm.state_dim == 6);
  CHECK(pm.action_dim == 2);
  CHECK(pm.kind == ActionKind::Continuous);
  CHECK(pm.horizon == 50);
  CHECK(pm.dt == 0.05);

  EnvSpec pe = make_env("pendulum");
  CHECK(pe.state_dim == 2);
  CHECK(pe.action_dim == 1);
  CHECK(pe.horizon == 100);

  EnvSpec gn = make_env("gridnav");
  CHECK(gn.state_dim == 4);
  CHECK(gn.action_dim == 4);
  CHECK(gn.kind == ActionKind::Discrete);
  CHECK(gn.horizon == 30);

  CHECK_THROWS_AS((void)make_env("mountaincar"), ConfigError);
}

TEST_CASE("point mass step matches hand-computed values") {
  EnvSpec spec = make_env("pointmass2d");
  EnvState s{{0, 0, 0, 0, 1, 1}};
  StepResult r = env_step(spec, s, tensor1({1.0, 0.0}));
  CHECK(r.state.v[2] == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(r.state.v[3] == 0.0);
  CHECK(r.state.v[0] == doctest::Approx(0.0025).epsilon(1e-15));
  CHECK(r.state.v[1] == 0.0);
  CHECK(r.state.v[4] == 1.0);
  CHECK(r.state.v[5] == 1.0);
  CHECK(r.reward == doctest::Approx(-2.00500625).epsilon(1e-12));
  CHECK_FALSE(r.done);

  // Actions are clipped before they touch dynamics or reward.
  StepResult rc = env_step(spec, s, tensor1({7.0, 0.0}));
  CHECK(rc.state.v[0] == r.state.v[0]);
  CHECK(rc.reward == r.reward);
}

TEST_CASE("pendulum step, velocity clip, and angle wrap") {
  EnvSpec spec = make_env("pendulum");
  const double pi = std::numbers::pi;

  EnvState s{{pi / 2.0, 0.0}};
  StepResult r = env_step(spec, s, tensor1({0.0}));
  CHECK(r.state.v[1] == doctest::Approx(0.75).epsilon(1e-15));
  const double th2 = pi / 2.0 + 0.05 * 0.75;
  CHECK(r.state.v[0] == doctest::Approx(th2).epsilon(1e-15));
  CHECK(r.reward ==
        doctest::Approx(-(th2 * th2 + 0.1 * 0.75 * 0.75)).epsilon(1e-12));

  // Angular velocity saturates at +/-8.
  StepResult rv = env_step(spec, EnvState{{pi / 2.0, 7.9}}, tensor1({1.0}));
  CHECK(rv.state.v[1] == 8.0);

  // Angle stays in (-pi, pi].
  StepResult rw = env_step(spec, EnvState{{pi - 0.01, 8.0}}, tensor1({0.0}));
  CHECK(rw.state.v[0] <= pi);
  CHECK(rw.state.v[0] > -pi);
  CHECK(rw.state.v[0] < 0.0);  // wrapped through the top

  // Torque is twice the clipped action.
  StepResult rt1 = env_step(spec, s, tensor1({-3.0}));
  StepResult rt2 = env_step(spec, s, tensor1({-1.0}));
  CHECK(rt1.state.v[1] == rt2.state.v[1]);
}

TEST_CASE("grid navigation moves, walls, and termination") {
  EnvSpec spec = make_env("gridnav");
  EnvState s{{1, 1, 3, 1}};
  StepResult r = env_step(spec, s, tensor1({0.0}));  // +x
  CHECK(r.state.v[0] == 2.0);
  CHECK(r.reward == -0.01);
  CHECK_FALSE(r.done);

  StepResult r2 = env_step(spec, r.state, tensor1({0.0}));
  CHECK(r2.state.v[0] == 3.0);
  CHECK(r2.reward == 1.0);
  CHECK(r2.done);

  // Walls clip movement.
  StepResult rw = env_step(spec, EnvState{{4, 0, 0, 4}}, tensor1({0.0}));
  CHECK(rw.state.v[0] == 4.0);
  StepResult rd = env_step(spec, EnvState{{4, 0, 0, 4}}, tensor1({3.0}));
  CHECK(rd.state.v[1] == 0.0);

  CHECK_THROWS_AS((void)env_step(spec, s, tensor1({4.0})), ConfigError);
}

TEST_CASE("resets stay inside the documented distributions") {
  const double pi = std::numbers::pi;
  EnvSpec pm = make_env("pointmass2d");
  EnvSpec pe = make_env("pendulum");
  EnvSpec gn = make_env("gridnav");
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RngStream r1(seed, "reset-test");
    EnvState a = env_reset(pm, r1);
    CHECK(std::fabs(a.v[0]) <= 1.0);
    CHECK(std::fabs(a.v[1]) <= 1.0);
    CHECK(a.v[2] == 0.0);
    CHECK(a.v[3] == 0.0);
    CHECK(std::fabs(a.v[4]) <= 0.5);
    CHECK(std::fabs(a.v[5]) <= 0.5);

    RngStream r2(seed, "reset-test");
    EnvState b = env_reset(pe, r2);
    CHECK(b.v[0] > -pi);
    CHECK(b.v[0] <= pi);
    CHECK(std::fabs(b.v[1]) <= 1.0);

    RngStream r3(seed, "reset-test");
    EnvState c = env_reset(gn, r3);
    for (double v : c.v) {
      CHECK(v >= 0.0);
      CHECK(v <= 4.0);
      CHECK(v == std::floor(v));
    }
    CHECK((c.v[0] != c.v[2] || c.v[1] != c.v[3]));
  }

  // Identical stream state gives identical resets.
  RngStream ra(5, "same");
  RngStream rb(5, "same");
  EnvState sa = env_reset(pm, ra);
  EnvState sb = env_reset(pm, rb);
  CHECK(sa.v == sb.v);
}

TEST_CASE("rendering places agent and goal cells with history stacking") {
  EnvSpec spec = make_env("pointmass2d");
  EnvState s0{{0, 0, 0, 0, 1, 1}};
  std::vector<EnvState> hist = {s0};
  Tensor obs = render_observation(spec, hist);
  REQUIRE(obs.shape() == diff::Shape{4, 16, 16});
  // Coordinate c maps to cell floor((c+1.5)/3*16) clamped to [0,15]:
  // agent at the origin -> (8,8) with 1.0; goal (1,1) -> (13,13) with 0.5.
  for (std::size_t f = 0; f < 4; ++f) {
    CHECK(obs[(f * 16 + 8) * 16 + 8] == 1.0);
    CHECK(obs[(f * 16 + 13) * 16 + 13] == 0.5);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) sum += obs[i];
  CHECK(sum == doctest::Approx(4 * 1.5));

  // With a two-state history the newest frame differs, older ones repeat
  // the earliest state.
  EnvState s1{{-1.4, -1.4, 0, 0, 1, 1}};  // cell (0,0)
  std::vector<EnvState> hist2 = {s0, s1};
  Tensor obs2 = render_observation(spec, hist2);
  for (std::size_t f = 0; f < 3; ++f) {
    CHECK(obs2[(f * 16 + 8) * 16 + 8] == 1.0);
  }
  CHECK(obs2[(3 * 16 + 0) * 16 + 0] == 1.0);
  CHECK(obs2[(3 * 16 + 8) * 16 + 8] == 0.0);

  // Long histories keep only the most recent four states.
  std::vector<EnvState> hist5 = {s1, s1, s1, s0, s0};
  Tensor obs5 = render_observation(spec, hist5);
  CHECK(obs5[(0 * 16 + 0) * 16 + 0] == 1.0);   // oldest kept = s1
  CHECK(obs5[(1 * 16 + 0) * 16 + 0] == 1.0);   // s1
  CHECK(obs5[(2 * 16 + 8) * 16 + 8] == 1.0);   // s0
  CHECK(obs5[(3 * 16 + 8) * 16 + 8] == 1.0);   // s0

  // Agent overwrites the goal when they share a cell.
  EnvState on_goal{{0.2, 0.2, 0, 0, 0.2, 0.2}};
  std::vector<EnvState> hist3 = {on_goal};
  Tensor obs3 = render_observation(spec, hist3);
  double total = 0.0;
  for (std::size_t i = 0; i < 16 * 16; ++i) total += obs3[i];
  CHECK(total == 1.0);
}

TEST_CASE("out-of-range coordinates clamp to edge cells") {
  EnvSpec spec = make_env("pendulum");
  // Bob position (sin, cos) always lies in [-1,1]^2; force the clamp path
  // through the point mass instead.
  EnvSpec pm = make_env("pointmass2d");
  EnvState far{{9.0, -9.0, 0, 0, 0, 0}};
  std::vector<EnvState> hist = {far};
  Tensor obs = render_observation(pm, hist);
  CHECK(obs[(3 * 16 + 0) * 16 + 15] == 1.0);
  (void)spec;
}

TEST_CASE("point mass expert closes most of the distance to the goal") {
  EnvSpec spec = make_env("pointmass2d");
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    RngStream rng(seed, "pm-expert");
    EnvState s = env_reset(spec, rng);
    const double d0 = std::hypot(s.v[0] - s.v[4], s.v[1] - s.v[5]);
    for (int t = 0; t < 50; ++t) {
      s = env_step(spec, s, expert_action(spec, s)).state;
    }
    const double d1 = std::hypot(s.v[0] - s.v[4], s.v[1] - s.v[5]);
    if (d0 > 0.3) {
      CHECK(d1 < 0.5 * d0);
    } else {
      CHECK(d1 < 0.3);
    }
  }
}

TEST_CASE("pendulum expert pumps energy and visits the upright region") {
  EnvSpec spec = make_env("pendulum");
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    RngStream rng(seed, "pend-expert");
    EnvState s = env_reset(spec, rng);
    double min_abs_th = std::fabs(s.v[0]);
    double max_energy = -1e9;
    for (int t = 0; t < 100; ++t) {
      s = env_step(spec, s, expert_action(spec, s)).state;
      min_abs_th = std::min(min_abs_th, std::fabs(s.v[0]));
      const double e = s.v[1] * s.v[1] / 6.0 + 5.0 * std::cos(s.v[0]);
      max_energy = std::max(max_energy, e);
    }
    CHECK(min_abs_th < 0.3);
    CHECK(max_energy > 4.0);
  }
}

TEST_CASE("grid navigation has no scripted expert") {
  EnvSpec spec = make_env("gridnav");
  CHECK_THROWS_AS((void)expert_action(spec, EnvState{{0, 0, 1, 1}}),
                  ConfigError);
}

TEST_CASE("discounted return") {
  std::vector<double> r = {1.0, 1.0, 1.0};
  CHECK(discounted_return(r, 0.5) == doctest::Approx(1.75).epsilon(1e-15));
  CHECK(discounted_return(r, 0.0) == 1.0);
  std::vector<double> one = {3.5};
  CHECK(discounted_return(one, 0.9) == 3.5);
  CHECK_THROWS_AS((void)discounted_return(r, 1.0), ConfigError);
  CHECK_THROWS_AS((void)discounted_return(r, -0.1), ConfigError);
}

TEST_CASE("action encodings for model input") {
  EnvSpec pm = make_env("pointmass2d");
  Tensor cont = action_input(pm, tensor1({2.0, -0.3}));
  CHECK(cont[0] == 1.0);
  CHECK(cont[1] == doctest::Approx(-0.3));

  EnvSpec gn = make_env("gridnav");
  Tensor oh = action_input(gn, tensor1({2.0}));
  REQUIRE(oh.size() == 4);
  CHECK(oh[0] == 0.0);
  CHECK(oh[1] == 0.0);
  CHECK(oh[2] == 1.0);
  CHECK(oh[3] == 0.0);
  CHECK_THROWS_AS((void)action_input(gn, tensor1({4.0})), ConfigError);
  CHECK(action_input_dim(pm) == 2);
  CHECK(action_input_dim(gn) == 4);
}

TEST_CASE("state tensor mirrors the state vector") {
  EnvState s{{1.5, -2.5, 0.25}};
  Tensor t = state_tensor(s);
  REQUIRE(t.size() == 3);
  CHECK(t[0] == 1.5);
  CHECK(t[1] == -2.5);
  CHECK(t[2] == 0.25);
}
