#include "condyn/envs.hpp"

#include <algorithm>
#include <cmath>

#include "condyn/errors.hpp"

namespace condyn::env {

namespace {

constexpr double kPi = 3.14159265358979323846;

double clip(double x, double lo, double hi) {
  return x < lo ? lo : (x > hi ? hi : x);
}

// Wrap to (-pi, pi].
double wrap_angle(double x) {
  double y = x - 2.0 * kPi * std::floor((x + kPi) / (2.0 * kPi));
  if (y <= -kPi) y += 2.0 * kPi;
  return y;
}

void check_state(const EnvSpec& spec, const EnvState& s) {
  if (s.v.size() != spec.state_dim)
    throw ShapeError(spec.name + ": state has " + std::to_string(s.v.size()) +
                     " components, expected " + std::to_string(spec.state_dim));
}

}  // namespace

EnvSpec make_env(const std::string& name) {
  if (name == "pointmass2d")
    return EnvSpec{EnvId::PointMass2D, name, 6, 2, ActionKind::Continuous, 50, 0.05};
  if (name == "pendulum")
    return EnvSpec{EnvId::PendulumSwingUp, name, 2, 1, ActionKind::Continuous, 100, 0.05};
  if (name == "gridnav")
    return EnvSpec{EnvId::DiscreteGridNav, name, 4, 4, ActionKind::Discrete, 30, 1.0};
  throw ConfigError("unknown environment '" + name + "'");
}

EnvState env_reset(const EnvSpec& spec, RngStream& rng) {
  switch (spec.id) {
    case EnvId::PointMass2D: {
      // Goals stay central so the clipped controller can reach them in time.
      double px = rng.uniform(-1.0, 1.0), py = rng.uniform(-1.0, 1.0);
      double gx = rng.uniform(-0.5, 0.5), gy = rng.uniform(-0.5, 0.5);
      return EnvState{{px, py, 0.0, 0.0, gx, gy}};
    }
    case EnvId::PendulumSwingUp: {
      double th = rng.uniform(-kPi, kPi);
      double thd = rng.uniform(-1.0, 1.0);
      return EnvState{{wrap_angle(th), thd}};
    }
    case EnvId::DiscreteGridNav: {
      double ax = static_cast<double>(rng.uniform_index(5));
      double ay = static_cast<double>(rng.uniform_index(5));
      double gx, gy;
      do {
        gx = static_cast<double>(rng.uniform_index(5));
        gy = static_cast<double>(rng.uniform_index(5));
      } while (gx == ax && gy == ay);
      return EnvState{{ax, ay, gx, gy}};
    }
  }
  throw ConfigError("unreachable env id");
}

StepResult env_step(const EnvSpec& spec, const EnvState& s, const Tensor& action) {
  check_state(spec, s);
  switch (spec.id) {
    case EnvId::PointMass2D: {
      if (action.size() != 2)
        throw ShapeError("pointmass2d: action shape " + diff::shape_str(action.shape()));
      double ax = clip(action[0], -1.0, 1.0);
      double ay = clip(action[1], -1.0, 1.0);
      double dt = spec.dt;
      double vx = s.v[2] + dt * ax, vy = s.v[3] + dt * ay;
      double px = s.v[0] + dt * vx, py = s.v[1] + dt * vy;
      double gx = s.v[4], gy = s.v[5];
      double dx = px - gx, dy = py - gy;
      double reward = -(dx * dx + dy * dy) - 0.01 * (ax * ax + ay * ay);
      return StepResult{EnvState{{px, py, vx, vy, gx, gy}}, reward, false};
    }
    case EnvId::PendulumSwingUp: {
      if (action.size() != 1)
        throw ShapeError("pendulum: action shape " + diff::shape_str(action.shape()));
      double u = 2.0 * clip(action[0], -1.0, 1.0);  // torque in [-2,2]
      double th = s.v[0], thd = s.v[1];
      double dt = spec.dt;
      double acc = 15.0 * std::sin(th) + 3.0 * u;  // 3g/(2l) sin th + 3/(m l^2) u
      double thd2 = clip(thd + dt * acc, -8.0, 8.0);
      double th2 = wrap_angle(th + dt * thd2);
      double reward = -(th2 * th2 + 0.1 * thd2 * thd2 + 0.001 * u * u);
      return StepResult{EnvState{{th2, thd2}}, reward, false};
    }
    case EnvId::DiscreteGridNav: {
      if (action.size() != 1)
        throw ShapeError("gridnav: action shape " + diff::shape_str(action.shape()));
      int a = static_cast<int>(action[0]);
      if (a < 0 || a > 3)
        throw ConfigError("gridnav: action index " + std::to_string(a));
      double ax = s.v[0], ay = s.v[1];
      if (a == 0) ax = clip(ax + 1.0, 0.0, 4.0);
      if (a == 1) ax = clip(ax - 1.0, 0.0, 4.0);
      if (a == 2) ay = clip(ay + 1.0, 0.0, 4.0);
      if (a == 3) ay = clip(ay - 1.0, 0.0, 4.0);
      bool at_goal = (ax == s.v[2] && ay == s.v[3]);
      double reward = at_goal ? 1.0 : -0.01;
      return StepResult{EnvState{{ax, ay, s.v[2], s.v[3]}}, reward, at_goal};
    }
  }
  throw ConfigError("unreachable env id");
}

namespace {

int cell_of(double coord) {
  int c = static_cast<int>(std::floor((coord + 1.5) / 3.0 * 16.0));
  return c < 0 ? 0 : (c > 15 ? 15 : c);
}

void put(Tensor& frames, std::size_t frame, double cx, double cy, double value) {
  std::size_t col = static_cast<std::size_t>(cell_of(cx));
  std::size_t row = static_cast<std::size_t>(cell_of(cy));
  frames[(frame * 16 + row) * 16 + col] = value;
}

void render_frame(const EnvSpec& spec, const EnvState& s, Tensor& frames,
                  std::size_t frame) {
  switch (spec.id) {
    case EnvId::PointMass2D:
      put(frames, frame, s.v[4], s.v[5], 0.5);  // goal
      put(frames, frame, s.v[0], s.v[1], 1.0);  // agent overwrites
      return;
    case EnvId::PendulumSwingUp:
      put(frames, frame, 0.0, 1.0, 0.5);  // upright set point
      put(frames, frame, std::sin(s.v[0]), std::cos(s.v[0]), 1.0);
      return;
    case EnvId::DiscreteGridNav:
      put(frames, frame, (s.v[2] - 2.0) / 2.0, (s.v[3] - 2.0) / 2.0, 0.5);
      put(frames, frame, (s.v[0] - 2.0) / 2.0, (s.v[1] - 2.0) / 2.0, 1.0);
      return;
  }
}

}  // namespace

Tensor render_observation(const EnvSpec& spec, std::span<const EnvState> history) {
  if (history.empty()) throw ShapeError("render_observation: empty history");
  Tensor frames(diff::Shape{4, 16, 16});
  std::size_t n = history.size();
  std::size_t first = n > 4 ? n - 4 : 0;
  std::size_t count = n - first;
  // Left-pad by repeating the earliest available frame.
  for (std::size_t f = 0; f < 4; ++f) {
    std::size_t idx = f < 4 - count ? first : first + (f - (4 - count));
    check_state(spec, history[idx]);
    render_frame(spec, history[idx], frames, f);
  }
  return frames;
}

Tensor expert_action(const EnvSpec& spec, const EnvState& s) {
  check_state(spec, s);
  switch (spec.id) {
    case EnvId::PointMass2D: {
      double ax = clip(2.0 * (s.v[4] - s.v[0]) - 1.0 * s.v[2], -1.0, 1.0);
      double ay = clip(2.0 * (s.v[5] - s.v[1]) - 1.0 * s.v[3], -1.0, 1.0);
      return Tensor::vec({ax, ay});
    }
    case EnvId::PendulumSwingUp: {
      double th = s.v[0], thd = s.v[1];
      if (std::fabs(th) < 0.6)
        return Tensor::vec({clip(-2.0 * th - 0.5 * thd, -1.0, 1.0)});
      // Energy shaping: pump toward the upright energy level.
      double energy = 0.5 * (1.0 / 3.0) * thd * thd + 5.0 * std::cos(th);
      double target = 5.0;
      double sgn = thd >= 0.0 ? 1.0 : -1.0;
      return Tensor::vec({clip(0.6 * (target - energy) * sgn, -1.0, 1.0)});
    }
    case EnvId::DiscreteGridNav:
      throw ConfigError("gridnav has no scripted expert");
  }
  throw ConfigError("unreachable env id");
}

double discounted_return(std::span<const double> rewards, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw ConfigError("discounted_return: gamma " + std::to_string(gamma) +
                      " outside [0,1)");
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i > 0; --i)
    acc = rewards[i - 1] + gamma * acc;
  return acc;
}

Tensor state_tensor(const EnvState& s) {
  return Tensor::vec(std::vector<double>(s.v.begin(), s.v.end()));
}

Tensor action_input(const EnvSpec& spec, const Tensor& action) {
  if (spec.kind == ActionKind::Continuous) {
    Tensor out(diff::Shape{spec.action_dim});
    if (action.size() != spec.action_dim)
      throw ShapeError(spec.name + ": action shape " + diff::shape_str(action.shape()));
    for (std::size_t i = 0; i < spec.action_dim; ++i)
      out[i] = clip(action[i], -1.0, 1.0);
    return out;
  }
  Tensor out(diff::Shape{spec.action_dim});
  int idx = static_cast<int>(action.item());
  if (idx < 0 || static_cast<std::size_t>(idx) >= spec.action_dim)
    throw ConfigError(spec.name + ": action index " + std::to_string(idx));
  out[static_cast<std::size_t>(idx)] = 1.0;
  return out;
}

std::size_t action_input_dim(const EnvSpec& spec) { return spec.action_dim; }

}  // namespace condyn::env
