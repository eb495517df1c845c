// Copyright 2026 The cmaze Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cmaze/dynamics.h"

#include <algorithm>
#include <cmath>

namespace cmaze {

namespace {

// Friction terms of the angular coordinate at one radius.
struct AngularFriction {
  double damping = 0.0;   // viscous rate, 1/s
  double coulomb = 0.0;   // Coulomb deceleration, rad/s^2
  double stiction = 0.0;  // drive below which a slow marble sticks
  double v_eps = 0.0;

  AngularFriction(const FrictionParams& mu, double radius, double mass,
                  double stiction_velocity)
      : damping(mu.roll / (mass * radius * radius)),
        coulomb(kGravity * mu.slide / radius),
        stiction(mu.floss * kGravity / radius),
        v_eps(stiction_velocity) {}

  bool Sticks(double theta_dot, double drive) const {
    return std::abs(theta_dot) < v_eps && std::abs(drive) < stiction;
  }

  // Velocity update over `tau` with implicit damping; Coulomb friction
  // removes up to coulomb * tau of speed without reversing the motion.
  double Kick(double theta_dot, double drive, double tau) const {
    const double trial = (theta_dot + tau * drive) / (1.0 + tau * damping);
    const double loss = tau * coulomb;
    if (trial > loss) return trial - loss;
    if (trial < -loss) return trial + loss;
    return 0.0;
  }
};

void CheckFinite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw IntegrationError(std::string("non-finite ") + what);
  }
}

bool InGatePassage(const MazeGeometry& geom, RingIndex ring, double theta) {
  const double half = geom.GateHalfAngle(ring);
  for (double g : geom.gates[ring.value]) {
    if (std::abs(WrapAngle(theta - g)) <= half) return true;
  }
  return false;
}

// Keeps a marble that is inside a gate passage of `ring` between the
// passage side walls. Returns whether it touched one.
bool ConfineToSlot(const MazeGeometry& geom, RingIndex ring, double restitution,
                   double& theta, double& theta_dot) {
  const double gate = NearestGate(geom, ring, theta);
  const double half = geom.GateHalfAngle(ring);
  const double d = WrapAngle(theta - gate);
  if (std::abs(d) <= half) return false;
  const double side = d > 0 ? 1.0 : -1.0;
  theta = WrapAngle(gate + side * half);
  if (side * theta_dot > 0) theta_dot = -restitution * theta_dot;
  return true;
}

}  // namespace

double TangentialAccel(double beta, double gamma, double theta,
                       double ring_radius) {
  if (!(ring_radius > 0)) {
    throw std::domain_error("TangentialAccel: radius must be positive");
  }
  return kGravity / ring_radius *
         (std::sin(gamma) * std::cos(theta) - std::sin(beta) * std::sin(theta));
}

double RadialGravity(double beta, double gamma, double theta) {
  return kGravity *
         (std::sin(beta) * std::cos(theta) + std::sin(gamma) * std::sin(theta));
}

ReducedState StepReduced(const ReducedState& x, const Action& u,
                         const FrictionParams& mu, const PlantSpec& plant) {
  CheckFinite(x.beta + x.gamma + x.theta + x.theta_dot, "reduced state");
  const int n = plant.sim.substeps;
  const double h = plant.dt / n;
  const double radius = plant.geom.Radius(x.ring);
  const double mass = plant.geom.marble_mass;
  const Action cmd = u.Clamped();
  const AngularFriction friction(mu, radius, mass, plant.sim.stiction_velocity);

  // symmetric composition of two half-step semi-implicit Euler updates
  // (kick, drift, kick); a sticking marble stays frozen for the substep
  ReducedState next = x;
  PlatformAngles platform{x.beta, x.gamma};
  double drive =
      TangentialAccel(platform.beta, platform.gamma, next.theta, radius);
  for (int i = 0; i < n; ++i) {
    const PlatformAngles after = ServoStep(platform, cmd, h, plant.servo);
    const bool stuck = friction.Sticks(next.theta_dot, drive);
    if (stuck) {
      next.theta_dot = 0.0;
    } else {
      next.theta_dot = friction.Kick(next.theta_dot, drive, 0.5 * h);
      next.theta += h * next.theta_dot;
    }
    drive = TangentialAccel(after.beta, after.gamma, next.theta, radius);
    if (!stuck) next.theta_dot = friction.Kick(next.theta_dot, drive, 0.5 * h);
    platform = after;
  }
  next.beta = platform.beta;
  next.gamma = platform.gamma;
  CheckFinite(next.theta + next.theta_dot, "reduced state after step");
  next.theta = WrapAngle(next.theta);
  return next;
}

FullState StepFull(const FullState& x, const Action& u,
                   const FrictionParams& mu, const PlantSpec& plant) {
  CheckFinite(x.beta + x.gamma + x.theta + x.theta_dot + x.rho + x.rho_dot +
                  x.spin,
              "full state");
  const MazeGeometry& geom = plant.geom;
  const SimParams& sim = plant.sim;
  const int n = sim.substeps;
  const double h = plant.dt / n;
  const Action cmd = u.Clamped();
  const double spin_decay = std::exp(-mu.spin * h);

  FullState s = x;
  PlatformAngles platform{x.beta, x.gamma};
  for (int i = 0; i < n && !s.ring.IsGoal(); ++i) {
    const PlatformAngles after = ServoStep(platform, cmd, h, plant.servo);
    const AngularFriction friction(mu, s.rho, geom.marble_mass,
                                   sim.stiction_velocity);
    // The Coriolis term is carried by the angular momentum rho^2 theta_dot
    // across the drift instead of appearing here; that keeps radial impacts,
    // where rho_dot jumps, from leaking into theta_dot.
    const auto drive = [&](const PlatformAngles& p) {
      return TangentialAccel(p.beta, p.gamma, s.theta, s.rho) +
             sim.spin_coupling * s.spin;
    };
    const auto radial = [&](const PlatformAngles& p) {
      return s.rho * s.theta_dot * s.theta_dot +
             RadialGravity(p.beta, p.gamma, s.theta);
    };

    // kick, drift, kick as in the reduced engine, on both coordinates, with
    // wall contact resolved before the second kick
    const bool stuck = friction.Sticks(s.theta_dot, drive(platform));
    if (stuck) {
      s.theta_dot = 0.0;
    } else {
      s.theta_dot = friction.Kick(s.theta_dot, drive(platform), 0.5 * h);
    }
    const double radial_start = radial(platform);
    const double rho_prev = s.rho;
    const double momentum = rho_prev * rho_prev * s.theta_dot;
    s.rho_dot += 0.5 * h * radial_start;
    s.rho += h * s.rho_dot;
    const double rho_mid = 0.5 * (rho_prev + s.rho);
    s.theta = WrapAngle(s.theta + h * momentum / (rho_mid * rho_mid));

    // Channel walls. Inside a gate opening the wall is absent and the
    // marble moves along a radial slot bounded by the passage side walls.
    // Passages are one way: a marble that just came through still follows
    // the slot, but from inside the channel the outer wall is solid.
    //
    // Impacts slower than two substeps of radial acceleration are resting
    // contact; bouncing those would leave an O(h) radial velocity that
    // leaks into the Coriolis term.
    const double resting = 2.0 * h * std::abs(radial_start);
    const auto bounce = [&](double v) {
      return std::abs(v) <= resting ? 0.0 : -sim.wall_restitution * v;
    };
    int wall = 0;   // +1 outer, -1 inner
    bool side = false;
    // share of the substep spent in contact, from where the drift met the
    // wall
    double in_contact = 1.0;
    const auto contact_share = [&](double limit) {
      const double travel = s.rho - rho_prev;
      return travel != 0.0 ? std::clamp((s.rho - limit) / travel, 0.0, 1.0)
                           : 1.0;
    };
    const double lower = geom.MinRho(s.ring);
    const double upper = geom.MaxRho(s.ring);
    if (s.rho > upper) {
      double limit = upper;
      if (s.ring.value > 0 && rho_prev > upper) {
        const RingIndex outer{s.ring.value - 1};
        side = ConfineToSlot(geom, outer, sim.wall_restitution, s.theta,
                             s.theta_dot);
        limit = geom.CrossingRadius(outer);
      }
      if (s.rho >= limit) {
        in_contact = contact_share(limit);
        s.rho = limit;
        if (s.rho_dot > 0) s.rho_dot = bounce(s.rho_dot);
        wall = 1;
      }
    } else if (s.rho < lower) {
      if (rho_prev < lower) {
        side = ConfineToSlot(geom, s.ring, sim.wall_restitution, s.theta,
                             s.theta_dot);
      } else if (!InGatePassage(geom, s.ring, s.theta)) {
        in_contact = contact_share(lower);
        s.rho = lower;
        if (s.rho_dot < 0) s.rho_dot = bounce(s.rho_dot);
        wall = -1;
      }
    } else if (s.rho == upper) {
      wall = 1;
    } else if (s.rho == lower) {
      wall = -1;
    }

    if (!side) s.theta_dot = momentum / (s.rho * s.rho);

    // contact drags the spin toward rolling without slip
    if (wall != 0 || side) {
      const double target = -s.rho * s.theta_dot / geom.marble_radius;
      const double gain =
          -std::expm1(-sim.spin_contact_rate * in_contact * h);
      s.spin += gain * (target - s.spin);
    }
    s.spin *= spin_decay;

    if (!stuck) s.theta_dot = friction.Kick(s.theta_dot, drive(after), 0.5 * h);
    s.rho_dot += 0.5 * h * radial(after);
    // the wall absorbs whatever the second kick pushes into it
    if (wall * s.rho_dot > 0) s.rho_dot = 0.0;
    platform = after;

    if (s.rho < geom.CrossingRadius(s.ring)) {
      s.ring.value += 1;
    }
  }
  s.beta = platform.beta;
  s.gamma = platform.gamma;
  CheckFinite(s.theta_dot + s.rho + s.rho_dot + s.spin,
              "full state after step");
  return s;
}

ReducedState Observe(const FullState& x) {
  return {x.beta, x.gamma, x.theta, x.theta_dot, x.ring};
}

FullState Embed(const ReducedState& x, const MazeGeometry& geom) {
  FullState f;
  f.beta = x.beta;
  f.gamma = x.gamma;
  f.theta = x.theta;
  f.theta_dot = x.theta_dot;
  f.ring = x.ring;
  f.rho = x.ring.IsGoal() ? 0.0 : geom.Radius(x.ring);
  return f;
}

ReducedState InjectNoise(const ReducedState& x, const NoiseSigma& sigma,
                         std::mt19937_64& rng) {
  if (sigma.theta < 0 || sigma.theta_dot < 0) {
    throw std::invalid_argument("InjectNoise: negative sigma");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  ReducedState y = x;
  // draw both regardless of sigma so the stream position is independent of
  // the noise level
  const double n_theta = normal(rng);
  const double n_rate = normal(rng);
  if (sigma.theta > 0) y.theta = WrapAngle(x.theta + sigma.theta * n_theta);
  y.theta_dot = x.theta_dot + sigma.theta_dot * n_rate;
  return y;
}

ReducedState InjectNoise(const ReducedState& x, const NoiseSigma& sigma,
                         uint64_t seed) {
  std::mt19937_64 rng(seed);
  return InjectNoise(x, sigma, rng);
}

double EnergyProxy(const ReducedState& x, const MazeGeometry& geom) {
  const double r = geom.Radius(x.ring);
  const double m = geom.marble_mass;
  const double kinetic = 0.5 * m * r * r * x.theta_dot * x.theta_dot;
  const double potential =
      -m * kGravity * r *
      (std::sin(x.gamma) * std::sin(x.theta) +
       std::sin(x.beta) * std::cos(x.theta));
  return kinetic + potential;
}

void to_json(nlohmann::json& j, const SimParams& s) {
  j = nlohmann::json{{"substeps", s.substeps},
                     {"stiction_velocity", s.stiction_velocity},
                     {"wall_restitution", s.wall_restitution},
                     {"spin_coupling", s.spin_coupling},
                     {"spin_contact_rate", s.spin_contact_rate}};
}

void from_json(const nlohmann::json& j, SimParams& s) {
  s.substeps = j.value("substeps", s.substeps);
  s.stiction_velocity = j.value("stiction_velocity", s.stiction_velocity);
  s.wall_restitution = j.value("wall_restitution", s.wall_restitution);
  s.spin_coupling = j.value("spin_coupling", s.spin_coupling);
  s.spin_contact_rate = j.value("spin_contact_rate", s.spin_contact_rate);
}

void to_json(nlohmann::json& j, const NoiseSigma& s) {
  j = nlohmann::json{{"theta", s.theta}, {"theta_dot", s.theta_dot}};
}

void from_json(const nlohmann::json& j, NoiseSigma& s) {
  s.theta = j.value("theta", s.theta);
  s.theta_dot = j.value("theta_dot", s.theta_dot);
}

}  // namespace cmaze
