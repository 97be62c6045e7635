#include <doctest.h>

#include <cmath>

#include "magmap/field_sim.hpp"
#include "magmap/rng.hpp"

using namespace magmap;

namespace {

Environment uniform_env(const Vec3& background) {
  Environment env;
  env.background_field = background;
  return env;
}

}  // namespace

TEST_CASE("evaluate_field") {
  SUBCASE("uniform background with no dipoles") {
    const auto env = uniform_env(Vec3(20.0, 0.0, -45.0));
    CHECK(evaluate_field(env, Vec3(1.0, -0.5, -1.0))
              .isApprox(Vec3(20.0, 0.0, -45.0), 1e-15));
  }

  SUBCASE("1/r^3 falloff along the moment axis") {
    Environment env;
    env.dipoles.push_back({Vec3::Zero(), Vec3(0, 0, 100.0)});
    const Vec3 near = evaluate_field(env, Vec3(0, 0, -1.0));
    const Vec3 far = evaluate_field(env, Vec3(0, 0, -2.0));
    CHECK(far.z() == doctest::Approx(near.z() / 8.0).epsilon(1e-12));
  }

  SUBCASE("three dipoles sum term by term") {
    Environment env;
    env.background_field = Vec3(5.0, -3.0, 40.0);
    env.dipoles.push_back({Vec3(3.0, 0.0, 1.0), Vec3(200.0, 0.0, -50.0)});
    env.dipoles.push_back({Vec3(-3.0, 2.0, 0.5), Vec3(0.0, 150.0, 80.0)});
    env.dipoles.push_back({Vec3(0.0, -2.5, 1.5), Vec3(-90.0, 60.0, 120.0)});
    const Vec3 r(1.0, 1.0, -1.0);

    // Direct superposition computed without the library path.
    Vec3 expected = env.background_field;
    for (const auto& d : env.dipoles) {
      const Vec3 rel = r - d.position;
      const double dist = rel.norm();
      const Vec3 rhat = rel / dist;
      expected += 0.1 *
                  (3.0 * d.moment.dot(rhat) * rhat - d.moment) /
                  std::pow(dist, 3.0);
    }
    CHECK(evaluate_field(env, r).isApprox(expected, 1e-14));
  }

  SUBCASE("query at a dipole position is singular") {
    Environment env;
    env.dipoles.push_back({Vec3(1, 1, 1), Vec3(0, 0, 10)});
    CHECK_THROWS_AS(evaluate_field(env, Vec3(1, 1, 1)), FieldSingularityError);
  }
}

TEST_CASE("lawnmower trajectory") {
  SUBCASE("single altitude covers 13 lanes plus diagonals") {
    const auto traj = lawnmower_trajectory({-1.5}, 4.0, 0.25, 1.9, 200.0);
    REQUIRE(!traj.empty());
    CHECK(traj.front().position.head<2>().isZero(1e-12));
    CHECK(traj.back().position.head<2>().norm() < 1e-6);
    // Every lane y = -1.5 : 0.25 : 1.5 must be visited.
    for (int lane = 0; lane <= 12; ++lane) {
      const double y = -1.5 + 0.25 * lane;
      bool seen = false;
      for (const auto& p : traj) {
        if (std::abs(p.position.y() - y) < 1e-6 &&
            std::abs(p.position.x()) > 1.9) {
          seen = true;
          break;
        }
      }
      CHECK_MESSAGE(seen, "lane y=", y);
    }
  }

  SUBCASE("multi-altitude visits every slice and stays in bounds") {
    const std::vector<double> alts{-0.5, -0.75, -1.0, -1.25};  // Lower Four
    const auto traj = lawnmower_trajectory(alts, 4.0, 0.25, 1.9, 50.0);
    const Box ws = default_workspace();
    for (const auto& p : traj) {
      CHECK(ws.contains(p.position, 1e-9));
    }
    for (const double a : alts) {
      bool seen = false;
      for (const auto& p : traj) {
        seen |= std::abs(p.position.z() - a) < 1e-9;
      }
      CHECK(seen);
    }
  }

  SUBCASE("speed limit holds between consecutive samples") {
    const auto traj = lawnmower_trajectory({-1.5}, 4.0, 0.25, 1.9, 200.0);
    for (std::size_t i = 1; i < traj.size(); ++i) {
      const double dt = traj[i].t - traj[i - 1].t;
      CHECK(dt > 0.0);
      const double v = (traj[i].position - traj[i - 1].position).norm() / dt;
      CHECK(v <= 1.9 + 1e-9);
    }
  }

  SUBCASE("rejects bad inputs") {
    CHECK_THROWS_AS(lawnmower_trajectory({}, 4.0, 0.25, 1.9, 200.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(lawnmower_trajectory({-1.5}, 4.0, -0.25, 1.9, 200.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(lawnmower_trajectory({-1.5}, 10.0, 0.25, 1.9, 200.0),
                    std::invalid_argument);  // stride beyond workspace
    CHECK_THROWS_AS(lawnmower_trajectory({-5.0}, 4.0, 0.25, 1.9, 200.0),
                    std::invalid_argument);  // altitude beyond workspace
  }
}

TEST_CASE("simulate_flight") {
  const auto env = uniform_env(Vec3(18.0, -4.0, -47.0));
  const auto traj = lawnmower_trajectory({-1.5}, 4.0, 0.5, 1.9, 20.0);

  SUBCASE("zero corruption reproduces the rotated field exactly") {
    const auto log = simulate_flight(env, traj, CorruptionProfile{}, 7);
    REQUIRE(log.mags.size() == traj.size());
    for (std::size_t i = 0; i < log.mags.size(); ++i) {
      const Vec3 expected =
          traj[i].attitude.conjugate() * evaluate_field(env, traj[i].position);
      CHECK((log.mags[i].field_body - expected).norm() < 1e-12);
    }
  }

  SUBCASE("deterministic for a fixed seed") {
    CorruptionProfile profile;
    profile.gaussian_noise_sd = 0.4;
    profile.spurious_rate = 0.05;
    profile.spurious_magnitude = 3.0;
    const auto a = simulate_flight(env, traj, profile, 42);
    const auto b = simulate_flight(env, traj, profile, 42);
    const auto c = simulate_flight(env, traj, profile, 43);
    REQUIRE(a.mags.size() == b.mags.size());
    bool identical = true;
    bool differs_from_c = false;
    for (std::size_t i = 0; i < a.mags.size(); ++i) {
      identical &= a.mags[i].field_body == b.mags[i].field_body;
      differs_from_c |= a.mags[i].field_body != c.mags[i].field_body;
    }
    CHECK(identical);
    CHECK(differs_from_c);
  }

  SUBCASE("spurious events hit one axis at the configured rate") {
    CorruptionProfile profile;
    profile.spurious_rate = 0.05;
    profile.spurious_magnitude = 3.0;
    // Long stationary log for statistics.
    std::vector<PoseSample> still(10000);
    for (std::size_t i = 0; i < still.size(); ++i) {
      still[i].t = static_cast<double>(i) / 200.0;
      still[i].position = Vec3(0.5, 0.5, -1.0);
    }
    const auto log = simulate_flight(env, still, profile, 99);
    const Vec3 clean =
        still[0].attitude.conjugate() * evaluate_field(env, still[0].position);
    int perturbed = 0;
    for (const auto& m : log.mags) {
      int touched = 0;
      for (int axis = 0; axis < 3; ++axis) {
        const double d = std::abs(m.field_body(axis) - clean(axis));
        if (d > 1e-9) {
          ++touched;
          CHECK(d == doctest::Approx(3.0).epsilon(1e-12));
        }
      }
      CHECK(touched <= 1);  // exactly one axis per event
      perturbed += touched;
    }
    // Binomial(10^4, 0.05): mean 500, sd ~21.8; allow a 3 sigma band.
    CHECK(perturbed > 500 - 66);
    CHECK(perturbed < 500 + 66);
  }

  SUBCASE("bias switch shifts the measurement stream mid-flight") {
    CorruptionProfile profile;
    profile.bias_switch = BiasSwitch{30.0, Vec3(0.0, 0.0, 1.8)};
    std::vector<PoseSample> still(100);
    for (std::size_t i = 0; i < still.size(); ++i) {
      still[i].t = static_cast<double>(i);  // 1 Hz, switch at sample 30
      still[i].position = Vec3(0.0, 0.0, -1.0);
    }
    const auto log = simulate_flight(env, still, profile, 5);
    const Vec3 clean =
        still[0].attitude.conjugate() * evaluate_field(env, still[0].position);
    for (std::size_t i = 0; i < log.mags.size(); ++i) {
      const Vec3 delta = log.mags[i].field_body - clean;
      if (still[i].t < 30.0) {
        CHECK(delta.norm() < 1e-12);
      } else {
        CHECK((delta - Vec3(0, 0, 1.8)).norm() < 1e-12);
      }
    }
  }

  SUBCASE("attitude perturbation exercises the rotation path") {
    auto jittered = traj;
    perturb_attitudes(jittered, 0.1, 11);
    const auto log = simulate_flight(env, jittered, CorruptionProfile{}, 7);
    for (std::size_t i = 0; i < log.mags.size(); ++i) {
      CHECK(std::abs(jittered[i].attitude.norm() - 1.0) < 1e-9);
      const Vec3 expected = jittered[i].attitude.conjugate() *
                            evaluate_field(env, jittered[i].position);
      CHECK((log.mags[i].field_body - expected).norm() < 1e-12);
    }
  }
}
