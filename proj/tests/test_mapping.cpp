#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "magmap/mapping.hpp"
#include "magmap/rng.hpp"
#include "test_support.hpp"

using namespace magmap;
using namespace magmap::testing;

namespace {

// Smooth synthetic observations over the workspace for map building.
ObservationSet smooth_observations(Eigen::Index n, std::uint64_t seed,
                                   double noise_sd = 0.05) {
  Rng rng(seed);
  ObservationSet obs;
  obs.locations = random_points(rng, n, default_workspace());
  obs.measurements.resize(n, 3);
  obs.timestamps.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3 r = obs.locations.row(i);
    obs.measurements(i, 0) = 20.0 + 2.0 * std::sin(r.x()) + rng.normal(0, noise_sd);
    obs.measurements(i, 1) = -3.0 + 1.5 * std::cos(r.y() + r.z()) + rng.normal(0, noise_sd);
    obs.measurements(i, 2) = -45.0 + 2.5 * std::sin(r.z() - 0.3 * r.x()) + rng.normal(0, noise_sd);
    obs.timestamps(i) = static_cast<double>(i) * 0.5;
  }
  return obs;
}

}  // namespace

TEST_CASE("generate_grid reproduces the published point counts") {
  SUBCASE("default spacing gives 504 lattice points plus 7 takeoff") {
    const auto grid = generate_grid(GridSpec{});
    CHECK(grid.rows() == 511);
  }

  SUBCASE("uniform 0.2 m") {
    CHECK(generate_grid(GridSpec::uniform(0.2)).rows() == 3031);
  }

  SUBCASE("17-value spacing sweep") {
    const Eigen::Index expected[17] = {3031, 1775, 931, 655, 447, 259, 259,
                                       199,  133,  112, 97,  97,  79,  67,
                                       47,   47,   47};
    for (int i = 0; i < 17; ++i) {
      const double s = 0.2 + 0.05 * i;
      CHECK(generate_grid(GridSpec::uniform(s)).rows() == expected[i]);
    }
  }

  SUBCASE("S = 0.45 samples only four z levels") {
    const auto grid = generate_grid(GridSpec::uniform(0.45, default_workspace(), 0));
    std::vector<double> levels;
    for (Eigen::Index i = 0; i < grid.rows(); ++i) {
      if (std::none_of(levels.begin(), levels.end(), [&](double z) {
            return std::abs(z - grid(i, 2)) < 1e-12;
          })) {
        levels.push_back(grid(i, 2));
      }
    }
    const std::vector<double> expected{-2.25, -1.8, -1.35, -0.9};
    REQUIRE(levels.size() == 4);
    for (int i = 0; i < 4; ++i) {
      CHECK(levels[static_cast<std::size_t>(i)] ==
            doctest::Approx(expected[static_cast<std::size_t>(i)]).epsilon(1e-12));
    }
  }

  SUBCASE("order is x-fastest then y then z, takeoff column last") {
    const auto grid = generate_grid(GridSpec{});
    CHECK(grid(0, 0) == -2.0);
    CHECK(grid(1, 0) == -1.5);  // x advances first
    CHECK(grid(0, 1) == grid(1, 1));
    CHECK(grid(0, 2) == grid(1, 2));
    CHECK(grid(9, 1) == -1.0);  // then y
    // takeoff column above the origin, ground first
    CHECK(grid(504, 0) == 0.0);
    CHECK(grid(504, 2) == 0.0);
    CHECK(grid(510, 2) == doctest::Approx(-0.5));
  }

  SUBCASE("spacing larger than an axis span fails") {
    CHECK_THROWS_AS(generate_grid(GridSpec::uniform(2.0)),
                    std::invalid_argument);
  }
}

TEST_CASE("build_intermediate") {
  const auto obs = smooth_observations(120, 8);

  SUBCASE("kind follows the source flight count") {
    const auto multi = build_intermediate(obs, {"t6_00", "t6_01"});
    CHECK(multi.kind == MapKind::kIntermediate);
    const auto single = build_intermediate(obs, {"t6_21"});
    CHECK(single.kind == MapKind::kSingleFlight);
  }

  SUBCASE("components share the training locations") {
    const auto map = build_intermediate(obs, {"a", "b"});
    for (const auto& c : map.components) {
      CHECK(c.train_locations() == obs.locations);
    }
  }

  SUBCASE("too few observations fail") {
    ObservationSet tiny;
    tiny.locations.resize(3, 3);
    tiny.locations.setRandom();
    tiny.measurements.resize(3, 3);
    tiny.measurements.setRandom();
    tiny.timestamps.resize(3);
    tiny.timestamps.setZero();
    CHECK_THROWS_AS(build_intermediate(tiny, {"x"}), std::invalid_argument);
  }
}

TEST_CASE("build_compromise") {
  const auto obs = smooth_observations(150, 21);
  const auto inter = build_intermediate(obs, {"a", "b"});

  SUBCASE("hyperparameters and offsets are copied, never refit") {
    const auto comp = build_compromise(inter, GridSpec{});
    for (int c = 0; c < 3; ++c) {
      const auto& ch = comp.components[static_cast<std::size_t>(c)];
      const auto& ih = inter.components[static_cast<std::size_t>(c)];
      CHECK(ch.hyperparams().sigma_f == ih.hyperparams().sigma_f);
      CHECK(ch.hyperparams().length_scale == ih.hyperparams().length_scale);
      CHECK(ch.hyperparams().sigma_n == ih.hyperparams().sigma_n);
      CHECK(ch.mean_offset() == ih.mean_offset());
    }
    CHECK(comp.kind == MapKind::kCompromise);
    CHECK(comp.inference_size() == 511);
  }

  SUBCASE("self-grid round trip stays within the noise scale") {
    const auto comp = build_compromise(inter, obs.locations);
    const auto from_inter = predict_vector(inter, obs.locations);
    const auto from_comp = predict_vector(comp, obs.locations);
    for (int c = 0; c < 3; ++c) {
      const double sn = inter.components[static_cast<std::size_t>(c)]
                            .hyperparams()
                            .sigma_n;
      const double worst = (from_comp.means.col(c) - from_inter.means.col(c))
                               .cwiseAbs()
                               .maxCoeff();
      CHECK(worst <= 3.0 * sn);
    }
  }

  SUBCASE("single-point grid degenerates to the prior away from it") {
    MatX3 point(1, 3);
    point << 0.0, 0.0, -1.0;
    const auto comp = build_compromise(inter, point);
    MatX3 far(1, 3);
    far << 2.0, 1.5, -2.25;
    const auto pred = predict_vector(comp, far);
    for (int c = 0; c < 3; ++c) {
      const auto& component = comp.components[static_cast<std::size_t>(c)];
      const double dist = (far.row(0) - point.row(0)).norm();
      if (dist > 10.0 * component.hyperparams().length_scale) {
        CHECK(pred.means(0, c) ==
              doctest::Approx(component.mean_offset()).epsilon(1e-9));
      }
      CHECK(pred.sds(0, c) <= component.hyperparams().sigma_f + 1e-12);
    }
  }

  SUBCASE("compromise uncertainty grows between grid columns") {
    // Training data on a y = -1.25 lane, squarely between the 0.5 m grid's
    // y nodes; querying on the lane the intermediate map sits on its own
    // data while the compromise map has to reach a quarter metre.
    ObservationSet lane;
    const Eigen::Index n = 50;
    lane.locations.resize(n, 3);
    lane.measurements.resize(n, 3);
    lane.timestamps.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = -2.0 + 4.0 * static_cast<double>(i) / (n - 1);
      lane.locations.row(i) = Vec3(x, -1.25, -1.125);
      lane.measurements.row(i) = Vec3(20.0 + std::sin(x), -3.0, -45.0);
      lane.timestamps(i) = static_cast<double>(i);
    }
    VectorFieldMap lane_map;
    lane_map.kind = MapKind::kIntermediate;
    lane_map.provenance.source_flights = {"lane"};
    const Hyperparameters hp{2.0, 0.6, 0.1};
    for (int c = 0; c < 3; ++c) {
      lane_map.components.emplace_back(hp, lane.locations,
                                       VecX(lane.measurements.col(c)));
    }
    const auto comp = build_compromise(lane_map, GridSpec{});
    MatX3 q(1, 3);
    q << 0.25, -1.25, -1.125;  // on the lane, off the lattice
    const auto pi = predict_vector(lane_map, q);
    const auto pc = predict_vector(comp, q);
    for (int c = 0; c < 3; ++c) {
      CHECK(pc.sds(0, c) > pi.sds(0, c));
    }
  }

  SUBCASE("a compromise map cannot seed another compromise") {
    const auto comp = build_compromise(inter, GridSpec{});
    CHECK_THROWS_AS(build_compromise(comp, GridSpec{}), std::invalid_argument);
  }
}

TEST_CASE("build_norm_map targets are measurement norms") {
  SUBCASE("3-4-5 rows") {
    ObservationSet obs = smooth_observations(60, 3);
    obs.measurements.col(0).setConstant(3.0);
    obs.measurements.col(1).setConstant(4.0);
    obs.measurements.col(2).setConstant(0.0);
    const auto map = build_norm_map(obs, {"a"});
    for (Eigen::Index i = 0; i < 60; ++i) {
      CHECK(map.component.front().train_targets()(i) == doctest::Approx(5.0));
    }
  }

  SUBCASE("random rows match an independent norm computation") {
    Rng rng(17);
    const auto obs = smooth_observations(80, 5);
    const auto map = build_norm_map(obs, {"a"});
    for (Eigen::Index i = 0; i < 80; ++i) {
      const double expected = std::sqrt(obs.measurements(i, 0) * obs.measurements(i, 0) +
                                        obs.measurements(i, 1) * obs.measurements(i, 1) +
                                        obs.measurements(i, 2) * obs.measurements(i, 2));
      CHECK(map.component.front().train_targets()(i) ==
            doctest::Approx(expected).epsilon(1e-14));
    }
  }
}

TEST_CASE("predict_vector matches the per-component dense oracle") {
  // Fixed, well-conditioned hyperparameters: a fitted sigma_n near zero
  // would let the two factorization routes drift apart in the last digits.
  Rng rng(29);
  const auto obs = smooth_observations(50, 31);
  const Hyperparameters hps[3] = {{2.0, 0.7, 0.1},
                                  {1.5, 0.9, 0.2},
                                  {2.5, 0.5, 0.15}};
  VectorFieldMap map;
  map.kind = MapKind::kIntermediate;
  map.provenance.source_flights = {"a", "b"};
  for (int c = 0; c < 3; ++c) {
    map.components.emplace_back(hps[c], obs.locations,
                                VecX(obs.measurements.col(c)));
  }
  const auto q = random_points(rng, 12, default_workspace());
  const auto pred = predict_vector(map, q);
  for (int c = 0; c < 3; ++c) {
    const auto& comp = map.components[static_cast<std::size_t>(c)];
    DenseGpOracle oracle(comp.hyperparams(), obs.locations,
                         obs.measurements.col(c), comp.mean_offset());
    VecX mean, sd;
    oracle.predict(q, mean, sd);
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
      CHECK(std::abs(pred.means(i, c) - mean(i)) <=
            1e-8 * std::max(1.0, std::abs(mean(i))));
      CHECK(std::abs(pred.sds(i, c) - sd(i)) <= 1e-8 * std::max(1.0, sd(i)));
    }
  }
}

TEST_CASE("map JSON round trip preserves predictions bitwise") {
  const auto obs = smooth_observations(90, 47);
  const auto inter = build_intermediate(obs, {"t6_00", "t6_01"});
  const auto comp = build_compromise(inter, GridSpec{});
  const std::string path = "map_roundtrip_test.json";
  save_map_json(comp, path);
  const auto loaded = load_vector_map_json(path);
  CHECK(loaded.kind == MapKind::kCompromise);
  CHECK(loaded.provenance.source_flights == comp.provenance.source_flights);
  REQUIRE(loaded.provenance.grid.has_value());
  CHECK(loaded.provenance.grid->takeoff_count == 7);

  Rng rng(3);
  const auto q = random_points(rng, 25, default_workspace());
  const auto a = predict_vector(comp, q);
  const auto b = predict_vector(loaded, q);
  CHECK(a.means == b.means);
  CHECK(a.sds == b.sds);

  CHECK(!map_file_is_norm(path));
  CHECK_THROWS(load_norm_map_json(path));
  std::filesystem::remove(path);
}

TEST_CASE("norm map JSON round trip") {
  const auto obs = smooth_observations(70, 53);
  const auto nmap = build_norm_map(obs, {"t6_00"});
  const std::string path = "norm_map_roundtrip_test.json";
  save_map_json(nmap, path);
  CHECK(map_file_is_norm(path));
  const auto loaded = load_norm_map_json(path);
  Rng rng(9);
  const auto q = random_points(rng, 10, default_workspace());
  VecX m1, s1, m2, s2;
  nmap.component.front().predict(q, m1, s1);
  loaded.component.front().predict(q, m2, s2);
  CHECK(m1 == m2);
  CHECK(s1 == s2);
  std::filesystem::remove(path);
}
