#include <doctest.h>

#include <cmath>

#include "magmap/evaluation.hpp"
#include "magmap/rng.hpp"
#include "test_support.hpp"

using namespace magmap;
using namespace magmap::testing;

namespace {

ObservationSet smooth_observations(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  ObservationSet obs;
  obs.locations = random_points(rng, n, default_workspace());
  obs.measurements.resize(n, 3);
  obs.timestamps.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3 r = obs.locations.row(i);
    obs.measurements(i, 0) = 20.0 + 2.0 * std::sin(r.x());
    obs.measurements(i, 1) = -3.0 + 1.5 * std::cos(r.y() + r.z());
    obs.measurements(i, 2) = -45.0 + 2.5 * std::sin(r.z() - 0.3 * r.x());
    obs.timestamps(i) = static_cast<double>(i) * 0.5;
  }
  return obs;
}

VectorFieldMap fixed_map(const ObservationSet& obs,
                         const Hyperparameters& hp,
                         MapKind kind = MapKind::kIntermediate) {
  VectorFieldMap map;
  map.kind = kind;
  map.provenance.source_flights = {"fixture"};
  for (int c = 0; c < 3; ++c) {
    map.components.emplace_back(hp, obs.locations,
                                VecX(obs.measurements.col(c)));
  }
  return map;
}

}  // namespace

TEST_CASE("validate") {
  const auto obs = smooth_observations(80, 2);

  SUBCASE("near-zero error on its own noise-free training data") {
    const auto map = fixed_map(obs, Hyperparameters{2.0, 0.7, 1e-6});
    const auto report = validate(map, obs);
    CHECK(report.rmse_norm < 1e-6);
    CHECK(report.rmse_xyz.maxCoeff() < 1e-6);
  }

  SUBCASE("constructed unit residuals give unit RMSE") {
    const auto map = fixed_map(obs, Hyperparameters{2.0, 0.7, 1e-6});
    ObservationSet shifted = obs;
    shifted.measurements.col(0).array() -= 1.0;  // residual = pred - meas = +1
    const auto report = validate(map, shifted);
    CHECK(report.rmse_xyz.x() == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(report.rmse_xyz.y() == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(report.rmse_norm == doctest::Approx(1.0).epsilon(1e-8));
  }

  SUBCASE("composite identity holds exactly") {
    Rng rng(5);
    const auto map = fixed_map(obs, Hyperparameters{2.0, 0.7, 0.3});
    auto noisy = obs;
    for (Eigen::Index i = 0; i < noisy.size(); ++i) {
      for (int c = 0; c < 3; ++c) noisy.measurements(i, c) += rng.normal(0, 0.4);
    }
    const auto report = validate(map, noisy);
    const double composite = std::sqrt(report.rmse_xyz.squaredNorm());
    CHECK(report.rmse_norm == composite);  // bitwise, same arithmetic path
    CHECK(report.rmse_norm * report.rmse_norm ==
          doctest::Approx(report.rmse_xyz.squaredNorm()).epsilon(1e-12));
  }

  SUBCASE("outliers above 2 uT are listed per component") {
    const auto map = fixed_map(obs, Hyperparameters{2.0, 0.7, 1e-6});
    ObservationSet shifted = obs;
    shifted.measurements(3, 2) += 2.5;
    shifted.measurements(7, 2) -= 4.0;
    const auto report = validate(map, shifted);
    CHECK(report.outliers[0].empty());
    CHECK(report.outliers[1].empty());
    REQUIRE(report.outliers[2].size() == 2);
    CHECK(report.outliers[2][0].index == 3);
    CHECK(report.outliers[2][0].abs_error == doctest::Approx(2.5).epsilon(1e-6));
    CHECK(report.outliers[2][1].index == 7);
  }

  SUBCASE("empty validation set fails") {
    const auto map = fixed_map(obs, Hyperparameters{2.0, 0.7, 0.1});
    ObservationSet empty;
    empty.locations.resize(0, 3);
    empty.measurements.resize(0, 3);
    empty.timestamps.resize(0);
    CHECK_THROWS_AS(validate(map, empty), std::invalid_argument);
  }
}

TEST_CASE("capture fraction is monotone under sd inflation") {
  Rng rng(13);
  MatX3 residuals(100, 3), sds(100, 3);
  for (Eigen::Index i = 0; i < 100; ++i) {
    for (int c = 0; c < 3; ++c) {
      residuals(i, c) = rng.normal(0.0, 1.0);
      sds(i, c) = rng.uniform(0.1, 1.0);
    }
  }
  const Vec3 base = capture_fraction(residuals, sds);
  for (const double inflation : {1.1, 1.5, 3.0, 10.0}) {
    const Vec3 inflated = capture_fraction(residuals, sds * inflation);
    for (int c = 0; c < 3; ++c) {
      CHECK(inflated(c) >= base(c));
    }
  }
}

TEST_CASE("consistency_check") {
  const auto obs = smooth_observations(400, 9);
  const auto map = fixed_map(obs, Hyperparameters{2.0, 0.7, 0.2});

  SUBCASE("own training data is consistent") {
    const auto report = consistency_check(map, obs);
    CHECK(report.consistent);
    CHECK(!report.any_segment_inconsistent);
    CHECK(report.capture.minCoeff() > 0.99);
  }

  SUBCASE("zero residuals with positive sd capture everything") {
    const auto report = consistency_check(map, obs, 0.96, 100, 50);
    for (const auto& seg : report.segments) {
      CHECK(seg.end - seg.begin == 100);
    }
    CHECK(report.capture.maxCoeff() <= 1.0);
  }

  SUBCASE("mid-flight z bias trips the segment check") {
    ObservationSet biased = obs;
    for (Eigen::Index i = biased.size() / 2; i < biased.size(); ++i) {
      biased.measurements(i, 2) += 2.0;
    }
    const auto report = consistency_check(map, biased, 0.96, 100, 50);
    CHECK((!report.consistent || report.any_segment_inconsistent));
    // The late segments fail on z while the early ones pass.
    CHECK(report.segments.front().consistent);
    CHECK(!report.segments.back().consistent);
  }

  SUBCASE("threshold monotonicity") {
    ObservationSet biased = obs;
    Rng rng(3);
    for (Eigen::Index i = 0; i < biased.size(); ++i) {
      biased.measurements(i, 1) += rng.normal(0.0, 0.4);
    }
    for (double hi : {0.96, 0.9, 0.8}) {
      const auto at_hi = consistency_check(map, biased, hi);
      if (at_hi.consistent) {
        for (double lo = 0.1; lo < hi; lo += 0.2) {
          CHECK(consistency_check(map, biased, lo).consistent);
        }
      }
    }
  }

  SUBCASE("window larger than the set fails") {
    CHECK_THROWS_AS(consistency_check(map, obs, 0.96, 1000, 50),
                    std::invalid_argument);
  }
}

TEST_CASE("density_sweep") {
  const auto obs = smooth_observations(150, 33);
  const auto inter = fixed_map(obs, Hyperparameters{2.0, 0.8, 0.15});
  const auto validation = smooth_observations(60, 34);

  SUBCASE("n1 counts match the published sequence head") {
    const auto result = density_sweep(inter, {0.2, 0.25, 0.3, 0.35, 0.4},
                                      {validation}, {"v0"});
    const Eigen::Index expected[5] = {3031, 1775, 931, 655, 447};
    REQUIRE(result.rows.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(result.rows[i].n1 == expected[i]);
      CHECK(result.rows[i].spacing == doctest::Approx(0.2 + 0.05 * i));
    }
  }

  SUBCASE("a sweep row reproduces the directly built compromise bitwise") {
    const auto result = density_sweep(inter, {0.5}, {validation}, {"v0"});
    const auto direct =
        build_compromise(inter, GridSpec::uniform(0.5, default_workspace(), 7));
    const auto report = validate(direct, validation);
    REQUIRE(result.rows.size() == 1);
    CHECK(result.rows[0].rmse_norm[0] == report.rmse_norm);
  }
}

TEST_CASE("compare_norm_maps") {
  const auto obs = smooth_observations(120, 55);

  SUBCASE("zero-residual maps agree at zero") {
    const auto vec_map = fixed_map(obs, Hyperparameters{2.0, 0.7, 1e-6});
    NormFieldMap nrm;
    nrm.kind = MapKind::kIntermediate;
    nrm.provenance.source_flights = {"fixture"};
    nrm.component.emplace_back(Hyperparameters{2.0, 0.7, 1e-6}, obs.locations,
                               VecX(obs.measurements.rowwise().norm()));
    const auto cmp = compare_norm_maps(vec_map, nrm, obs);
    CHECK(!cmp.provenance_mismatch);
    CHECK(cmp.rmse_vec_nrm < 1e-5);
    CHECK(cmp.rmse_nrm_nrm < 1e-5);
  }

  SUBCASE("differing source flights raise the provenance flag") {
    const auto vec_map = fixed_map(obs, Hyperparameters{2.0, 0.7, 0.1});
    NormFieldMap nrm;
    nrm.kind = MapKind::kIntermediate;
    nrm.provenance.source_flights = {"other"};
    nrm.component.emplace_back(Hyperparameters{2.0, 0.7, 0.1}, obs.locations,
                               VecX(obs.measurements.rowwise().norm()));
    CHECK(compare_norm_maps(vec_map, nrm, obs).provenance_mismatch);
  }
}

TEST_CASE("validation table lines up ids and metrics") {
  const auto obs = smooth_observations(40, 77);
  const auto map = fixed_map(obs, Hyperparameters{2.0, 0.7, 0.1});
  const auto report = validate(map, obs);
  const auto table = validation_table({"t6_04"}, {report});
  CHECK(table.find("t6_04") != std::string::npos);
  CHECK(table.find("norm") != std::string::npos);
}
