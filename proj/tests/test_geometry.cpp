#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "lanegeom/geometry.hpp"
#include "lanegeom/synthio.hpp"

using namespace lanegeom;

TEST_SUITE("geometry") {

TEST_CASE("build_grid produces the uniform row ladder") {
  const SampleGrid grid = build_grid(320, 800, 72);
  CHECK(grid.rows[0] == 0.0);
  CHECK(grid.rows[71] == doctest::Approx(320.0).epsilon(1e-12));
  CHECK(grid.rows[1] == doctest::Approx(320.0 / 71.0).epsilon(1e-12));
  CHECK(grid.n_points == 72);

  const SampleGrid two = build_grid(100, 100, 2);
  CHECK(two.rows[0] == 0.0);
  CHECK(two.rows[1] == 100.0);
}

TEST_CASE("build_grid rejects bad dimensions") {
  CHECK_THROWS_AS(build_grid(0, 800, 72), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(320, -1, 72), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(320, 800, 1), std::invalid_argument);
}

TEST_CASE("grid spacing is uniform") {
  for (int n : {2, 3, 17, 72, 100}) {
    const SampleGrid grid = build_grid(320, 800, n);
    const double step = grid.rows[1] - grid.rows[0];
    for (int i = 0; i + 1 < n; ++i) {
      const double d = grid.rows[static_cast<std::size_t>(i) + 1] - grid.rows[static_cast<std::size_t>(i)];
      CHECK(std::abs(d - step) <= 1e-9 * std::max(1.0, std::abs(step)));
    }
  }
}

TEST_CASE("apply_prior_update shifts start, angle and laterals") {
  LanePrior prior;
  prior.xs = {10.0, 10.0};
  prior.start_x = 100.0;
  prior.start_y = 0.0;
  prior.angle = 0.5;
  prior.cls_confidence = 0.7;
  prior.fidelity = 0.3;

  const LanePrior moved = apply_prior_update(prior, 5.0, -2.0, 0.1, {0.0, 0.0});
  CHECK(moved.start_x == 105.0);
  CHECK(moved.start_y == -2.0);
  CHECK(moved.angle == doctest::Approx(0.6));
  CHECK(moved.xs[0] == 10.0);
  CHECK(moved.cls_confidence == 0.7);
  CHECK(moved.fidelity == 0.3);

  const LanePrior same = apply_prior_update(prior, 0.0, 0.0, 0.0, {0.0, 0.0});
  CHECK(same.start_x == prior.start_x);
  CHECK(same.xs == prior.xs);

  const LanePrior shifted = apply_prior_update(prior, 0.0, 0.0, 0.0, {1.0, -1.0});
  CHECK(shifted.xs[0] == 11.0);
  CHECK(shifted.xs[1] == 9.0);

  CHECK_THROWS_AS(apply_prior_update(prior, 0, 0, 0, {1.0}), std::invalid_argument);
}

TEST_CASE("prior updates compose additively") {
  Rng rng(7);
  LanePrior prior;
  prior.xs.resize(16);
  for (double& x : prior.xs) x = rng.uniform(0, 800);
  std::vector<double> d1(16), d2(16), d12(16);
  for (int i = 0; i < 16; ++i) {
    d1[static_cast<std::size_t>(i)] = rng.uniform(-5, 5);
    d2[static_cast<std::size_t>(i)] = rng.uniform(-5, 5);
    d12[static_cast<std::size_t>(i)] = d1[static_cast<std::size_t>(i)] + d2[static_cast<std::size_t>(i)];
  }
  const LanePrior twice = apply_prior_update(apply_prior_update(prior, 1, 2, 0.5, d1), 3, -1, 0.25, d2);
  const LanePrior once = apply_prior_update(prior, 4, 1, 0.75, d12);
  CHECK(twice.start_x == doctest::Approx(once.start_x).epsilon(1e-9));
  CHECK(twice.angle == doctest::Approx(once.angle).epsilon(1e-9));
  for (int i = 0; i < 16; ++i) {
    CHECK(twice.xs[static_cast<std::size_t>(i)] ==
          doctest::Approx(once.xs[static_cast<std::size_t>(i)]).epsilon(1e-9));
  }
}

TEST_CASE("apply_point_update adds both offset streams") {
  LanePrior prior;
  prior.xs = {5.0};
  // needs N >= 1; use single row
  const LanePrior out = apply_point_update(prior, {1.0}, {0.5});
  CHECK(out.xs[0] == doctest::Approx(6.5));

  LanePrior wide;
  wide.xs = {10.0, 10.0};
  const LanePrior reg_only = apply_point_update(wide, {1.0, 1.0}, {0.0, 0.0});
  CHECK(reg_only.xs[0] == 11.0);
  const LanePrior sr_only = apply_point_update(wide, {0.0, 0.0}, {-2.0, 2.0});
  CHECK(sr_only.xs[0] == 8.0);
  CHECK(sr_only.xs[1] == 12.0);

  CHECK_THROWS_AS(apply_point_update(wide, {1.0}, {0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("resample_linear hits midpoints and endpoints") {
  const std::vector<double> ramp = {0, 1, 2, 3};
  const std::vector<double> out = resample_linear(ramp, 7);
  const std::vector<double> expect = {0, 0.5, 1, 1.5, 2, 2.5, 3};
  REQUIRE(out.size() == expect.size());
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(expect[i]));

  CHECK(resample_linear({0.0, 10.0}, 5) == std::vector<double>{0.0, 2.5, 5.0, 7.5, 10.0});

  const std::vector<double> same = {3.0, -1.0, 2.0};
  CHECK(resample_linear(same, 3) == same);

  CHECK_THROWS_AS(resample_linear({1.0}, 4), std::invalid_argument);
  CHECK_THROWS_AS(resample_linear({1.0, 2.0}, 1), std::invalid_argument);
}

TEST_CASE("resampling is linear in its input") {
  Rng rng(11);
  std::vector<double> u(9), v(9);
  for (int i = 0; i < 9; ++i) {
    u[static_cast<std::size_t>(i)] = rng.uniform(-4, 4);
    v[static_cast<std::size_t>(i)] = rng.uniform(-4, 4);
  }
  const double a = 1.7, b = -0.3;
  std::vector<double> combo(9);
  for (int i = 0; i < 9; ++i) {
    combo[static_cast<std::size_t>(i)] = a * u[static_cast<std::size_t>(i)] + b * v[static_cast<std::size_t>(i)];
  }
  const auto ru = resample_linear(u, 23);
  const auto rv = resample_linear(v, 23);
  const auto rc = resample_linear(combo, 23);
  for (int i = 0; i < 23; ++i) {
    CHECK(rc[static_cast<std::size_t>(i)] ==
          doctest::Approx(a * ru[static_cast<std::size_t>(i)] + b * rv[static_cast<std::size_t>(i)])
              .epsilon(1e-12));
  }
}

TEST_CASE("upsample then downsample restores piecewise-linear data") {
  Rng rng(13);
  std::vector<double> base(8);
  for (double& x : base) x = rng.uniform(-10, 10);
  // Upsample onto a grid that contains the original nodes (M-1 divisible by N-1).
  const auto up = resample_linear(base, 15);
  const auto back = resample_linear(up, 8);
  for (int i = 0; i < 8; ++i) {
    CHECK(back[static_cast<std::size_t>(i)] ==
          doctest::Approx(base[static_cast<std::size_t>(i)]).epsilon(1e-9));
  }
}

TEST_CASE("decode_polyline clips to valid rows in y order") {
  const SampleGrid grid = build_grid(320, 800, 72);
  LanePrior prior;
  prior.xs.assign(72, 400.0);
  prior.start_y = 0.0;
  prior.length = 72.0;
  const Polyline full = decode_polyline(prior, grid);
  REQUIRE(full.size() == 72);
  for (const Point2& p : full) CHECK(p.x == 400.0);

  LanePrior minimal = prior;
  minimal.length = 2.0;
  CHECK(decode_polyline(minimal, grid).size() == 2);

  LanePrior block = prior;
  block.start_y = grid.rows[10];
  block.length = 21.0;
  const Polyline mid = decode_polyline(block, grid);
  REQUIRE(mid.size() == 21);
  CHECK(mid.front().y == doctest::Approx(grid.rows[10]));
  for (std::size_t i = 1; i < mid.size(); ++i) CHECK(mid[i].y > mid[i - 1].y);

  LanePrior empty = prior;
  empty.length = 1.0;
  CHECK_THROWS_AS(decode_polyline(empty, grid), std::invalid_argument);
}

}  // TEST_SUITE
