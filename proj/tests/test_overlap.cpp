#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "lanegeom/evaluate.hpp"
#include "lanegeom/overlap.hpp"
#include "lanegeom/synthio.hpp"
#include "oracles.hpp"

using namespace lanegeom;

namespace {

LanePrior vertical_prior(double x, const SampleGrid& grid) {
  LanePrior p;
  p.xs.assign(static_cast<std::size_t>(grid.n_points), x);
  p.start_y = 0.0;
  p.length = static_cast<double>(grid.n_points);
  return p;
}

Polyline prior_polyline(const LanePrior& prior, const SampleGrid& grid) {
  return decode_polyline(prior, grid);
}

}  // namespace

TEST_SUITE("overlap") {

TEST_CASE("identical lanes overlap fully") {
  const SampleGrid grid = build_grid(320, 800, 72);
  const WidthModel w{15.0, true};
  const LanePrior a = vertical_prior(400, grid);
  CHECK(lane_iou(span_of(a, grid), span_of(a, grid), w, IouMode::unsigned_clamped, grid) ==
        doctest::Approx(1.0));
  CHECK(lane_iou(span_of(a, grid), span_of(a, grid), w, IouMode::signed_overlap, grid) ==
        doctest::Approx(1.0));
}

TEST_CASE("touching intervals score zero, offset e scores one third") {
  const SampleGrid grid = build_grid(320, 800, 72);
  const WidthModel w{15.0, false};
  const LanePrior a = vertical_prior(400, grid);
  const LanePrior touching = vertical_prior(430, grid);  // offset 2e
  CHECK(lane_iou(span_of(a, grid), span_of(touching, grid), w, IouMode::unsigned_clamped, grid) ==
        doctest::Approx(0.0));

  const LanePrior offset_e = vertical_prior(415, grid);
  const double analytic =
      lane_iou(span_of(a, grid), span_of(offset_e, grid), w, IouMode::unsigned_clamped, grid);
  CHECK(analytic == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  // Rasterized-mask oracle agreement (mask width = 2e).
  const Mask ma = rasterize(prior_polyline(a, grid), 30.0, 320, 800);
  const Mask mb = rasterize(prior_polyline(offset_e, grid), 30.0, 320, 800);
  CHECK(std::abs(analytic - mask_iou(ma, mb)) <= 0.02);
}

TEST_CASE("errors: no valid rows and degenerate width") {
  const SampleGrid grid = build_grid(320, 800, 72);
  const WidthModel w{15.0, true};
  LanePrior empty = vertical_prior(400, grid);
  empty.length = 0.0;
  CHECK_THROWS_AS(
      lane_iou(span_of(empty, grid), span_of(empty, grid), w, IouMode::unsigned_clamped, grid),
      std::invalid_argument);
  const LanePrior a = vertical_prior(400, grid);
  CHECK_THROWS_AS(lane_iou(span_of(a, grid), span_of(a, grid), WidthModel{0.0, false},
                           IouMode::unsigned_clamped, grid),
                  std::invalid_argument);
}

TEST_CASE("symmetry and range on random pairs") {
  const SampleGrid grid = build_grid(320, 800, 72);
  const WidthModel w{15.0, true};
  Rng rng(42);
  for (int trial = 0; trial < 60; ++trial) {
    const LanePrior a = oracles::random_curved_prior(rng, grid, 80.0);
    const LanePrior b = oracles::random_curved_prior(rng, grid, 80.0);
    const double ab = lane_iou(span_of(a, grid), span_of(b, grid), w, IouMode::unsigned_clamped, grid);
    const double ba = lane_iou(span_of(b, grid), span_of(a, grid), w, IouMode::unsigned_clamped, grid);
    CHECK(std::abs(ab - ba) <= 1e-12);
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);

    const double s_ab = lane_iou(span_of(a, grid), span_of(b, grid), w, IouMode::signed_overlap, grid);
    const double s_ba = lane_iou(span_of(b, grid), span_of(a, grid), w, IouMode::signed_overlap, grid);
    CHECK(std::abs(s_ab - s_ba) <= 1e-12);
    CHECK(s_ab > -1.0);
    CHECK(s_ab <= 1.0);
  }
}

TEST_CASE("signed equals unsigned when every shared row overlaps") {
  const SampleGrid grid = build_grid(320, 800, 72);
  const WidthModel w{15.0, true};
  Rng rng(7);
  int checked = 0;
  for (int trial = 0; trial < 200 && checked < 40; ++trial) {
    const LanePrior a = oracles::random_curved_prior(rng, grid, 80.0);
    LanePrior b = a;
    for (double& x : b.xs) x += rng.uniform(-10.0, 10.0) / 2.0;  // small shift keeps rows overlapping
    const double u = lane_iou(span_of(a, grid), span_of(b, grid), w, IouMode::unsigned_clamped, grid);
    const double s = lane_iou(span_of(a, grid), span_of(b, grid), w, IouMode::signed_overlap, grid);
    if (s >= 0.0) {
      CHECK(u == doctest::Approx(s).epsilon(1e-9));
      ++checked;
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("width growth never shrinks the unsigned overlap") {
  const SampleGrid grid = build_grid(320, 800, 72);
  Rng rng(19);
  for (int trial = 0; trial < 30; ++trial) {
    LanePrior a = oracles::random_curved_prior(rng, grid, 80.0);
    LanePrior b = oracles::random_curved_prior(rng, grid, 80.0);
    // Identical validity ranges for the monotonicity property.
    b.start_y = a.start_y;
    b.length = a.length;
    double previous = -1.0;
    for (double e : {5.0, 10.0, 15.0, 25.0, 40.0}) {
      const double iou = lane_iou(span_of(a, grid), span_of(b, grid), WidthModel{e, true},
                                  IouMode::unsigned_clamped, grid);
      CHECK(iou >= previous - 1e-12);
      previous = iou;
    }
  }
}

TEST_CASE("tilt compensation is a no-op on vertical lanes") {
  const SampleGrid grid = build_grid(320, 800, 72);
  const LanePrior a = vertical_prior(300, grid);
  const LanePrior b = vertical_prior(318, grid);
  const double plain = lane_iou(span_of(a, grid), span_of(b, grid), WidthModel{15.0, false},
                                IouMode::unsigned_clamped, grid);
  const double tilted = lane_iou(span_of(a, grid), span_of(b, grid), WidthModel{15.0, true},
                                 IouMode::unsigned_clamped, grid);
  CHECK(std::abs(plain - tilted) <= 1e-12);
}

TEST_CASE("iou_matrix matches entry-wise calls and the mask oracle") {
  const SampleGrid grid = build_grid(320, 800, 72);
  const WidthModel w{15.0, true};

  LanePrior only = vertical_prior(400, grid);
  Lane gt;
  gt.xs = only.xs;
  gt.first_row = 0;
  gt.valid_rows = grid.n_points;
  const IouMatrixResult identity = iou_matrix({only}, {gt}, w, grid);
  CHECK(identity.values[0][0] == doctest::Approx(1.0));

  const LanePrior far_a = vertical_prior(200, grid);
  const LanePrior far_b = vertical_prior(350, grid);  // separated by 10e
  Lane far_gt_a;
  far_gt_a.xs = far_a.xs;
  far_gt_a.first_row = 0;
  far_gt_a.valid_rows = grid.n_points;
  Lane far_gt_b;
  far_gt_b.xs = far_b.xs;
  far_gt_b.first_row = 0;
  far_gt_b.valid_rows = grid.n_points;
  const IouMatrixResult two = iou_matrix({far_a, far_b}, {far_gt_a, far_gt_b}, w, grid);
  CHECK(two.values[0][1] == doctest::Approx(0.0));
  CHECK(two.values[1][0] == doctest::Approx(0.0));

  Rng rng(42);
  std::vector<LanePrior> priors;
  std::vector<Lane> gts;
  for (int i = 0; i < 3; ++i) {
    priors.push_back(oracles::random_curved_prior(rng, grid, 100.0));
    const LanePrior g = oracles::random_curved_prior(rng, grid, 100.0);
    Lane lane;
    lane.xs = g.xs;
    lane.first_row = prior_first_row(g, grid);
    lane.valid_rows = prior_row_count(g, grid);
    gts.push_back(lane);
  }
  const IouMatrixResult matrix = iou_matrix(priors, gts, w, grid);
  for (int j = 0; j < 3; ++j) {
    for (int k = 0; k < 3; ++k) {
      const double direct = lane_iou(span_of(priors[static_cast<std::size_t>(j)], grid),
                                     span_of(gts[static_cast<std::size_t>(k)]), w,
                                     IouMode::unsigned_clamped, grid);
      CHECK(matrix.values[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] ==
            doctest::Approx(direct).epsilon(1e-12));

      const Mask mp = rasterize(prior_polyline(priors[static_cast<std::size_t>(j)], grid), 30.0,
                                320, 800);
      Polyline gt_line;
      const Lane& lane = gts[static_cast<std::size_t>(k)];
      for (int r = lane.first_row; r < lane.first_row + lane.valid_rows; ++r) {
        gt_line.push_back({lane.xs[static_cast<std::size_t>(r)], grid.rows[static_cast<std::size_t>(r)]});
      }
      const Mask mg = rasterize(gt_line, 30.0, 320, 800);
      if (mp.popcount() > 0 && mg.popcount() > 0) {
        CHECK(std::abs(matrix.values[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] -
                       mask_iou(mp, mg)) <= 0.02);
      }
    }
  }
}

}  // TEST_SUITE
