#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "lanegeom/assign.hpp"
#include "lanegeom/synthio.hpp"

using namespace lanegeom;

namespace {

Matrix random_iou_matrix(Rng& rng, int j, int k) {
  Matrix m(static_cast<std::size_t>(j), std::vector<double>(static_cast<std::size_t>(k)));
  for (auto& row : m) {
    for (double& v : row) v = rng.uniform(0.0, 1.0);
  }
  return m;
}

}  // namespace

TEST_SUITE("assign") {

TEST_CASE("cost_matrix follows the overlap-plus-likelihood form") {
  AssignConfig cfg;
  cfg.lambda = 1.0;
  const Matrix perfect = cost_matrix({{1.0}}, {1.0}, cfg);
  CHECK(perfect[0][0] == doctest::Approx(-1.0));

  cfg.lambda = 0.0;
  const Matrix geometric = cost_matrix({{0.25, 0.75}}, {0.3}, cfg);
  CHECK(geometric[0][0] == doctest::Approx(-0.25));
  CHECK(geometric[0][1] == doctest::Approx(-0.75));

  cfg.lambda = 1.0;
  const Matrix mixed = cost_matrix({{0.5}}, {0.5}, cfg);
  CHECK(mixed[0][0] == doctest::Approx(-0.5 + std::log(2.0)).epsilon(1e-12));

  CHECK_THROWS_AS(cost_matrix({{0.5}}, {0.5, 0.4}, cfg), std::invalid_argument);
}

TEST_CASE("dynamic_assign picks the strongest candidate") {
  AssignConfig cfg;
  cfg.top_t = 3;
  cfg.k_max = 1;
  const Matrix ious = {{0.9}, {0.2}, {0.1}};
  const Matrix cost = cost_matrix(ious, {0.9, 0.9, 0.9}, cfg);
  const AssignmentResult r = dynamic_assign(cost, ious, cfg);
  // round(0.9 + 0.2 + 0.1) = 1 positive: the 0.9 candidate.
  REQUIRE(r.positives.size() == 1);
  CHECK(r.positives[0] == 0);
  CHECK(r.matched_gt[0] == 0);
  CHECK(r.labels == std::vector<int>{1, 0, 0});
  CHECK(r.soft_labels[0] == doctest::Approx(0.9));
  CHECK(r.soft_labels[1] == 0.0);
  CHECK(r.negatives == std::vector<int>{1, 2});
}

TEST_CASE("no ground truth yields an all-negative assignment") {
  AssignConfig cfg;
  const Matrix ious = {{}, {}, {}};
  const Matrix cost = {{}, {}, {}};
  const AssignmentResult r = dynamic_assign(cost, ious, cfg);
  CHECK(r.positives.empty());
  CHECK(r.negatives.size() == 3);
  CHECK(r.labels == std::vector<int>{0, 0, 0});
  CHECK(r.soft_labels == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("soft labels equal the matched overlap") {
  AssignConfig cfg;
  const Matrix ious = {{0.73}, {0.2}};
  const Matrix cost = cost_matrix(ious, {0.9, 0.8}, cfg);
  const AssignmentResult r = dynamic_assign(cost, ious, cfg);
  for (int j : r.positives) {
    CHECK(r.soft_labels[static_cast<std::size_t>(j)] ==
          ious[static_cast<std::size_t>(j)][static_cast<std::size_t>(r.matched_gt[static_cast<std::size_t>(j)])]);
  }
  for (int j : r.negatives) CHECK(r.soft_labels[static_cast<std::size_t>(j)] == 0.0);
  // The strongest candidate carries its overlap as the soft label.
  CHECK(r.soft_labels[0] == doctest::Approx(0.73));
}

TEST_CASE("positives and negatives partition the priors") {
  Rng rng(31);
  AssignConfig cfg;
  for (int trial = 0; trial < 25; ++trial) {
    const int j = rng.uniform_int(1, 12);
    const int k = rng.uniform_int(0, 4);
    const Matrix ious = random_iou_matrix(rng, j, k);
    std::vector<double> conf(static_cast<std::size_t>(j));
    for (double& c : conf) c = rng.uniform(0.0, 1.0);
    const AssignmentResult r = dynamic_assign(cost_matrix(ious, conf, cfg), ious, cfg);
    CHECK(static_cast<int>(r.positives.size() + r.negatives.size()) == j);
    for (int idx : r.positives) {
      CHECK(r.labels[static_cast<std::size_t>(idx)] == 1);
      CHECK(r.matched_gt[static_cast<std::size_t>(idx)] >= 0);
    }
    for (int idx : r.negatives) {
      CHECK(r.labels[static_cast<std::size_t>(idx)] == 0);
      CHECK(r.matched_gt[static_cast<std::size_t>(idx)] == -1);
      CHECK(r.soft_labels[static_cast<std::size_t>(idx)] == 0.0);
    }
  }
}

TEST_CASE("column-constant shifts keep the selected positives") {
  Rng rng(17);
  AssignConfig cfg;
  const Matrix ious = random_iou_matrix(rng, 8, 2);
  std::vector<double> conf(8);
  for (double& c : conf) c = rng.uniform(0.1, 1.0);
  Matrix cost = cost_matrix(ious, conf, cfg);
  const AssignmentResult before = dynamic_assign(cost, ious, cfg);
  for (auto& row : cost) row[1] += 11.5;  // shift one whole column
  const AssignmentResult after = dynamic_assign(cost, ious, cfg);
  CHECK(before.positives == after.positives);
  CHECK(before.matched_gt == after.matched_gt);
}

TEST_CASE("raising a candidate's overlap never drops it from that column") {
  Rng rng(23);
  AssignConfig cfg;
  for (int trial = 0; trial < 40; ++trial) {
    const int j = rng.uniform_int(2, 10);
    const int k = rng.uniform_int(1, 3);
    Matrix ious = random_iou_matrix(rng, j, k);
    std::vector<double> conf(static_cast<std::size_t>(j));
    for (double& c : conf) c = rng.uniform(0.1, 1.0);
    const AssignmentResult before = dynamic_assign(cost_matrix(ious, conf, cfg), ious, cfg);

    const int target_j = rng.uniform_int(0, j - 1);
    const int target_k = rng.uniform_int(0, k - 1);
    if (before.matched_gt[static_cast<std::size_t>(target_j)] != target_k) continue;

    ious[static_cast<std::size_t>(target_j)][static_cast<std::size_t>(target_k)] = std::min(
        1.0, ious[static_cast<std::size_t>(target_j)][static_cast<std::size_t>(target_k)] + 0.3);
    const AssignmentResult after = dynamic_assign(cost_matrix(ious, conf, cfg), ious, cfg);
    CHECK(after.matched_gt[static_cast<std::size_t>(target_j)] == target_k);
  }
}

TEST_CASE("deterministic for identical inputs") {
  Rng rng(29);
  AssignConfig cfg;
  const Matrix ious = random_iou_matrix(rng, 20, 4);
  std::vector<double> conf(20);
  for (double& c : conf) c = rng.uniform(0.0, 1.0);
  const Matrix cost = cost_matrix(ious, conf, cfg);
  const AssignmentResult a = dynamic_assign(cost, ious, cfg);
  const AssignmentResult b = dynamic_assign(cost, ious, cfg);
  CHECK(a.positives == b.positives);
  CHECK(a.negatives == b.negatives);
  CHECK(a.matched_gt == b.matched_gt);
  CHECK(a.soft_labels == b.soft_labels);
}

}  // TEST_SUITE
