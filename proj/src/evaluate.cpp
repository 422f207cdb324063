#include "lanegeom/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace lanegeom {

long Mask::popcount() const {
  long n = 0;
  for (std::uint8_t p : pixels) n += p != 0;
  return n;
}

long RowSpanMask::popcount() const {
  long n = 0;
  for (const auto& row : rows) {
    for (const auto& [lo, hi] : row) n += hi - lo;
  }
  return n;
}

Mask RowSpanMask::to_mask() const {
  Mask m;
  m.height = height;
  m.width = width;
  m.pixels.assign(static_cast<std::size_t>(height) * width, 0);
  for (int y = 0; y < height; ++y) {
    for (const auto& [lo, hi] : rows[static_cast<std::size_t>(y)]) {
      std::fill(m.pixels.begin() + static_cast<std::size_t>(y) * width + lo,
                m.pixels.begin() + static_cast<std::size_t>(y) * width + hi,
                static_cast<std::uint8_t>(1));
    }
  }
  return m;
}

namespace {

// Horizontal slice of the capsule (segment dilated by radius r) at height yc.
// The capsule is convex, so the slice is a single interval.
bool capsule_row_slice(const Point2& p0, const Point2& p1, double r, double yc, double& lo,
                       double& hi) {
  bool any = false;
  lo = std::numeric_limits<double>::infinity();
  hi = -std::numeric_limits<double>::infinity();

  auto add_disc = [&](const Point2& c) {
    const double dy = yc - c.y;
    if (std::abs(dy) > r) return;
    const double s = std::sqrt(r * r - dy * dy);
    lo = std::min(lo, c.x - s);
    hi = std::max(hi, c.x + s);
    any = true;
  };
  add_disc(p0);
  add_disc(p1);

  const double dx = p1.x - p0.x;
  const double dy = p1.y - p0.y;
  const double len = std::hypot(dx, dy);
  if (len > 0.0) {
    const double nx = -dy / len * r;
    const double ny = dx / len * r;
    const Point2 quad[4] = {{p0.x + nx, p0.y + ny},
                            {p1.x + nx, p1.y + ny},
                            {p1.x - nx, p1.y - ny},
                            {p0.x - nx, p0.y - ny}};
    for (int i = 0; i < 4; ++i) {
      const Point2& a = quad[i];
      const Point2& b = quad[(i + 1) % 4];
      if ((a.y <= yc && b.y >= yc) || (b.y <= yc && a.y >= yc)) {
        if (a.y == b.y) {
          lo = std::min({lo, a.x, b.x});
          hi = std::max({hi, a.x, b.x});
        } else {
          const double x = a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y);
          lo = std::min(lo, x);
          hi = std::max(hi, x);
        }
        any = true;
      }
    }
  }
  return any;
}

void validate_polyline(const Polyline& polyline, double width_px) {
  if (polyline.size() < 2) {
    throw std::invalid_argument("rasterize: polyline needs at least 2 points");
  }
  if (width_px < 1.0) {
    throw std::invalid_argument("rasterize: stroke width must be at least 1 pixel");
  }
  const Point2& first = polyline.front();
  const bool degenerate = std::all_of(polyline.begin(), polyline.end(), [&](const Point2& p) {
    return p.x == first.x && p.y == first.y;
  });
  if (degenerate) {
    throw std::invalid_argument("rasterize: degenerate polyline (all points identical)");
  }
}

}  // namespace

RowSpanMask rasterize_spans(const Polyline& polyline, double width_px, int height, int width) {
  validate_polyline(polyline, width_px);
  if (height <= 0 || width <= 0) {
    throw std::invalid_argument("rasterize: resolution must be positive");
  }
  const double r = width_px / 2.0;

  RowSpanMask mask;
  mask.height = height;
  mask.width = width;
  mask.rows.assign(static_cast<std::size_t>(height), {});

  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    const Point2& p0 = polyline[i];
    const Point2& p1 = polyline[i + 1];
    if (p0.x == p1.x && p0.y == p1.y) continue;
    const double y_min = std::min(p0.y, p1.y) - r;
    const double y_max = std::max(p0.y, p1.y) + r;
    // Pixel centers sit at y + 0.5.
    const int row_lo = std::max(0, static_cast<int>(std::ceil(y_min - 0.5)));
    const int row_hi = std::min(height - 1, static_cast<int>(std::floor(y_max - 0.5)));
    for (int y = row_lo; y <= row_hi; ++y) {
      double lo, hi;
      if (!capsule_row_slice(p0, p1, r, y + 0.5, lo, hi)) continue;
      const int x_lo = std::max(0, static_cast<int>(std::ceil(lo - 0.5)));
      const int x_hi = std::min(width - 1, static_cast<int>(std::floor(hi - 0.5)));
      if (x_lo > x_hi) continue;
      mask.rows[static_cast<std::size_t>(y)].emplace_back(x_lo, x_hi + 1);
    }
  }

  for (auto& row : mask.rows) {
    if (row.size() < 2) continue;
    std::sort(row.begin(), row.end());
    std::vector<std::pair<int, int>> merged;
    for (const auto& span : row) {
      if (!merged.empty() && span.first <= merged.back().second) {
        merged.back().second = std::max(merged.back().second, span.second);
      } else {
        merged.push_back(span);
      }
    }
    row = std::move(merged);
  }
  return mask;
}

Mask rasterize(const Polyline& polyline, double width_px, int height, int width) {
  return rasterize_spans(polyline, width_px, height, width).to_mask();
}

double mask_iou(const Mask& a, const Mask& b) {
  if (a.height != b.height || a.width != b.width) {
    throw std::invalid_argument("mask_iou: resolution mismatch");
  }
  long inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const bool pa = a.pixels[i] != 0;
    const bool pb = b.pixels[i] != 0;
    inter += pa && pb;
    uni += pa || pb;
  }
  if (uni == 0) {
    throw std::invalid_argument("mask_iou: both masks are empty");
  }
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double span_iou(const RowSpanMask& a, const RowSpanMask& b) {
  if (a.height != b.height || a.width != b.width) {
    throw std::invalid_argument("span_iou: resolution mismatch");
  }
  long inter = 0, total_a = 0, total_b = 0;
  for (int y = 0; y < a.height; ++y) {
    const auto& ra = a.rows[static_cast<std::size_t>(y)];
    const auto& rb = b.rows[static_cast<std::size_t>(y)];
    for (const auto& [lo, hi] : ra) total_a += hi - lo;
    for (const auto& [lo, hi] : rb) total_b += hi - lo;
    std::size_t ia = 0, ib = 0;
    while (ia < ra.size() && ib < rb.size()) {
      const int lo = std::max(ra[ia].first, rb[ib].first);
      const int hi = std::min(ra[ia].second, rb[ib].second);
      if (hi > lo) inter += hi - lo;
      if (ra[ia].second < rb[ib].second) {
        ++ia;
      } else {
        ++ib;
      }
    }
  }
  const long uni = total_a + total_b - inter;
  if (uni == 0) {
    throw std::invalid_argument("span_iou: both masks are empty");
  }
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

// Potentials-based shortest augmenting path assignment on a square matrix.
std::vector<int> solve_square_assignment(const Matrix& cost, int n) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, kInf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost[static_cast<std::size_t>(i0) - 1][static_cast<std::size_t>(j) - 1] -
                           u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> rowsol(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) {
    if (p[static_cast<std::size_t>(j)] > 0) {
      rowsol[static_cast<std::size_t>(p[static_cast<std::size_t>(j)]) - 1] = j - 1;
    }
  }
  return rowsol;
}

}  // namespace

HungarianResult hungarian(const Matrix& cost) {
  const int n_rows = static_cast<int>(cost.size());
  const int n_cols = n_rows > 0 ? static_cast<int>(cost[0].size()) : 0;
  for (const auto& row : cost) {
    if (static_cast<int>(row.size()) != n_cols) {
      throw std::invalid_argument("hungarian: ragged cost matrix");
    }
    for (double c : row) {
      if (!std::isfinite(c)) {
        throw std::invalid_argument("hungarian: costs must be finite");
      }
    }
  }
  HungarianResult result;
  if (n_rows == 0 || n_cols == 0) return result;

  const int n = std::max(n_rows, n_cols);
  Matrix padded(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (int i = 0; i < n_rows; ++i) {
    for (int j = 0; j < n_cols; ++j) padded[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  const std::vector<int> rowsol = solve_square_assignment(padded, n);

  for (int i = 0; i < n_rows; ++i) {
    const int j = rowsol[static_cast<std::size_t>(i)];
    if (j >= 0 && j < n_cols) result.pairs.emplace_back(i, j);
  }
  std::sort(result.pairs.begin(), result.pairs.end());

  // Canonicalize among equal-cost solutions: earlier rows take lower columns
  // whenever the exchange is cost-neutral.
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t a = 0; a + 1 < result.pairs.size(); ++a) {
      for (std::size_t b = a + 1; b < result.pairs.size(); ++b) {
        auto& [ia, ja] = result.pairs[a];
        auto& [ib, jb] = result.pairs[b];
        if (jb < ja &&
            cost[static_cast<std::size_t>(ia)][static_cast<std::size_t>(ja)] +
                    cost[static_cast<std::size_t>(ib)][static_cast<std::size_t>(jb)] ==
                cost[static_cast<std::size_t>(ia)][static_cast<std::size_t>(jb)] +
                    cost[static_cast<std::size_t>(ib)][static_cast<std::size_t>(ja)]) {
          std::swap(ja, jb);
          changed = true;
        }
      }
    }
  }

  for (const auto& [i, j] : result.pairs) {
    result.total_cost += cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return result;
}

namespace {

struct FrameCounts {
  std::vector<long> tp;  // per threshold
  long preds = 0;
  long gts = 0;
};

FrameCounts evaluate_frame(const std::vector<Polyline>& preds, const std::vector<Polyline>& gts,
                           const EvalConfig& cfg) {
  FrameCounts counts;
  counts.tp.assign(cfg.iou_thresholds.size(), 0);
  counts.preds = static_cast<long>(preds.size());
  counts.gts = static_cast<long>(gts.size());
  if (preds.empty() || gts.empty()) return counts;

  std::vector<RowSpanMask> pred_masks;
  pred_masks.reserve(preds.size());
  for (const auto& p : preds) {
    pred_masks.push_back(rasterize_spans(p, cfg.mask_width, cfg.height, cfg.width));
  }
  std::vector<RowSpanMask> gt_masks;
  gt_masks.reserve(gts.size());
  for (const auto& g : gts) {
    gt_masks.push_back(rasterize_spans(g, cfg.mask_width, cfg.height, cfg.width));
  }
  std::vector<long> pred_pop(preds.size()), gt_pop(gts.size());
  for (std::size_t i = 0; i < preds.size(); ++i) pred_pop[i] = pred_masks[i].popcount();
  for (std::size_t j = 0; j < gts.size(); ++j) gt_pop[j] = gt_masks[j].popcount();

  Matrix neg_iou(preds.size(), std::vector<double>(gts.size(), 0.0));
  Matrix iou(preds.size(), std::vector<double>(gts.size(), 0.0));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t j = 0; j < gts.size(); ++j) {
      // A lane rasterized fully outside the frame has no pixels; it can never
      // match, so its IoU is 0 against everything.
      const double v =
          (pred_pop[i] == 0 || gt_pop[j] == 0) ? 0.0 : span_iou(pred_masks[i], gt_masks[j]);
      iou[i][j] = v;
      neg_iou[i][j] = -v;
    }
  }

  const HungarianResult matching = hungarian(neg_iou);
  for (std::size_t t = 0; t < cfg.iou_thresholds.size(); ++t) {
    const double thr = cfg.iou_thresholds[t];
    for (const auto& [i, j] : matching.pairs) {
      const double v = iou[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (cfg.strict_greater ? v > thr : v >= thr) {
        ++counts.tp[t];
      }
    }
  }
  return counts;
}

}  // namespace

EvalReport f1_report(const std::vector<std::vector<Polyline>>& preds,
                     const std::vector<std::vector<Polyline>>& gts, const EvalConfig& cfg,
                     int workers) {
  if (preds.size() != gts.size()) {
    throw std::invalid_argument("f1_report: prediction/ground-truth frame counts differ");
  }
  if (cfg.iou_thresholds.empty()) {
    throw std::invalid_argument("f1_report: no IoU thresholds configured");
  }
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n_frames = preds.size();
  const int n_workers = std::max(1, std::min<int>(workers, static_cast<int>(std::max<std::size_t>(n_frames, 1))));

  std::vector<std::vector<long>> tp(static_cast<std::size_t>(n_workers),
                                    std::vector<long>(cfg.iou_thresholds.size(), 0));
  std::vector<long> total_preds(static_cast<std::size_t>(n_workers), 0);
  std::vector<long> total_gts(static_cast<std::size_t>(n_workers), 0);

  auto run_chunk = [&](int w, std::size_t lo, std::size_t hi) {
    for (std::size_t f = lo; f < hi; ++f) {
      const FrameCounts c = evaluate_frame(preds[f], gts[f], cfg);
      for (std::size_t t = 0; t < c.tp.size(); ++t) tp[static_cast<std::size_t>(w)][t] += c.tp[t];
      total_preds[static_cast<std::size_t>(w)] += c.preds;
      total_gts[static_cast<std::size_t>(w)] += c.gts;
    }
  };

  if (n_workers == 1) {
    run_chunk(0, 0, n_frames);
  } else {
    std::vector<std::thread> threads;
    const std::size_t chunk = (n_frames + static_cast<std::size_t>(n_workers) - 1) / n_workers;
    for (int w = 0; w < n_workers; ++w) {
      const std::size_t lo = std::min(n_frames, static_cast<std::size_t>(w) * chunk);
      const std::size_t hi = std::min(n_frames, lo + chunk);
      threads.emplace_back(run_chunk, w, lo, hi);
    }
    for (auto& t : threads) t.join();
  }

  EvalReport report;
  report.frames = static_cast<long>(n_frames);
  long preds_sum = 0, gts_sum = 0;
  for (int w = 0; w < n_workers; ++w) {
    preds_sum += total_preds[static_cast<std::size_t>(w)];
    gts_sum += total_gts[static_cast<std::size_t>(w)];
  }
  for (std::size_t t = 0; t < cfg.iou_thresholds.size(); ++t) {
    ThresholdCounts c;
    c.threshold = cfg.iou_thresholds[t];
    for (int w = 0; w < n_workers; ++w) c.tp += tp[static_cast<std::size_t>(w)][t];
    c.fp = preds_sum - c.tp;
    c.fn = gts_sum - c.tp;
    c.precision = (c.tp + c.fp) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    c.recall = (c.tp + c.fn) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    c.f1 = (c.precision + c.recall) > 0.0 ? 2.0 * c.precision * c.recall / (c.precision + c.recall)
                                          : 0.0;
    report.per_threshold.push_back(c);
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.fps = report.wall_seconds > 0.0 ? static_cast<double>(n_frames) / report.wall_seconds : 0.0;
  return report;
}

FpsResult measure_fps(const std::function<void(int)>& process_frame, int n_frames,
                      int warmup_frames, int repeats) {
  if (n_frames < 1) {
    throw std::invalid_argument("measure_fps: need at least one frame");
  }
  repeats = std::max(1, repeats);
  for (int i = 0; i < std::min(warmup_frames, n_frames); ++i) process_frame(i);

  const auto start = std::chrono::steady_clock::now();
  for (int r = 0; r < repeats; ++r) {
    for (int i = 0; i < n_frames; ++i) process_frame(i);
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  FpsResult result;
  result.frames = n_frames;
  result.repeats = repeats;
  result.wall_seconds = elapsed;
  result.fps = elapsed > 0.0 ? static_cast<double>(n_frames) * repeats / elapsed : 0.0;
  return result;
}

}  // namespace lanegeom
