#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mmsense/core/rng.hpp"
#include "mmsense/eval/evaluator.hpp"

namespace oracle {

struct MetricCheck {
  std::string name;
  std::size_t cases = 0;
  std::size_t mismatches = 0;
};

// Truth table written out case by case.
inline mmsense::eval::Outcome expected_outcome(bool pred, bool gt, std::optional<double> dist, bool decoy_nearer) {
  using mmsense::eval::Outcome;
  if (!gt) return pred ? Outcome::fp : Outcome::tn;
  if (!pred) return Outcome::fn;
  if (!dist) return Outcome::fn;
  if (decoy_nearer) return Outcome::fn;
  return *dist > 5.0 ? Outcome::fn : Outcome::tp;
}

// Every flag combination at the boundary distances and with no distance.
inline MetricCheck decide_table_check() {
  MetricCheck c{"decide.table"};
  const std::vector<std::optional<double>> dists{std::nullopt, 4.99, 5.0, 5.01};
  for (int pred = 0; pred < 2; ++pred)
    for (int gt = 0; gt < 2; ++gt)
      for (int decoy = 0; decoy < 2; ++decoy)
        for (const auto& d : dists) {
          ++c.cases;
          const auto got = mmsense::eval::classify(pred, gt, d, mmsense::eval::kAgreementRadiusPx, decoy);
          if (got != expected_outcome(pred, gt, d, decoy)) ++c.mismatches;
        }
  return c;
}

struct Centre {
  double row = 0.0, col = 0.0;
  bool any = false;
};

inline Centre centre_of(const mmsense::BinaryMask& m) {
  Centre c;
  std::size_t n = 0;
  for (std::size_t i = 0; i < m.values.size(); ++i)
    if (m.values[i]) {
      c.row += static_cast<double>(i / m.width);
      c.col += static_cast<double>(i % m.width);
      ++n;
    }
  if (n) {
    c.row /= static_cast<double>(n);
    c.col /= static_cast<double>(n);
    c.any = true;
  }
  return c;
}

inline mmsense::BinaryMask random_mask(std::size_t h, std::size_t w, double density, mmsense::CounterRng& r) {
  mmsense::BinaryMask m(h, w);
  if (r.uniform() < 0.3) return m;
  const auto r0 = static_cast<std::size_t>(r.below(h)), c0 = static_cast<std::size_t>(r.below(w));
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j)
      if (std::abs(static_cast<double>(i) - static_cast<double>(r0)) <= 2 &&
          std::abs(static_cast<double>(j) - static_cast<double>(c0)) <= 3 && r.uniform() < density)
        m.at(i, j) = 1;
  return m;
}

// Random masks through decide() and report(), recounted from the masks.
inline MetricCheck recount_check(std::uint64_t seed, std::size_t n) {
  using namespace mmsense;
  MetricCheck c{"report.recount", n};
  CounterRng r(seed);
  std::vector<eval::Decision> decisions;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const BinaryMask pred = random_mask(12, 16, 0.6, r), gt = random_mask(12, 16, 0.6, r);
    const bool gt_positive = !gt.empty() || r.uniform() < 0.1;
    std::vector<PixelPoint> decoys;
    if (r.uniform() < 0.5) decoys.push_back({r.uniform(0.0, 12.0), r.uniform(0.0, 16.0)});
    decisions.push_back(eval::decide(pred, gt, gt_positive, eval::kAgreementRadiusPx, decoys));

    const Centre p = centre_of(pred), g = centre_of(gt);
    bool hit = false;
    if (p.any && g.any) {
      const double d = std::sqrt((p.row - g.row) * (p.row - g.row) + (p.col - g.col) * (p.col - g.col));
      bool nearer = false;
      for (const auto& q : decoys)
        if (std::sqrt((p.row - q.row) * (p.row - q.row) + (p.col - q.col) * (p.col - q.col)) < d) nearer = true;
      hit = d <= 5.0 && !nearer;
    }
    if (gt_positive)
      (hit ? tp : fn)++;
    else
      (p.any ? fp : tn)++;
  }
  const auto rep = eval::report(decisions);
  auto pct = [](std::size_t a, std::size_t b) -> std::optional<double> {
    if (b == 0) return std::nullopt;
    return 100.0 * static_cast<double>(a) / static_cast<double>(b);
  };
  if (rep.counts.tp != tp) ++c.mismatches;
  if (rep.counts.fp != fp) ++c.mismatches;
  if (rep.counts.tn != tn) ++c.mismatches;
  if (rep.counts.fn != fn) ++c.mismatches;
  if (rep.accuracy != pct(tp + tn, n)) ++c.mismatches;
  if (rep.sensitivity != pct(tp, tp + fn)) ++c.mismatches;
  if (rep.specificity != pct(tn, tn + fp)) ++c.mismatches;
  if (rep.precision != pct(tp, tp + fp)) ++c.mismatches;
  return c;
}

}  // namespace oracle
