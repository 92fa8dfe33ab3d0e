#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmsense/data/frames.hpp"
#include "mmsense/tensor/tensor.hpp"

namespace mmsense::eval {

inline constexpr double kThreshold = 0.5;
inline constexpr double kAgreementRadiusPx = 5.0;

enum class Outcome { tp, fp, tn, fn };

inline std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::tp: return "TP";
    case Outcome::fp: return "FP";
    case Outcome::tn: return "TN";
    case Outcome::fn: return "FN";
  }
  return "?";
}

struct Decision {
  std::string frame_id;
  bool predicted_positive = false;
  bool gt_positive = false;
  std::optional<double> distance;  // centroid distance, present iff both masks are non-empty
  Outcome outcome = Outcome::tn;
  Regime regime = Regime::one_person;
};

/// Pixels with probability >= threshold. Accepts [H,W,1] or [1,H,W,1].
template <class T>
BinaryMask binarize(const ad::Tensor<T>& prob, double threshold = kThreshold) {
  const auto& s = prob.shape();
  std::size_t h = 0, w = 0;
  if (s.size() == 3 && s[2] == 1) {
    h = s[0];
    w = s[1];
  } else if (s.size() == 4 && s[0] == 1 && s[3] == 1) {
    h = s[1];
    w = s[2];
  } else {
    throw ShapeError("binarize: expected [H,W,1] or [1,H,W,1], got " + ad::to_string(s));
  }
  BinaryMask m(h, w);
  auto v = prob.data();
  for (std::size_t i = 0; i < v.size(); ++i) m.values[i] = static_cast<double>(v[i]) >= threshold ? 1 : 0;
  return m;
}

/// Mean (row, col) of set pixels.
inline PixelPoint centroid(const BinaryMask& m) {
  double r = 0.0, c = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < m.height; ++i)
    for (std::size_t j = 0; j < m.width; ++j)
      if (m.at(i, j)) {
        r += static_cast<double>(i);
        c += static_cast<double>(j);
        ++n;
      }
  if (n == 0) throw DataError("centroid of an empty mask");
  return {r / static_cast<double>(n), c / static_cast<double>(n)};
}

inline double distance(const PixelPoint& a, const PixelPoint& b) { return std::hypot(a.row - b.row, a.col - b.col); }

/// Outcome from the two flags and the centroid distance alone.
///
/// GT positive: TP when the prediction is non-empty, its centroid lies within
/// `radius` (inclusive) of the GT centroid, and no decoy centroid is strictly
/// nearer to it than the GT centroid; FN otherwise.
/// GT negative: TN for an empty prediction, FP otherwise.
inline Outcome classify(bool pred_positive, bool gt_positive, std::optional<double> dist, double radius,
                        bool decoy_nearer = false) {
  if (gt_positive) return pred_positive && dist && *dist <= radius && !decoy_nearer ? Outcome::tp : Outcome::fn;
  return pred_positive ? Outcome::fp : Outcome::tn;
}

/// Frame-level decision with an explicit GT label. A positive frame whose
/// GT mask is empty (object out of view) can only be FN.
inline Decision decide(const BinaryMask& pred, const BinaryMask& gt, bool gt_positive, double radius,
                       const std::vector<PixelPoint>& decoys, std::string frame_id = {}) {
  if (pred.height != gt.height || pred.width != gt.width) throw ShapeError("decide: mask shapes differ");
  Decision d;
  d.frame_id = std::move(frame_id);
  d.predicted_positive = !pred.empty();
  d.gt_positive = gt_positive;
  bool decoy_nearer = false;
  if (d.predicted_positive && !gt.empty()) {
    const PixelPoint pc = centroid(pred);
    d.distance = distance(pc, centroid(gt));
    for (const auto& q : decoys)
      if (distance(pc, q) < *d.distance) decoy_nearer = true;
  }
  d.outcome = classify(d.predicted_positive, d.gt_positive, d.distance, radius, decoy_nearer);
  return d;
}

/// Frame-level decision; the GT label is "GT mask non-empty".
inline Decision decide(const BinaryMask& pred, const BinaryMask& gt, double radius = kAgreementRadiusPx,
                       const std::vector<PixelPoint>& decoys = {}) {
  return decide(pred, gt, !gt.empty(), radius, decoys);
}

/// Decision for a dataset sample, using its label, regime and decoys.
inline Decision decide(const BinaryMask& pred, const Sample& s, double radius = kAgreementRadiusPx) {
  Decision d = decide(pred, s.mask, s.positive, radius, s.decoys, s.id);
  d.regime = s.regime;
  return d;
}

struct Counts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  friend bool operator==(const Counts&, const Counts&) = default;
  [[nodiscard]] std::size_t total() const { return tp + fp + tn + fn; }
};

/// Confusion counts and percentages; a metric with a zero denominator is absent.
struct EvalReport {
  Counts counts;
  std::optional<double> accuracy;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> precision;
};

inline std::optional<double> percent(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

inline EvalReport report(const Counts& c) {
  EvalReport r;
  r.counts = c;
  r.accuracy = percent(c.tp + c.tn, c.total());
  r.sensitivity = percent(c.tp, c.tp + c.fn);
  r.specificity = percent(c.tn, c.tn + c.fp);
  r.precision = percent(c.tp, c.tp + c.fp);
  return r;
}

inline EvalReport report(const std::vector<Decision>& decisions) {
  Counts c;
  for (const auto& d : decisions) {
    switch (d.outcome) {
      case Outcome::tp: ++c.tp; break;
      case Outcome::fp: ++c.fp; break;
      case Outcome::tn: ++c.tn; break;
      case Outcome::fn: ++c.fn; break;
    }
  }
  return report(c);
}

/// One report per regime present in `decisions`, plus "all".
inline std::map<std::string, EvalReport> report_by_regime(const std::vector<Decision>& decisions) {
  std::map<std::string, std::vector<Decision>> groups;
  for (const auto& d : decisions) groups[to_string(d.regime)].push_back(d);
  std::map<std::string, EvalReport> out;
  for (const auto& [k, v] : groups) out[k] = report(v);
  out["all"] = report(decisions);
  return out;
}

/// Columns in table order: accuracy, sensitivity, specificity, precision, then counts.
inline nlohmann::ordered_json to_json(const EvalReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(); };
  nlohmann::ordered_json j;
  j["accuracy"] = opt(r.accuracy);
  j["sensitivity"] = opt(r.sensitivity);
  j["specificity"] = opt(r.specificity);
  j["precision"] = opt(r.precision);
  j["counts"] = {{"TP", r.counts.tp}, {"FP", r.counts.fp}, {"TN", r.counts.tn}, {"FN", r.counts.fn}};
  return j;
}

/// Fixed-width text table, one row per report.
inline std::string format_table(const std::map<std::string, EvalReport>& reports) {
  auto cell = [](const std::optional<double>& v) {
    char buf[16];
    if (v)
      std::snprintf(buf, sizeof buf, "%10.1f", *v);
    else
      std::snprintf(buf, sizeof buf, "%10s", "-");
    return std::string(buf);
  };
  std::string out = "regime      accuracy sensitivity specificity  precision    TP    FP    TN    FN\n";
  for (const auto& [k, r] : reports) {
    char head[16], tail[64];
    std::snprintf(head, sizeof head, "%-8s", k.c_str());
    std::snprintf(tail, sizeof tail, " %5zu %5zu %5zu %5zu\n", r.counts.tp, r.counts.fp, r.counts.tn, r.counts.fn);
    out += std::string(head) + cell(r.accuracy) + "  " + cell(r.sensitivity) + "  " + cell(r.specificity) + " " +
           cell(r.precision) + tail;
  }
  return out;
}

}  // namespace mmsense::eval
