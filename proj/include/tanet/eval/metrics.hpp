#pragma once

#include <optional>
#include <vector>

#include "tanet/data/geometry.hpp"

namespace tanet::eval {

// Per-frame box sequence. An empty slot means no box: an unreported
// prediction on the result side, a target-absent frame on the truth side.
using BoxList = std::vector<std::optional<BoundingBox>>;

// Harmonic mean of precision and recall; 0/0 collapses to 0.
double f1_score(double precision, double recall);

// Fraction of evaluable frames (both boxes present) whose center distance
// is at most d pixels. Throws MetricError when nothing is evaluable.
double precision_rate(const BoxList& results, const BoxList& gt, double d);

struct SuccessStats {
    std::vector<double> curve; // success vs IoU threshold 0, 0.05, ..., 1.0
    double auc = 0.0;          // mean of the curve points
    double ao = 0.0;           // mean IoU over evaluable frames
    double sr_050 = 0.0;       // fraction with IoU strictly above 0.5
    double sr_075 = 0.0;
};
SuccessStats success_rate_curve(const BoxList& results, const BoxList& gt);

// Detection-style counts over the full lists: a reported box on a
// target-present frame is true positive iff IoU >= 0.5; reported with the
// target absent or overlapping too little is false positive; target present
// without a report is false negative. Empty-denominator ratios collapse to
// 0 and set the degenerate flag (also warned once on stderr).
struct LongTermStats {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long tp = 0, fp = 0, fn = 0;
    bool degenerate = false;
};
LongTermStats longterm_prf(const BoxList& results, const BoxList& gt);

struct MetricReport {
    std::vector<double> pr_curve; // precision vs center-error threshold 0..50 px
    std::vector<double> sr_curve; // success vs IoU threshold 0..1 step 0.05
    double auc = 0.0;
    double pr_at_20 = 0.0;
    double ao = 0.0;
    double sr_050 = 0.0;
    double sr_075 = 0.0;
    double lt_precision = 0.0;
    double lt_recall = 0.0;
    double lt_f1 = 0.0;
};

// Full short-term + long-term report over aligned per-frame lists.
MetricReport evaluate(const BoxList& results, const BoxList& gt);

} // namespace tanet::eval
