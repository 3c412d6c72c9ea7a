#include "tanet/eval/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "tanet/core/error.hpp"

namespace tanet::eval {
namespace {

void require_aligned(const BoxList& results, const BoxList& gt, const char* who) {
    if (results.size() != gt.size())
        throw ArgumentError(std::string(who) + ": " + std::to_string(results.size()) +
                            " results vs " + std::to_string(gt.size()) + " truth frames");
}

// Frames where a comparison is possible at all.
std::vector<std::pair<BoundingBox, BoundingBox>> evaluable(const BoxList& results,
                                                           const BoxList& gt,
                                                           const char* who) {
    require_aligned(results, gt, who);
    std::vector<std::pair<BoundingBox, BoundingBox>> pairs;
    for (std::size_t i = 0; i < gt.size(); ++i)
        if (results[i] && gt[i]) pairs.emplace_back(*results[i], *gt[i]);
    if (pairs.empty())
        throw MetricError(std::string(who) + ": no frame carries both a result and a truth box");
    return pairs;
}

double ratio(long num, long den, bool& degenerate) {
    if (den == 0) {
        degenerate = true;
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

} // namespace

double f1_score(double precision, double recall) {
    const double sum = precision + recall;
    if (sum == 0.0) return 0.0;
    return 2.0 * precision * recall / sum;
}

double precision_rate(const BoxList& results, const BoxList& gt, double d) {
    if (d < 0.0) throw ArgumentError("precision_rate: negative pixel threshold");
    const auto pairs = evaluable(results, gt, "precision_rate");
    long hits = 0;
    for (const auto& [res, truth] : pairs)
        if (center_distance(res, truth) <= d) ++hits;
    return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

SuccessStats success_rate_curve(const BoxList& results, const BoxList& gt) {
    const auto pairs = evaluable(results, gt, "success_rate_curve");
    std::vector<double> overlaps;
    overlaps.reserve(pairs.size());
    for (const auto& [res, truth] : pairs) overlaps.push_back(iou(res, truth));

    const double n = static_cast<double>(overlaps.size());
    SuccessStats stats;
    stats.curve.resize(21);
    for (int k = 0; k <= 20; ++k) {
        const double t = k * 0.05;
        long above = 0;
        for (const double o : overlaps)
            if (o > t) ++above;
        stats.curve[k] = static_cast<double>(above) / n;
        stats.auc += stats.curve[k];
    }
    stats.auc /= 21.0;
    for (const double o : overlaps) {
        stats.ao += o;
        if (o > 0.5) stats.sr_050 += 1.0;
        if (o > 0.75) stats.sr_075 += 1.0;
    }
    stats.ao /= n;
    stats.sr_050 /= n;
    stats.sr_075 /= n;
    return stats;
}

LongTermStats longterm_prf(const BoxList& results, const BoxList& gt) {
    require_aligned(results, gt, "longterm_prf");
    LongTermStats stats;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (results[i]) {
            if (gt[i] && iou(*results[i], *gt[i]) >= 0.5)
                ++stats.tp;
            else
                ++stats.fp;
        } else if (gt[i]) {
            ++stats.fn;
        }
    }
    stats.precision = ratio(stats.tp, stats.tp + stats.fp, stats.degenerate);
    stats.recall = ratio(stats.tp, stats.tp + stats.fn, stats.degenerate);
    stats.f1 = f1_score(stats.precision, stats.recall);
    if (stats.degenerate)
        std::fprintf(stderr,
                     "warning: long-term precision/recall has an empty denominator, "
                     "reporting 0 by convention\n");
    return stats;
}

MetricReport evaluate(const BoxList& results, const BoxList& gt) {
    MetricReport report;
    report.pr_curve.resize(51);
    for (int d = 0; d <= 50; ++d) report.pr_curve[d] = precision_rate(results, gt, d);
    report.pr_at_20 = report.pr_curve[20];

    const SuccessStats ss = success_rate_curve(results, gt);
    report.sr_curve = ss.curve;
    report.auc = ss.auc;
    report.ao = ss.ao;
    report.sr_050 = ss.sr_050;
    report.sr_075 = ss.sr_075;

    const LongTermStats lt = longterm_prf(results, gt);
    report.lt_precision = lt.precision;
    report.lt_recall = lt.recall;
    report.lt_f1 = lt.f1;
    return report;
}

} // namespace tanet::eval
