#include "eval.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "errors.hpp"

namespace amfm {

std::vector<int> binarize_gt(const std::vector<double>& targets, double gt_threshold) {
    std::vector<int> labels(targets.size());
    for (size_t i = 0; i < targets.size(); ++i) labels[i] = targets[i] > gt_threshold ? 1 : 0;
    return labels;
}

namespace {

void require_paired(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw ParamError("scores and labels must pair up");
    if (scores.empty()) throw ParamError("empty score set");
}

} // namespace

RocCurve roc_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
    require_paired(scores, labels);
    long pos = 0, neg = 0;
    for (int l : labels) (l ? pos : neg) += 1;
    if (pos == 0 || neg == 0) throw DataError("ROC needs both classes present");

    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    long tp = 0, fp = 0;
    size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            (labels[order[i]] ? tp : fp) += 1;
            ++i;
        }
        curve.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                                static_cast<double>(tp) / static_cast<double>(pos), s});
    }
    return curve;
}

double auc(const RocCurve& curve) {
    if (curve.points.size() < 2) throw ParamError("curve needs at least two points");
    double area = 0.0;
    for (size_t i = 1; i < curve.points.size(); ++i) {
        const RocPoint& a = curve.points[i - 1];
        const RocPoint& b = curve.points[i];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
    }
    return area;
}

double auc_pairwise(const std::vector<double>& scores, const std::vector<int>& labels) {
    require_paired(scores, labels);
    std::vector<double> pos, neg;
    for (size_t i = 0; i < scores.size(); ++i) (labels[i] ? pos : neg).push_back(scores[i]);
    if (pos.empty() || neg.empty()) throw DataError("pairwise AUC needs both classes present");
    double credit = 0.0;
    for (double p : pos)
        for (double n : neg) credit += (p > n) ? 1.0 : (p == n ? 0.5 : 0.0);
    return credit / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

ConfusionCounts confusion_at(const std::vector<double>& scores, const std::vector<int>& labels,
                             double pred_threshold) {
    require_paired(scores, labels);
    ConfusionCounts c;
    c.pred_threshold = pred_threshold;
    for (size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= pred_threshold;
        if (pred && labels[i]) ++c.tp;
        else if (pred && !labels[i]) ++c.fp;
        else if (!pred && labels[i]) ++c.fn;
        else ++c.tn;
    }
    return c;
}

std::vector<Mark> block_marks(const std::vector<double>& frame_scores,
                              const std::vector<double>& frame_targets, double pred_threshold,
                              double gt_threshold) {
    if (frame_scores.size() != 45 || frame_targets.size() != 45)
        throw ParamError("frame score and target vectors must have 45 entries");
    std::vector<Mark> marks(45, Mark::none);
    for (size_t i = 0; i < 45; ++i) {
        const bool pred = frame_scores[i] >= pred_threshold;
        const bool gt = frame_targets[i] > gt_threshold;
        if (pred && gt) marks[i] = Mark::tp;
        else if (pred && !gt) marks[i] = Mark::fp;
        else if (!pred && gt) marks[i] = Mark::fn;
    }
    return marks;
}

} // namespace amfm
