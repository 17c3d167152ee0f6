#pragma once
#include <vector>

namespace amfm {

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0; // score cutoff producing this point
};

// Ordered from (0,0) at +inf threshold to (1,1) at the minimum score.
struct RocCurve {
    std::vector<RocPoint> points;
};

struct ConfusionCounts {
    long tp = 0;
    long fp = 0;
    long tn = 0;
    long fn = 0;
    double pred_threshold = 0.0;
    double gt_threshold = 0.0;
};

enum class Mark { none, tp, fp, fn };

// Positive iff target > gt_threshold (strict).
std::vector<int> binarize_gt(const std::vector<double>& targets, double gt_threshold = 0.0);

// Sweep over descending unique scores with ties grouped into one step.
// Requires at least one positive and one negative label.
RocCurve roc_curve(const std::vector<double>& scores, const std::vector<int>& labels);

// Trapezoidal integral of the curve.
double auc(const RocCurve& curve);

// Brute-force rank statistic: P(score_pos > score_neg) + 0.5*P(tie).
double auc_pairwise(const std::vector<double>& scores, const std::vector<int>& labels);

// Predicted positive iff score >= pred_threshold; labels are 0/1.
ConfusionCounts confusion_at(const std::vector<double>& scores, const std::vector<int>& labels,
                             double pred_threshold);

// Per-block verdicts on the 45-cell frame grid.
std::vector<Mark> block_marks(const std::vector<double>& frame_scores,
                              const std::vector<double>& frame_targets,
                              double pred_threshold = 0.15, double gt_threshold = 0.0);

} // namespace amfm
