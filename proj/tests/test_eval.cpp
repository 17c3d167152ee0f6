#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "core/errors.hpp"
#include "core/eval.hpp"
#include "core/rng.hpp"

using namespace amfm;

TEST_CASE("roc curve sweeps descending scores with grouped ties") {
    const std::vector<double> scores = {0.9, 0.8, 0.8, 0.1};
    const std::vector<int> labels = {1, 1, 0, 0};
    const RocCurve curve = roc_curve(scores, labels);
    REQUIRE(curve.points.size() == 4);
    CHECK(curve.points[0].fpr == 0.0);
    CHECK(curve.points[0].tpr == 0.0);
    CHECK(std::isinf(curve.points[0].threshold));
    CHECK(curve.points[1].fpr == 0.0);
    CHECK(curve.points[1].tpr == 0.5);
    CHECK(curve.points[1].threshold == 0.9);
    CHECK(curve.points[2].fpr == 0.5); // the 0.8 tie moves tp and fp together
    CHECK(curve.points[2].tpr == 1.0);
    CHECK(curve.points[3].fpr == 1.0);
    CHECK(curve.points[3].tpr == 1.0);

    CHECK(auc(curve) == doctest::Approx(0.875).epsilon(1e-12));
    CHECK(auc_pairwise(scores, labels) == doctest::Approx(0.875).epsilon(1e-12));
}

TEST_CASE("trapezoid and pairwise areas agree on random instances") {
    Rng rng(501);
    for (int trial = 0; trial < 10; ++trial) {
        const size_t n = 20 + rng.below(60);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        for (size_t i = 0; i < n; ++i) {
            // One-decimal scores force plenty of ties.
            scores[i] = std::floor(rng.uniform() * 10.0) / 10.0;
            labels[i] = rng.uniform() < 0.4 ? 1 : 0;
        }
        labels[0] = 1; // both classes present
        labels[1] = 0;
        const double a = auc(roc_curve(scores, labels));
        const double b = auc_pairwise(scores, labels);
        CHECK(std::abs(a - b) < 1e-9);
    }
}

TEST_CASE("auc is invariant under strictly monotone score transforms") {
    const std::vector<double> scores = {0.05, 0.3, 0.3, 0.7, 0.42, 0.9, 0.11, 0.64};
    const std::vector<int> labels = {0, 0, 1, 1, 0, 1, 0, 1};
    const double base = auc(roc_curve(scores, labels));

    std::vector<double> affine(scores.size()), cubed(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) {
        affine[i] = 0.5 * scores[i] + 0.2;
        cubed[i] = scores[i] * scores[i] * scores[i];
    }
    CHECK(auc(roc_curve(affine, labels)) == base);
    CHECK(auc(roc_curve(cubed, labels)) == base);
    CHECK(auc_pairwise(affine, labels) == auc_pairwise(scores, labels));
}

TEST_CASE("degenerate inputs are rejected") {
    CHECK_THROWS_AS(roc_curve({}, {}), ParamError);
    CHECK_THROWS_AS(roc_curve({0.5}, {1, 0}), ParamError);
    CHECK_THROWS_AS(roc_curve({0.5, 0.6}, {1, 1}), DataError);
    CHECK_THROWS_AS(roc_curve({0.5, 0.6}, {0, 0}), DataError);
    CHECK_THROWS_AS(auc_pairwise({0.5, 0.6}, {1, 1}), DataError);

    RocCurve stub;
    stub.points.push_back({0.0, 0.0, 1.0});
    CHECK_THROWS_AS(auc(stub), ParamError);
}

TEST_CASE("perfect and inverted rankings bound the area") {
    const std::vector<double> scores = {0.9, 0.8, 0.2, 0.1};
    CHECK(auc(roc_curve(scores, {1, 1, 0, 0})) == 1.0);
    CHECK(auc(roc_curve(scores, {0, 0, 1, 1})) == 0.0);
}

TEST_CASE("confusion counts treat the threshold as inclusive") {
    const std::vector<double> scores = {0.15, 0.149, 0.5, 0.1};
    const std::vector<int> labels = {0, 1, 1, 0};
    const ConfusionCounts c = confusion_at(scores, labels, 0.15);
    CHECK(c.tp == 1);
    CHECK(c.fp == 1);
    CHECK(c.fn == 1);
    CHECK(c.tn == 1);
    CHECK(c.pred_threshold == 0.15);

    CHECK_THROWS_AS(confusion_at({}, {}, 0.5), ParamError);
    CHECK_THROWS_AS(confusion_at({0.5}, {1, 0}, 0.5), ParamError);
}

TEST_CASE("ground truth binarization is strictly greater-than") {
    const std::vector<double> targets = {0.0, 0.001, -0.2, 1.0, 0.5};
    const std::vector<int> at_zero = binarize_gt(targets, 0.0);
    CHECK(at_zero == std::vector<int>{0, 1, 0, 1, 1});
    const std::vector<int> at_half = binarize_gt(targets, 0.5);
    CHECK(at_half == std::vector<int>{0, 0, 0, 1, 0});
}

TEST_CASE("block marks classify each grid cell") {
    std::vector<double> scores(45, 0.0), targets(45, 0.0);
    scores[0] = 0.5;
    targets[0] = 0.3; // tp
    scores[1] = 0.5;
    targets[1] = 0.0; // fp
    scores[2] = 0.0;
    targets[2] = 0.3; // fn
    scores[3] = 0.15; // exactly at the threshold counts as predicted
    targets[3] = 0.2;

    const std::vector<Mark> marks = block_marks(scores, targets, 0.15, 0.0);
    REQUIRE(marks.size() == 45);
    CHECK(marks[0] == Mark::tp);
    CHECK(marks[1] == Mark::fp);
    CHECK(marks[2] == Mark::fn);
    CHECK(marks[3] == Mark::tp);
    CHECK(marks[4] == Mark::none);

    std::vector<double> short_scores(44, 0.0);
    CHECK_THROWS_AS(block_marks(short_scores, targets, 0.15, 0.0), ParamError);
}
