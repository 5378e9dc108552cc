#include <gtest/gtest.h>

#include "clickstorm/attack.hpp"
#include "clickstorm/reference_segmenters.hpp"
#include "clickstorm/synthetic.hpp"
#include "oracles.hpp"

using namespace clickstorm;

TEST(Acceptance, StrictImprovementWithTolerance) {
  EXPECT_TRUE(iou_improves(0.4, 0.5, Direction::minimize, 1e-9));
  EXPECT_FALSE(iou_improves(0.5, 0.5, Direction::minimize, 1e-9));
  EXPECT_FALSE(iou_improves(0.5 - 1e-12, 0.5, Direction::minimize, 1e-9));
  EXPECT_TRUE(iou_improves(0.6, 0.5, Direction::maximize, 1e-9));
  EXPECT_FALSE(iou_improves(0.4, 0.5, Direction::maximize, 1e-9));
}

TEST(Acceptance, AllFourConditions) {
  AttackConfig cfg;
  cfg.ill_tolerance = 0.0;
  EXPECT_TRUE(accept_candidate(0.6, 0.5, 0.105, 0.1, true, Direction::maximize, cfg));
  EXPECT_FALSE(accept_candidate(0.6, 0.5, 0.105, 0.1, false, Direction::maximize, cfg));
  EXPECT_FALSE(accept_candidate(0.6, 0.5, 0.106, 0.1, true, Direction::maximize, cfg));
  EXPECT_FALSE(accept_candidate(0.5, 0.5, 0.1, 0.1, true, Direction::maximize, cfg));
  // With ILL0 = 0 only the absolute slack leaves room to move.
  EXPECT_FALSE(accept_candidate(0.6, 0.5, 1e-12, 0.0, true, Direction::maximize, cfg));
  cfg.ill_tolerance = 1e-9;
  EXPECT_TRUE(accept_candidate(0.6, 0.5, 1e-12, 0.0, true, Direction::maximize, cfg));
}

TEST(AttackConfig, Validation) {
  AttackConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  auto bad = cfg;
  bad.clicks = 0;
  EXPECT_THROW(bad.validate(), Error);
  bad = cfg;
  bad.iterations = 0;
  EXPECT_THROW(bad.validate(), Error);
  bad = cfg;
  bad.ill_weight = -1;
  EXPECT_THROW(bad.validate(), Error);
  bad = cfg;
  bad.ill_margin = 1.0;
  EXPECT_THROW(bad.validate(), Error);
}

namespace {

struct Fixture {
  SyntheticSample sample;
  std::unique_ptr<DifferentiableSegmenter> seg;
};

Fixture blob_fixture(int index, int size = 48) {
  return {make_synthetic_sample(index, size, 7), blob_segmenter({})};
}

Fixture rugged_fixture(int index, int size = 48) {
  auto base = std::shared_ptr<const DifferentiableSegmenter>(blob_segmenter({}));
  return {make_synthetic_sample(index, size, 7), rugged_segmenter(base, 500 + index, 2.0)};
}

}  // namespace

TEST(OptimizeClick, RecordsAndAcceptedFlagsAreConsistent) {
  for (int i = 0; i < 6; ++i) {
    auto f = i % 2 ? rugged_fixture(i) : blob_fixture(i);
    const auto& s = f.sample;
    AttackConfig cfg;
    cfg.iterations = 7;
    const ProbMap prev(s.mask.width(), s.mask.height(), 0.0);
    const auto dir = i < 3 ? Direction::minimize : Direction::maximize;
    const auto out = optimize_click(*f.seg, s.image, s.mask, {}, prev, dir, cfg);
    ASSERT_TRUE(out);
    ASSERT_EQ(out->records.size(), 7u);
    const auto regions = error_regions(prev, s.mask);
    const auto start = *baseline_click(regions, 5.0);
    const double ill0 = interaction_location_loss(start, regions, cfg.ill_sharpness);
    const std::vector<Click> first{start};
    double best = iou(binarize(f.seg->predict({s.image, first, &prev})), s.mask);
    bool any = false;
    Click last = start;
    for (const auto& r : out->records) {
      const Click c{r.x, r.y, start.polarity, 5.0};
      EXPECT_EQ(r.x, std::round(r.x));
      const bool expect = accept_candidate(r.iou, best, r.ill, ill0, is_valid_click(c, regions), dir, cfg);
      EXPECT_EQ(r.accepted, expect) << "image " << i << " iteration " << r.iteration;
      EXPECT_NEAR(r.ill, interaction_location_loss(c, regions, cfg.ill_sharpness), 1e-12);
      if (r.accepted) {
        best = r.iou;
        any = true;
        last = c;
      }
    }
    EXPECT_EQ(out->fallback, !any);
    EXPECT_EQ(out->click, last);
  }
}

TEST(OptimizeClick, NothingToDoWhenPredictionIsPerfect) {
  auto f = blob_fixture(0, 32);
  ProbMap perfect(32, 32);
  for (std::size_t i = 0; i < perfect.size(); ++i) perfect[i] = f.sample.mask[i] ? 1.0 : 0.0;
  EXPECT_FALSE(optimize_click(*f.seg, f.sample.image, f.sample.mask, {}, perfect, Direction::minimize, {}));
}

TEST(Trajectory, FirstClickOrdering) {
  for (int i = 0; i < 8; ++i) {
    auto f = i % 2 ? rugged_fixture(i) : blob_fixture(i);
    const auto& s = f.sample;
    AttackConfig cfg;
    cfg.clicks = 2;
    const auto base = run_baseline_trajectory(*f.seg, s.image, s.mask, 2);
    const auto lo = run_adversarial_trajectory(*f.seg, s.image, s.mask, Direction::minimize, cfg);
    const auto hi = run_adversarial_trajectory(*f.seg, s.image, s.mask, Direction::maximize, cfg);
    EXPECT_LE(lo.iou_curve[0], base.iou_curve[0]) << "image " << i;
    EXPECT_LE(base.iou_curve[0], hi.iou_curve[0]) << "image " << i;
    EXPECT_EQ(lo.kind, TrajectoryKind::minimizing);
    EXPECT_EQ(hi.kind, TrajectoryKind::maximizing);
  }
}

TEST(Trajectory, ShapeAndClickValidity) {
  auto f = rugged_fixture(5);
  const auto& s = f.sample;
  AttackConfig cfg;
  cfg.clicks = 6;
  cfg.iterations = 4;
  const auto t = run_adversarial_trajectory(*f.seg, s.image, s.mask, Direction::minimize, cfg);
  ASSERT_EQ(t.iou_curve.size(), 6u);
  ASSERT_EQ(t.biou_curve.size(), 6u);
  ASSERT_EQ(t.clicks.size(), t.diagnostics.size());
  ProbMap pred(s.mask.width(), s.mask.height(), 0.0);
  for (std::size_t k = 0; k < t.clicks.size(); ++k) {
    EXPECT_EQ(t.diagnostics[k].size(), 4u);
    EXPECT_TRUE(is_valid_click(t.clicks[k], pred, s.mask)) << "click " << k;
    const std::vector<Click> prefix(t.clicks.begin(), t.clicks.begin() + static_cast<long>(k) + 1);
    pred = f.seg->predict({s.image, prefix, &pred});
    EXPECT_EQ(iou(binarize(pred), s.mask), t.iou_curve[k]);
  }
}

TEST(Trajectory, SingleClickEqualsOneOptimization) {
  auto f = blob_fixture(2);
  const auto& s = f.sample;
  AttackConfig cfg;
  cfg.clicks = 1;
  const auto t = run_adversarial_trajectory(*f.seg, s.image, s.mask, Direction::maximize, cfg);
  const ProbMap prev(s.mask.width(), s.mask.height(), 0.0);
  const auto one = optimize_click(*f.seg, s.image, s.mask, {}, prev, Direction::maximize, cfg);
  ASSERT_EQ(t.clicks.size(), 1u);
  EXPECT_EQ(t.clicks[0], one->click);
  EXPECT_EQ(t.diagnostics[0], one->records);
  EXPECT_EQ(t.iou_curve[0], iou(binarize(one->prediction), s.mask));
}

TEST(Trajectory, OracleSegmenterReachesOneInBothDirections) {
  const auto s = make_synthetic_sample(1, 32, 3);
  OracleSegmenter seg(s.mask);
  AttackConfig cfg;
  for (auto dir : {Direction::minimize, Direction::maximize}) {
    const auto t = run_adversarial_trajectory(seg, s.image, s.mask, dir, cfg);
    EXPECT_EQ(t.iou_curve[0], 1.0);
    EXPECT_EQ(t.iou_curve.size(), 10u);
  }
}

TEST(Trajectory, Deterministic) {
  auto a = rugged_fixture(3);
  auto b = rugged_fixture(3);
  AttackConfig cfg;
  cfg.clicks = 4;
  const auto ta = run_adversarial_trajectory(*a.seg, a.sample.image, a.sample.mask, Direction::minimize, cfg);
  const auto tb = run_adversarial_trajectory(*b.seg, b.sample.image, b.sample.mask, Direction::minimize, cfg);
  EXPECT_EQ(ta.clicks, tb.clicks);
  EXPECT_EQ(ta.iou_curve, tb.iou_curve);
  EXPECT_EQ(ta.biou_curve, tb.biou_curve);
  EXPECT_EQ(ta.diagnostics, tb.diagnostics);
}

TEST(Trajectory, AllRejectedDegeneratesToBaseline) {
  for (int i = 0; i < 4; ++i) {
    auto f = rugged_fixture(i);
    const auto& s = f.sample;
    AttackConfig cfg;
    cfg.lr_override = 0.0;  // every candidate sits on the incumbent, so none strictly improves
    cfg.ill_weight = 1e12;
    const auto base = run_baseline_trajectory(*f.seg, s.image, s.mask, cfg.clicks);
    for (auto dir : {Direction::minimize, Direction::maximize}) {
      const auto t = run_adversarial_trajectory(*f.seg, s.image, s.mask, dir, cfg);
      for (const auto& records : t.diagnostics)
        for (const auto& r : records) EXPECT_FALSE(r.accepted);
      EXPECT_EQ(t.clicks, base.clicks);
      EXPECT_EQ(t.iou_curve, base.iou_curve);
      EXPECT_EQ(t.biou_curve, base.biou_curve);
    }
  }
}

TEST(Trajectory, SegmenterFailureCarriesRoundIndex) {
  class FailsLater : public DifferentiableSegmenter {
   public:
    std::unique_ptr<BlobSegmenter> inner = blob_segmenter({});
    Grid<double> logits(const SegmenterRequest& r) const override {
      if (r.clicks.size() > 1) throw SegmenterError("model crashed");
      return inner->logits(r);
    }
    std::vector<Vec2> logits_vjp(const SegmenterRequest& r, const Grid<double>& up) const override {
      return inner->logits_vjp(r, up);
    }
  } seg;
  const auto s = make_synthetic_sample(0, 32, 1);
  AttackConfig cfg;
  cfg.clicks = 3;
  try {
    run_adversarial_trajectory(seg, s.image, s.mask, Direction::minimize, cfg);
    FAIL() << "expected a segmenter error";
  } catch (const SegmenterError& e) {
    ASSERT_TRUE(e.click_index());
    EXPECT_EQ(*e.click_index(), 1u);
    EXPECT_NE(std::string(e.what()).find("round 1"), std::string::npos);
  }
}

TEST(IterationDeltas, Formula) {
  std::vector<IterationRecord> still(3, IterationRecord{0, 4, 4, 0, 0, 0, false});
  for (double d : iteration_deltas(still, 80, 100)) EXPECT_EQ(d, 0.0);
  std::vector<IterationRecord> moved{{1, 10, 10, 0, 0, 0, false}, {2, 11, 10, 0, 0, 0, false}};
  EXPECT_DOUBLE_EQ(iteration_deltas(moved, 80, 100)[0], 0.01);
  EXPECT_THROW(iteration_deltas(std::vector<IterationRecord>(1), 8, 8), Error);
}

TEST(IterationDeltas, MatchRecordedPositions) {
  auto f = rugged_fixture(6);
  const auto& s = f.sample;
  const ProbMap prev(s.mask.width(), s.mask.height(), 0.0);
  const auto out = optimize_click(*f.seg, s.image, s.mask, {}, prev, Direction::minimize, {});
  const auto d = iteration_deltas(out->records, s.mask.height(), s.mask.width());
  ASSERT_EQ(d.size(), out->records.size() - 1);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& a = out->records[i];
    const auto& b = out->records[i + 1];
    EXPECT_EQ(d[i], std::hypot(b.x - a.x, b.y - a.y) / 48.0);
  }
}
