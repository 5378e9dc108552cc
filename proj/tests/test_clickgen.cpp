#include <gtest/gtest.h>

#include "clickstorm/clickgen.hpp"
#include "clickstorm/reference_segmenters.hpp"
#include "oracles.hpp"

using namespace clickstorm;

TEST(BaselineClick, DeepestPointOfLargestRegion) {
  BinaryMask gt(20, 20, 0);
  for (int y = 2; y < 9; ++y)
    for (int x = 2; x < 9; ++x) gt(x, y) = 1;  // 7x7 square, center (5, 5)
  gt(15, 15) = 1;
  const auto c = baseline_click(ProbMap(20, 20, 0.0), gt);
  ASSERT_TRUE(c);
  EXPECT_EQ(c->x, 5.0);
  EXPECT_EQ(c->y, 5.0);
  EXPECT_EQ(c->polarity, Polarity::positive);
}

TEST(BaselineClick, NegativeWhenFalsePositiveDominates) {
  BinaryMask gt(16, 16, 0);
  gt(1, 1) = 1;
  ProbMap pred(16, 16, 0.0);
  pred(1, 1) = 1.0;
  for (int y = 6; y < 12; ++y)
    for (int x = 6; x < 12; ++x) pred(x, y) = 1.0;
  const auto c = baseline_click(pred, gt);
  ASSERT_TRUE(c);
  EXPECT_EQ(c->polarity, Polarity::negative);
  EXPECT_TRUE(is_valid_click(*c, pred, gt));
}

TEST(BaselineClick, TieBreaksToSmallestRowThenColumn) {
  // Even-sided square: four pixels share the maximal depth.
  BinaryMask gt(10, 10, 0);
  for (int y = 2; y < 6; ++y)
    for (int x = 2; x < 6; ++x) gt(x, y) = 1;
  const auto c = baseline_click(ProbMap(10, 10, 0.0), gt);
  ASSERT_TRUE(c);
  EXPECT_EQ(c->x, 3.0);
  EXPECT_EQ(c->y, 3.0);
}

TEST(BaselineClick, NoErrorGivesNothing) {
  BinaryMask gt(6, 6, 0);
  gt(2, 2) = 1;
  ProbMap pred(6, 6, 0.0);
  pred(2, 2) = 1.0;
  EXPECT_FALSE(baseline_click(pred, gt));
}

TEST(BaselineClick, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 40; ++trial) {
    const int w = 4 + static_cast<int>(rng() % 28);
    const int h = 4 + static_cast<int>(rng() % 28);
    const auto gt = oracle::random_mask(rng, w, h);
    const auto pred = oracle::random_prob(rng, w, h);
    const auto regions = error_regions(pred, gt);
    const auto c = baseline_click(regions, 5.0);
    if (regions.components.components.empty()) {
      EXPECT_FALSE(c);
      continue;
    }
    ASSERT_TRUE(c);
    // Largest component, lowest label on ties.
    const auto labels = oracle::component_labels(
        [&] {
          Grid<std::uint8_t> cls(w, h);
          for (std::size_t i = 0; i < cls.size(); ++i)
            cls[i] = regions.false_negative[i] ? 1 : (regions.false_positive[i] ? 2 : 0);
          return cls;
        }(),
        true);
    std::map<int, std::size_t> area;
    for (auto l : labels.data())
      if (l) ++area[l];
    int best = 0;
    for (const auto& [l, a] : area)
      if (best == 0 || a > area[best]) best = l;
    BinaryMask region(w, h);
    for (std::size_t i = 0; i < region.size(); ++i) region[i] = labels[i] == best ? 1 : 0;
    const auto [x, y] = oracle::deepest_pixel(region);
    EXPECT_EQ(c->x, x) << "trial " << trial;
    EXPECT_EQ(c->y, y) << "trial " << trial;
    EXPECT_TRUE(is_valid_click(*c, regions));
  }
}

TEST(ClickValidity, RoundsToNearestPixel) {
  BinaryMask gt(4, 4, 0);
  gt(2, 1) = 1;
  const ProbMap pred(4, 4, 0.0);
  EXPECT_TRUE(is_valid_click({2.4, 0.6, Polarity::positive}, pred, gt));
  EXPECT_FALSE(is_valid_click({2.6, 0.6, Polarity::positive}, pred, gt));
  EXPECT_FALSE(is_valid_click({2.0, 1.0, Polarity::negative}, pred, gt));
  EXPECT_FALSE(is_valid_click({-0.6, 1.0, Polarity::positive}, pred, gt));
  EXPECT_FALSE(is_valid_click({std::nan(""), 1.0, Polarity::positive}, pred, gt));
}

TEST(BaselineTrajectory, OracleSegmenterSaturatesAfterOneClick) {
  BinaryMask gt(24, 24, 0);
  for (int y = 6; y < 18; ++y)
    for (int x = 4; x < 14; ++x) gt(x, y) = 1;
  OracleSegmenter seg(gt);
  const Image img(24, 24, std::vector<double>(24 * 24 * 3, 0.5));
  const auto t = run_baseline_trajectory(seg, img, gt, 10);
  EXPECT_EQ(t.clicks.size(), 1u);
  ASSERT_EQ(t.iou_curve.size(), 10u);
  for (double v : t.iou_curve) EXPECT_EQ(v, 1.0);
  for (double v : t.biou_curve) EXPECT_EQ(v, 1.0);
}

TEST(BaselineTrajectory, EmptyGroundTruthIsAnError) {
  OracleSegmenter seg(BinaryMask(8, 8, 0));
  const Image img(8, 8, std::vector<double>(8 * 8 * 3, 0.5));
  EXPECT_THROW(run_baseline_trajectory(seg, img, BinaryMask(8, 8, 0), 3), Error);
}

TEST(BaselineTrajectory, EveryClickValidAtItsRound) {
  BinaryMask gt(32, 32, 0);
  for (int y = 4; y < 28; ++y)
    for (int x = 6; x < 20; ++x) gt(x, y) = 1;
  std::vector<double> rgb(32 * 32 * 3, 0.3);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      if (gt(x, y))
        for (int c = 0; c < 3; ++c) rgb[(y * 32 + x) * 3 + c] = 0.6;
  const Image img(32, 32, rgb);
  auto seg = blob_segmenter({});
  const auto t = run_baseline_trajectory(*seg, img, gt, 5);
  ProbMap pred(32, 32, 0.0);
  for (std::size_t k = 0; k < t.clicks.size(); ++k) {
    EXPECT_TRUE(is_valid_click(t.clicks[k], pred, gt)) << "click " << k;
    const std::vector<Click> prefix(t.clicks.begin(), t.clicks.begin() + static_cast<long>(k) + 1);
    pred = seg->predict({img, prefix, &pred});
  }
}

TEST(ExternalClicks, ParsesGroupsInFirstAppearanceOrder) {
  const auto groups = parse_external_clicks(
      "image_id,x,y,polarity\nb,1,2,positive\na,3.5,4,negative\nb,5,6,positive\n", 3.0);
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(groups[0].image_id, "b");
  EXPECT_EQ(groups[0].clicks.size(), 2u);
  EXPECT_EQ(groups[1].clicks[0], (Click{3.5, 4.0, Polarity::negative, 3.0}));
}

TEST(ExternalClicks, RejectsMalformedRows) {
  EXPECT_THROW(parse_external_clicks(""), Error);
  EXPECT_THROW(parse_external_clicks("id,x,y\n"), Error);
  EXPECT_THROW(parse_external_clicks("image_id,x,y,polarity\na,1,2\n"), Error);
  EXPECT_THROW(parse_external_clicks("image_id,x,y,polarity\na,one,2,positive\n"), Error);
  EXPECT_THROW(parse_external_clicks("image_id,x,y,polarity\na,1,2,maybe\n"), Error);
  EXPECT_THROW(parse_external_clicks("image_id,x,y,polarity\n,1,2,positive\n"), Error);
}

TEST(TrajectoryKind, NamesRoundTrip) {
  for (auto k : {TrajectoryKind::baseline, TrajectoryKind::minimizing, TrajectoryKind::maximizing,
                 TrajectoryKind::external})
    EXPECT_EQ(trajectory_kind_from_string(to_string(k)), k);
  EXPECT_THROW(trajectory_kind_from_string("sideways"), Error);
}
