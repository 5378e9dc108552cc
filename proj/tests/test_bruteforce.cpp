#include <gtest/gtest.h>

#include "clickstorm/attack.hpp"
#include "clickstorm/bruteforce.hpp"
#include "clickstorm/reference_segmenters.hpp"
#include "clickstorm/synthetic.hpp"
#include "oracles.hpp"

using namespace clickstorm;

TEST(AutoStride, SmallImagesUseEveryPixel) {
  EXPECT_EQ(auto_stride(128, 128), 1);
  EXPECT_EQ(auto_stride(32, 20), 1);
  EXPECT_EQ(auto_stride(200, 200), 2);
  EXPECT_EQ(auto_stride(480, 640), 5);
  for (int h : {129, 300, 481, 1024})
    for (int w : {100, 333, 1000}) {
      const int s = auto_stride(h, w);
      const auto cells = [&](int st) { return ((h + st - 1) / st) * ((w + st - 1) / st); };
      if (h <= 128 && w <= 128) continue;
      EXPECT_LE(cells(s), 16384);
      if (s > 1) {
        EXPECT_GT(cells(s - 1), 16384);
      }
    }
}

TEST(GridSearch, OracleSegmenterScoresOneExactlyOnObject) {
  const auto s = make_synthetic_sample(0, 20, 5);
  OracleSegmenter seg(s.mask);
  const ProbMap prev(20, 20, 0.0);
  const auto g = grid_search(seg, s.image, s.mask, {}, prev, Polarity::positive, 1);
  ASSERT_EQ(g.rows, 20);
  ASSERT_EQ(g.cols, 20);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * 20 + x;
      EXPECT_EQ(g.valid[i], s.mask(x, y));
      EXPECT_EQ(g.iou[i], s.mask(x, y) ? 1.0 : 0.0);
    }
  ASSERT_TRUE(g.iou_min && g.iou_max);
  EXPECT_EQ(g.iou_min->value, 1.0);
  EXPECT_EQ(g.iou_max->value, 1.0);
}

TEST(GridSearch, StrideGivesCeilDimensions) {
  const auto s = make_synthetic_sample(1, 23, 5);
  auto seg = blob_segmenter({});
  const ProbMap prev(23, 23, 0.0);
  const auto g = grid_search(*seg, s.image, s.mask, {}, prev, Polarity::positive, 5);
  EXPECT_EQ(g.rows, 5);
  EXPECT_EQ(g.cols, 5);
  EXPECT_EQ(g.stride, 5);
  EXPECT_THROW(grid_search(*seg, s.image, s.mask, {}, prev, Polarity::positive, 0), Error);
}

TEST(GridSearch, MatchesDirectEvaluationAndIgnoresWorkerCount) {
  const auto s = make_synthetic_sample(2, 16, 5);
  const ProbMap prev(16, 16, 0.0);
  const SegmenterFactory factory = [] { return blob_segmenter({}); };
  const auto one = grid_search(factory, s.image, s.mask, {}, prev, Polarity::positive, 1, 1);
  const auto three = grid_search(factory, s.image, s.mask, {}, prev, Polarity::positive, 1, 3);
  EXPECT_EQ(one.iou, three.iou);
  EXPECT_EQ(one.biou, three.biou);
  auto seg = blob_segmenter({});
  double lo = 2.0;
  double hi = -1.0;
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      const std::vector<Click> c{{double(x), double(y), Polarity::positive, 5.0}};
      const auto scores = score_prediction(seg->predict({s.image, c, &prev}), s.mask, {});
      EXPECT_EQ(one.iou[static_cast<std::size_t>(y) * 16 + x], scores.iou);
      if (s.mask(x, y)) {
        lo = std::min(lo, scores.iou);
        hi = std::max(hi, scores.iou);
      }
    }
  EXPECT_EQ(one.iou_min->value, lo);
  EXPECT_EQ(one.iou_max->value, hi);
}

TEST(GridSearch, CellFailuresAreRecordedNotFatal) {
  class Picky : public Segmenter {
   public:
    BinaryMask gt;
    SegmenterCapabilities capabilities() const override { return {}; }
    ProbMap predict(const SegmenterRequest& r) override {
      if (r.clicks.back().x == 3.0) throw SegmenterError("column 3 is cursed");
      ProbMap out(gt.width(), gt.height());
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = gt[i];
      return out;
    }
    Vec2 dice_gradient(const SegmenterRequest&, const BinaryMask&, Direction, std::size_t) override { return {}; }
  } seg;
  seg.gt = BinaryMask(6, 6, 1);
  const Image img(6, 6, std::vector<double>(108, 0.5));
  const auto g = grid_search(seg, img, seg.gt, {}, ProbMap(6, 6, 0.0), Polarity::positive, 1);
  EXPECT_EQ(g.failures.size(), 6u);
  for (int y = 0; y < 6; ++y) {
    EXPECT_TRUE(g.failed[static_cast<std::size_t>(y) * 6 + 3]);
    EXPECT_TRUE(std::isnan(g.iou[static_cast<std::size_t>(y) * 6 + 3]));
  }
  EXPECT_EQ(g.iou_min->value, 1.0);
}

TEST(GridSearch, BoundsOptimizerFirstClick) {
  for (int i = 0; i < 6; ++i) {
    const auto s = make_synthetic_sample(i, 16, 21);
    auto base = std::shared_ptr<const DifferentiableSegmenter>(blob_segmenter({}));
    auto seg = rugged_segmenter(base, 900 + i, 2.0);
    const ProbMap prev(16, 16, 0.0);
    const auto g = grid_search(*seg, s.image, s.mask, {}, prev, Polarity::positive, 1);
    AttackConfig cfg;
    cfg.clicks = 1;
    const auto lo = run_adversarial_trajectory(*seg, s.image, s.mask, Direction::minimize, cfg);
    const auto hi = run_adversarial_trajectory(*seg, s.image, s.mask, Direction::maximize, cfg);
    EXPECT_LE(g.iou_min->value, lo.iou_curve[0]) << "image " << i;
    EXPECT_LE(hi.iou_curve[0], g.iou_max->value) << "image " << i;
  }
}

TEST(Heatmap, ColorRampEndpoints) {
  const auto cold = heatmap_color(0.0);
  const auto warm = heatmap_color(1.0);
  EXPECT_GT(cold[2], cold[0]);
  EXPECT_GT(warm[0], warm[2]);
  const auto gray = heatmap_color(std::nan(""));
  EXPECT_EQ(gray[0], gray[1]);
  EXPECT_EQ(gray[1], gray[2]);
}

TEST(Heatmap, SidecarRoundTrip) {
  const auto s = make_synthetic_sample(3, 12, 5);
  auto seg = blob_segmenter({});
  const auto g = grid_search(*seg, s.image, s.mask, {}, ProbMap(12, 12, 0.0), Polarity::positive, 2);
  const auto dir = oracle::temp_dir("heatmap");
  write_heatmap(g, GridChannel::biou, dir / "h.png");
  ASSERT_TRUE(std::filesystem::exists(dir / "h.png"));
  const auto side = read_heatmap_sidecar(dir / "h.json");
  EXPECT_EQ(side.stride, 2);
  EXPECT_EQ(side.channel, "biou");
  ASSERT_EQ(side.values.size(), 6u);
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * 6 + c;
      ASSERT_TRUE(side.values[r][c]);
      EXPECT_EQ(*side.values[r][c], g.biou[i]);
      EXPECT_EQ(side.valid[r][c], g.valid[i] != 0);
    }
  std::filesystem::remove_all(dir);
}

TEST(Spread, MaxMinusMin) {
  const std::vector<double> v{0.3, 0.9, 0.5};
  EXPECT_DOUBLE_EQ(spread(v), 0.6);
  EXPECT_THROW(spread(std::vector<double>{}), Error);
}
