#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "test_util.hpp"
#include "vidpop/visual.hpp"

using namespace vidpop;
using namespace vidpop::visual;
using vidpop::testing::expect_code;
using vidpop::testing::TempDir;

namespace {

std::size_t max_gap(const std::vector<std::size_t>& idx) {
  std::size_t g = 0;
  for (std::size_t i = 1; i < idx.size(); ++i) g = std::max(g, idx[i] - idx[i - 1]);
  return g;
}

// Smallest achievable max gap over all k-subsets of 0..N-1 that contain both
// endpoints, by exhaustive enumeration.
std::size_t brute_force_min_max_gap(std::size_t n, std::size_t k) {
  std::size_t best = n;
  std::vector<bool> pick(n - 2, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(k - 2), true);
  std::sort(pick.begin(), pick.end());
  do {
    std::vector<std::size_t> idx{0};
    for (std::size_t i = 0; i < pick.size(); ++i) {
      if (pick[i]) idx.push_back(i + 1);
    }
    idx.push_back(n - 1);
    best = std::min(best, max_gap(idx));
  } while (std::next_permutation(pick.begin(), pick.end()));
  return best;
}

std::size_t brute_argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    bool beats_all_earlier = true;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (j < i ? v[j] >= v[i] : v[j] > v[i]) beats_all_earlier = false;
    }
    if (beats_all_earlier) return i;
  }
  return best;
}

Image random_image(std::size_t h, std::size_t w, std::size_t c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  Image img(h, w, c);
  for (double& v : img.data) v = d(rng);
  return img;
}

}  // namespace

// ------------------------------------------------------------ frame sampling

TEST(SampleFrameIndices, Examples) {
  std::vector<std::size_t> all40(40);
  std::iota(all40.begin(), all40.end(), std::size_t{0});
  EXPECT_EQ(sample_frame_indices(40, 40), all40);
  std::vector<std::size_t> even(40);
  for (std::size_t i = 0; i < 40; ++i) even[i] = 2 * i;
  EXPECT_EQ(sample_frame_indices(79, 40), even);
  EXPECT_EQ(sample_frame_indices(3, 40), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(sample_frame_indices(10, 1), std::vector<std::size_t>{0});
  expect_code(ErrorCode::EmptyVideo, [] { sample_frame_indices(0, 40); });
  expect_code(ErrorCode::ConfigError, [] { sample_frame_indices(10, 0); });
}

TEST(SampleFrameIndices, MatchesMinMaxGapOracle) {
  for (std::size_t n = 3; n <= 14; ++n) {
    for (std::size_t k = 2; k < n; ++k) {
      const auto idx = sample_frame_indices(n, k);
      ASSERT_EQ(idx.size(), k);
      EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
      EXPECT_EQ(idx.front(), 0u);
      EXPECT_EQ(idx.back(), n - 1);
      EXPECT_EQ(max_gap(idx), brute_force_min_max_gap(n, k)) << n << " " << k;
    }
  }
}

TEST(OpeningFrameIndices, Examples) {
  std::vector<std::size_t> want(18);
  for (std::size_t i = 0; i < 18; ++i) want[i] = 10 * i;
  EXPECT_EQ(opening_frame_indices(30, 60), want);
  EXPECT_EQ(opening_frame_indices(30, 6), want);
  for (std::size_t i = 0; i < 18; ++i) want[i] = 5 * i;
  EXPECT_EQ(opening_frame_indices(30, 3), want);
  EXPECT_EQ(opening_frame_indices(1, 10),
            (std::vector<std::size_t>{0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3, 4, 4, 4, 5, 5, 5}));
  expect_code(ErrorCode::ConfigError, [] { opening_frame_indices(0, 10); });
  expect_code(ErrorCode::ConfigError, [] { opening_frame_indices(-5, 10); });
}

TEST(OpeningFrameIndices, NondecreasingAndInRange) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> fps(0.5, 120.0), dur(0.05, 30.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const double f = fps(rng), d = dur(rng);
    const auto idx = opening_frame_indices(f, d);
    ASSERT_EQ(idx.size(), 18u);
    EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
    EXPECT_EQ(idx[0], 0u);
    EXPECT_LT(static_cast<double>(idx.back()), std::ceil(d * f));
  }
}

// ----------------------------------------------------------------- thumbnail

TEST(RecommendThumbnail, Examples) {
  EXPECT_EQ(recommend_thumbnail(std::vector<double>{0.1, 0.9, 0.5}), 1u);
  EXPECT_EQ(recommend_thumbnail(std::vector<double>{0.7, 0.7}), 0u);
  expect_code(ErrorCode::EmptyInput, [] { recommend_thumbnail(std::vector<double>{}); });
}

TEST(RecommendThumbnail, BruteForceAndMonotoneInvariance) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> s(1 + rng() % 40);
    for (double& v : s) v = std::round(d(rng) * 20.0) / 20.0;  // coarse grid forces ties
    const std::size_t want = brute_argmax(s);
    EXPECT_EQ(recommend_thumbnail(s), want);
    std::vector<double> t(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) t[i] = std::exp(3.0 * s[i]) - 7.0;
    EXPECT_EQ(recommend_thumbnail(t), want);
  }
}

TEST(ScoreFrames, Contract) {
  nn::LogisticHead head(3);
  const std::vector<nn::Vec> frames{{1, 2, 3}, {-4, 0, 9}};
  for (double s : score_frames(frames, head)) EXPECT_EQ(s, 0.5);
  EXPECT_TRUE(score_frames({}, head).empty());
  expect_code(ErrorCode::ShapeError, [&] { score_frames({{1, 2}}, head); });

  std::mt19937_64 rng(13);
  vidpop::testing::randomize(head.params(), rng, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const nn::Vec a = vidpop::testing::random_vec(3, rng), b = vidpop::testing::random_vec(3, rng);
    const auto& w = head.layer().weight.value.storage();
    const double wa = nn::dot(w, a), wb = nn::dot(w, b);
    const auto s = score_frames({a, b}, head);
    if (wa > wb) {
      EXPECT_GT(s[0], s[1]);
    } else if (wb > wa) {
      EXPECT_GT(s[1], s[0]);
    }
  }
}

TEST(ThumbnailHead, GaussianBlobs) {
  const auto data = make_feature_blobs(1000, 32, 4.0, 3);
  const auto r = train_thumbnail_head(data, 32, {0.1, 30, 16, 3, 0.0});
  EXPECT_GE(r.test_accuracy, 0.90);
  EXPECT_EQ(r.sizes.test, 100u);
  expect_code(ErrorCode::ShapeError, [&] { train_thumbnail_head(data, 16, {}); });
  expect_code(ErrorCode::EmptyDataset, [] { train_thumbnail_head({}, 16, {}); });
}

// ------------------------------------------------------------------- opening

TEST(OpeningModel, AttentionContract) {
  OpeningModel m({6, 5, 4});
  nn::Rng rng(21);
  m.init(rng);
  std::mt19937_64 g(22);
  const nn::Vec same = vidpop::testing::random_vec(6, g);
  const auto uniform = score_opening(FrameFeatures(18, same), m);
  ASSERT_EQ(uniform.frame_attention.size(), 18u);
  for (double w : uniform.frame_attention) EXPECT_NEAR(w, 1.0 / 18.0, 1e-12);

  expect_code(ErrorCode::ShapeError, [&] { score_opening(FrameFeatures(17, same), m); });
  expect_code(ErrorCode::ShapeError, [&] { score_opening(FrameFeatures(19, same), m); });
  expect_code(ErrorCode::ShapeError, [&] { score_opening(FrameFeatures(18, nn::Vec(5, 0.0)), m); });

  for (int trial = 0; trial < 50; ++trial) {
    FrameFeatures f(18);
    for (auto& v : f) v = vidpop::testing::random_vec(6, g, 2.0);
    const auto a = score_opening(f, m);
    EXPECT_NEAR(std::accumulate(a.frame_attention.begin(), a.frame_attention.end(), 0.0), 1.0, 1e-9);
    const std::size_t i = g() % 18, j = g() % 18;
    std::swap(f[i], f[j]);
    const auto b = score_opening(f, m);
    EXPECT_NEAR(b.frame_attention[i], a.frame_attention[j], 1e-12);
    EXPECT_NEAR(b.frame_attention[j], a.frame_attention[i], 1e-12);
    EXPECT_NEAR(b.probability_popular, a.probability_popular, 1e-12);
  }
}

TEST(OpeningModel, GradientCheck) {
  OpeningModel m({5, 4, 3});
  nn::Rng rng(23);
  m.init(rng);
  std::vector<nn::Example<FrameFeatures>> batch;
  for (int k = 0; k < 3; ++k) {
    FrameFeatures f(18);
    for (auto& v : f) v = vidpop::testing::random_vec(5, rng);
    batch.push_back({f, k % 2});
  }
  const auto rep = nn::check_classifier_gradients<FrameFeatures>(m, batch);
  EXPECT_LE(rep.max_relative_error, 1e-4) << rep.worst_param;

  // input gradients against central differences of the logit
  const FrameFeatures x = batch[0].input;
  const auto g = m.input_gradients(x);
  double worst = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    for (std::size_t j = 0; j < x[t].size(); ++j) {
      FrameFeatures hi = x, lo = x;
      hi[t][j] += 1e-5;
      lo[t][j] -= 1e-5;
      const double num = (m.forward(hi).logit - m.forward(lo).logit) / 2e-5;
      worst = std::max(worst, nn::relative_error(g[t][j], num));
    }
  }
  EXPECT_LE(worst, 1e-4);
}

TEST(OpeningModel, PlantedSignalFrameGetsMaxAttention) {
  PlantedOpeningGenerator gen(4);
  std::vector<nn::Example<FrameFeatures>> train;
  for (auto& v : gen.batch(400)) train.push_back({v.frames, v.label});
  OpeningModel m({16, 16, 16});
  nn::train_classifier<OpeningModel, FrameFeatures>(m, train, {}, {0.1, 20, 16, 4, 0.0});
  int hits = 0;
  for (int i = 0; i < 200; ++i) {
    const PlantedVideo v = gen.next(1);
    const auto s = score_opening(v.frames, m);
    hits += recommend_thumbnail(s.frame_attention) == v.signal_frame ? 1 : 0;
  }
  EXPECT_GE(hits, 180);
}

TEST(OpeningModel, TrainHelperSplitsAndValidates) {
  PlantedOpeningGenerator gen(5);
  std::vector<nn::Example<FrameFeatures>> data;
  for (auto& v : gen.batch(300)) data.push_back({v.frames, v.label});
  const auto r = train_opening_model(data, {16, 16, 16}, {0.1, 15, 16, 5, 0.0});
  EXPECT_EQ(r.sizes.train, 240u);
  EXPECT_EQ(r.sizes.test, 30u);
  EXPECT_GE(r.test_accuracy, 0.9);
  data[7].input.pop_back();
  expect_code(ErrorCode::ShapeError, [&] { train_opening_model(data, {16, 16, 16}, {}); });
  expect_code(ErrorCode::EmptyDataset, [&] { train_opening_model({}, {16, 16, 16}, {}); });
}

// ------------------------------------------------------------------- tinycnn

TEST(TinyCnn, ShapesAndErrors) {
  TinyCnn cnn(3);
  nn::Rng rng(31);
  cnn.init(rng);
  std::mt19937_64 g(32);
  const auto out = tinycnn_extract(random_image(32, 32, 3, g), cnn);
  EXPECT_EQ(out.features.size(), 16u);
  EXPECT_EQ(out.activations.shape(), (std::vector<std::size_t>{16, 8, 8}));
  EXPECT_EQ(tinycnn_extract(random_image(8, 9, 3, g), cnn).activations.shape(),
            (std::vector<std::size_t>{16, 2, 2}));
  expect_code(ErrorCode::ShapeError, [&] { tinycnn_extract(random_image(7, 32, 3, g), cnn); });
  expect_code(ErrorCode::ShapeError, [&] { tinycnn_extract(random_image(16, 16, 1, g), cnn); });
}

TEST(TinyCnn, ZeroImageMatchesDirectEvaluation) {
  TinyCnn cnn(1);
  nn::Rng rng(33);
  cnn.init(rng);
  std::mt19937_64 g(34);
  for (nn::Param* p : {&cnn.conv1.bias, &cnn.conv2.bias}) vidpop::testing::randomize(*p, g, 0.5);
  const std::size_t side = 16;
  const auto out = tinycnn_extract(Image(side, side, 1, 0.0), cnn);

  // Direct evaluation: after conv1 every pixel of channel i equals b1_i, so
  // pool1 is relu(b1) everywhere; conv2 then sums only the in-bounds taps.
  const std::size_t s2 = side / 2;
  std::vector<double> r1(8);
  for (std::size_t i = 0; i < 8; ++i) r1[i] = std::max(0.0, cnn.conv1.bias.value[i]);
  for (std::size_t o = 0; o < 16; ++o) {
    std::vector<double> a(s2 * s2);
    for (std::size_t y = 0; y < s2; ++y) {
      for (std::size_t x = 0; x < s2; ++x) {
        double z = cnn.conv2.bias.value[o];
        for (std::size_t i = 0; i < 8; ++i) {
          for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
              const int yy = static_cast<int>(y) + ky - 1, xx = static_cast<int>(x) + kx - 1;
              if (yy < 0 || xx < 0 || yy >= static_cast<int>(s2) || xx >= static_cast<int>(s2)) continue;
              z += cnn.conv2.weight.value[cnn.conv2.widx(o, i, static_cast<std::size_t>(ky),
                                                         static_cast<std::size_t>(kx))] *
                   r1[i];
            }
          }
        }
        a[y * s2 + x] = std::max(0.0, z);
      }
    }
    double mean = 0.0;
    for (std::size_t y = 0; y < s2; y += 2) {
      for (std::size_t x = 0; x < s2; x += 2) {
        mean += std::max({a[y * s2 + x], a[y * s2 + x + 1], a[(y + 1) * s2 + x], a[(y + 1) * s2 + x + 1]});
      }
    }
    mean /= static_cast<double>((s2 / 2) * (s2 / 2));
    EXPECT_NEAR(out.features[o], mean, 1e-12) << o;
  }
}

TEST(TinyCnn, ClassifierGradientCheck) {
  for (std::uint64_t seed : {41u, 42u}) {
    CnnClassifier m(2);
    nn::Rng rng(seed);
    m.init(rng);
    std::mt19937_64 g(seed);
    for (nn::Param* p : m.params()) {
      if (p->value.rank() == 1) vidpop::testing::randomize(*p, g, 0.2);
    }
    std::vector<nn::Example<Image>> batch{{random_image(8, 12, 2, g), 1}, {random_image(10, 8, 2, g), 0}};
    const auto rep = nn::check_classifier_gradients<Image>(m, batch);
    EXPECT_LE(rep.max_relative_error, 1e-4) << rep.worst_param << "[" << rep.worst_index << "]";
    EXPECT_GT(rep.checked, rep.skipped);
  }
}

// ------------------------------------------------------------------- gradcam

TEST(GradCam, ZeroGradientGivesZeroMap) {
  std::mt19937_64 g(51);
  Tensor a({4, 3, 3});
  for (double& v : a.values()) v = std::uniform_real_distribution<double>(0, 1)(g);
  const auto m = gradcam(a, Tensor({4, 3, 3}), 12, 12);
  for (double v : m.grid) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(m.raw_max, 0.0);
}

TEST(GradCam, SingleChannelUniformGradient) {
  Tensor a({1, 3, 4}, {0.5, -1.0, 2.0, 0.0, 1.0, 3.0, -0.5, 0.25, 4.0, 0.0, 1.5, -2.0});
  Tensor grad({1, 3, 4}, 0.7);
  const auto m = gradcam(a, grad, 3, 4);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(m.grid[i], std::max(0.0, a[i]) / 4.0, 1e-15);
  EXPECT_NEAR(m.raw_max, 0.7 * 4.0, 1e-12);
}

TEST(GradCam, ShapeMismatchAndRange) {
  expect_code(ErrorCode::ShapeError, [] { gradcam(Tensor({2, 3, 3}), Tensor({2, 3, 4}), 8, 8); });
  expect_code(ErrorCode::ShapeError, [] { gradcam(Tensor({9}), Tensor({9}), 8, 8); });
  std::mt19937_64 g(52);
  for (int trial = 0; trial < 100; ++trial) {
    Tensor a({3, 4, 4}), gr({3, 4, 4});
    for (double& v : a.values()) v = std::uniform_real_distribution<double>(0, 2)(g);
    for (double& v : gr.values()) v = std::uniform_real_distribution<double>(-1, 1)(g);
    const auto m = gradcam(a, gr, 16, 13);
    ASSERT_EQ(m.grid.size(), 16u * 13u);
    const auto [lo, hi] = std::minmax_element(m.grid.begin(), m.grid.end());
    if (m.raw_max > 0.0) {
      EXPECT_EQ(*lo, 0.0);
      EXPECT_EQ(*hi, 1.0);
    } else {
      EXPECT_EQ(*hi, 0.0);
    }
  }
}

TEST(GradCam, InvariantToPositiveScalingOfClassScore) {
  CnnClassifier m(1);
  nn::Rng rng(53);
  m.init(rng);
  std::mt19937_64 g(54);
  const Image img = random_image(24, 20, 1, g);
  const auto base = m.saliency(img);
  for (double c : {0.01, 3.0, 250.0}) {
    CnnClassifier scaled = m;
    for (double& v : scaled.head().layer().weight.value.values()) v *= c;
    for (double& v : scaled.head().layer().bias.value.values()) v *= c;
    const auto s = scaled.saliency(img);
    for (std::size_t i = 0; i < base.grid.size(); ++i) EXPECT_NEAR(s.grid[i], base.grid[i], 1e-9);
  }
}

TEST(GradCam, PlantedPatchIsHot) {
  for (std::uint64_t seed : {1000u, 1001u}) {
    const auto imgs = make_patch_images(200, seed);
    std::vector<nn::Example<Image>> train;
    for (std::size_t i = 0; i < 160; ++i) train.push_back({imgs[i].image, imgs[i].label});
    CnnClassifier m(1);
    nn::train_classifier<CnnClassifier, Image>(m, train, {}, {0.3, 10, 8, seed, 0.0});
    double correct = 0.0, ratio = 0.0;
    int positives = 0;
    for (std::size_t i = 160; i < 200; ++i) {
      correct += m.predict(imgs[i].image) == imgs[i].label ? 1.0 : 0.0;
      if (imgs[i].label == 1) {
        ratio += patch_heat_ratio(m.saliency(imgs[i].image), imgs[i].patch_y, imgs[i].patch_x, 8);
        ++positives;
      }
    }
    EXPECT_GE(correct / 40.0, 0.9);
    EXPECT_GE(ratio / positives, 2.0);
  }
}

TEST(TinyCnn, EndToEndTrainHelper) {
  const auto imgs = make_patch_images(200, 1002);
  std::vector<nn::Example<Image>> data;
  for (const auto& p : imgs) data.push_back({p.image, p.label});
  const auto r = train_cnn_classifier(data, 1, {0.3, 10, 8, 1002, 0.0});
  EXPECT_EQ(r.sizes.train + r.sizes.validation + r.sizes.test, 200u);
  EXPECT_GE(r.test_accuracy, 0.9);
  EXPECT_GE(r.history.best_epoch, 0);
}

// ------------------------------------------------------------------ image io

TEST(ImageIo, NetpbmRoundTrip) {
  TempDir dir;
  std::mt19937_64 g(61);
  for (std::size_t c : {1u, 3u}) {
    Image img = random_image(5, 7, c, g);
    for (double& v : img.data) v = std::round(v * 255.0) / 255.0;
    const auto path = dir / frame_filename(c, c == 1 ? "pgm" : "ppm");
    write_image(path, img);
    const Image back = read_image(path);
    ASSERT_EQ(back.channels, c);
    for (std::size_t i = 0; i < img.data.size(); ++i) EXPECT_NEAR(back.data[i], img.data[i], 1e-12);
  }
  EXPECT_EQ(list_frames(dir.path()).size(), 2u);
  EXPECT_EQ(frame_filename(7), "frame_00007.ppm");
}

TEST(ImageIo, HeaderCommentsAndErrors) {
  const std::string pgm = std::string("P5\n# made by hand\n2 1\n255\n") + '\x00' + '\xff';
  const Image img = decode_netpbm(pgm);
  EXPECT_EQ(img.width, 2u);
  EXPECT_EQ(img.data, (std::vector<double>{0.0, 1.0}));
  expect_code(ErrorCode::FormatError, [&] { decode_netpbm(pgm.substr(0, pgm.size() - 1)); });
  expect_code(ErrorCode::FormatError, [] { decode_netpbm("P3\n1 1\n255\n0 0 0\n"); });
  expect_code(ErrorCode::FormatError, [] { decode_netpbm("P5\n1 1\n65535\n\x01\x02"); });
  expect_code(ErrorCode::IoError, [] { read_image("/nonexistent/frame.ppm"); });
}

TEST(ImageIo, SaliencyPgmAndSidecar) {
  TempDir dir;
  SaliencyMap m{2, 2, {0.0, 0.5, 1.0, 0.25}, 7, 0.1, 3.5};
  write_saliency(dir / "heat.pgm", m);
  const Image back = read_image(dir / "heat.pgm");
  EXPECT_EQ(back.channels, 1u);
  EXPECT_NEAR(back.data[1], 128.0 / 255.0, 1e-12);
  std::ifstream in(dir / "heat.pgm.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("frame_index"), 7);
  EXPECT_EQ(j.at("min"), 0.1);
  EXPECT_EQ(j.at("max"), 3.5);
}

// ---------------------------------------------------------------- persistence

TEST(VisualPersist, ThumbnailOpeningAndCnnRoundTrip) {
  TempDir dir;
  nn::Rng rng(71);
  std::mt19937_64 g(72);

  ThumbnailModel t{nn::LogisticHead(6, "thumbnail.head"), {}};
  t.head.init(rng);
  save_thumbnail_model(dir / "t.nnk", t);
  const auto t2 = load_thumbnail_model(dir / "t.nnk");
  const std::vector<nn::Vec> feats{vidpop::testing::random_vec(6, g), vidpop::testing::random_vec(6, g)};
  EXPECT_EQ(score_frames(feats, t2.head), score_frames(feats, t.head));
  EXPECT_EQ(t2.backbone_name(), "external");

  CnnClassifier cnn(3);
  cnn.init(rng);
  save_cnn_classifier(dir / "c.nnk", cnn);
  const auto cnn2 = load_cnn_classifier(dir / "c.nnk");
  const Image img = random_image(16, 16, 3, g);
  EXPECT_EQ(cnn2.logit(img), cnn.logit(img));
  ThumbnailModel ct = thumbnail_from_cnn(cnn);
  save_thumbnail_model(dir / "ct.nnk", ct);
  const auto ct2 = load_thumbnail_model(dir / "ct.nnk");
  EXPECT_EQ(ct2.recommend_images({img, img}).scores[0], nn::sigmoid(cnn.logit(img)));
  expect_code(ErrorCode::ConfigError, [&] { t2.recommend_images({img}); });

  OpeningBundle ob{OpeningModel({16, 8, 4}), cnn.backbone()};
  ob.model.init(rng);
  save_opening_model(dir / "o.nnk", ob);
  const auto ob2 = load_opening_model(dir / "o.nnk");
  std::vector<Image> frames;
  for (int i = 0; i < 18; ++i) frames.push_back(random_image(16, 16, 3, g));
  const auto a = score_video_frames(frames, ob), b = score_video_frames(frames, ob2);
  EXPECT_EQ(a.score.probability_popular, b.score.probability_popular);
  ASSERT_EQ(b.saliency.size(), 18u);
  EXPECT_EQ(b.saliency[5].frame_index, 5u);
  for (const auto& s : b.saliency) {
    for (double v : s.grid) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  frames.pop_back();
  expect_code(ErrorCode::ShapeError, [&] { score_video_frames(frames, ob); });
  expect_code(ErrorCode::FormatError, [&] { load_opening_model(dir / "t.nnk"); });
}
