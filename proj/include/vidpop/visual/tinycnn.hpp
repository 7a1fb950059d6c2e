#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "vidpop/nnkern.hpp"
#include "vidpop/visual/image.hpp"

namespace vidpop::visual {

using nn::Tensor;
using nn::Vec;

inline constexpr std::size_t kTinyCnnFeatures = 16;
inline constexpr std::size_t kTinyCnnMinSide = 8;

/// conv3x3(8) -> ReLU -> maxpool2 -> conv3x3(16) -> ReLU -> maxpool2 -> GAP.
struct TinyCnn {
  nn::Conv3x3 conv1;
  nn::Conv3x3 conv2;

  TinyCnn() : TinyCnn(1) {}
  explicit TinyCnn(std::size_t in_channels, const std::string& name = "tinycnn")
      : conv1(in_channels, 8, name + ".conv1"), conv2(8, kTinyCnnFeatures, name + ".conv2") {}

  std::size_t in_channels() const { return conv1.in_channels(); }

  void init(nn::Rng& rng) {
    conv1.init(rng);
    conv2.init(rng);
  }

  nn::ParamRefs params() {
    nn::ParamRefs out = conv1.params();
    nn::append(out, conv2.params());
    return out;
  }
};

struct TinyCnnTrace {
  Tensor input;
  Tensor z1;
  nn::MaxPoolResult p1;
  Tensor z2;
  nn::MaxPoolResult p2;  // p2.output holds the retained activation maps
  Vec features;
};

/// HWC image -> CHW tensor, after size and channel checks.
inline Tensor image_to_chw(const Image& img, std::size_t expected_channels) {
  if (img.height < kTinyCnnMinSide || img.width < kTinyCnnMinSide) {
    fail(ErrorCode::ShapeError, "image " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                                    " is smaller than 8x8");
  }
  nn::require_dim(img.channels, expected_channels, "image channels");
  Tensor t({img.channels, img.height, img.width});
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      for (std::size_t c = 0; c < img.channels; ++c) t(c, y, x) = img.at(y, x, c);
    }
  }
  return t;
}

namespace detail {

inline void record_relu(const Tensor& z, nn::KinkProbe& probe) {
  for (double v : z.values()) {
    probe.pattern.push_back(v > 0.0 ? 1 : 0);
    probe.min_margin = std::min(probe.min_margin, std::abs(v));
  }
}

}  // namespace detail

inline TinyCnnTrace tinycnn_trace(const Image& img, const TinyCnn& cnn, nn::KinkProbe* probe = nullptr) {
  TinyCnnTrace t;
  t.input = image_to_chw(img, cnn.in_channels());
  t.z1 = nn::conv3x3_forward(t.input, cnn.conv1);
  t.p1 = nn::maxpool2_forward(nn::relu_forward(t.z1));
  t.z2 = nn::conv3x3_forward(t.p1.output, cnn.conv2);
  t.p2 = nn::maxpool2_forward(nn::relu_forward(t.z2));
  t.features = nn::global_average_pool(t.p2.output);
  if (probe) {
    detail::record_relu(t.z1, *probe);
    detail::record_relu(t.z2, *probe);
    probe->pattern.insert(probe->pattern.end(), t.p1.argmax.begin(), t.p1.argmax.end());
    probe->pattern.insert(probe->pattern.end(), t.p2.argmax.begin(), t.p2.argmax.end());
  }
  return t;
}

struct TinyCnnFeatures {
  Vec features;        // 16-d
  Tensor activations;  // 16 x H/4 x W/4
};

inline TinyCnnFeatures tinycnn_extract(const Image& img, const TinyCnn& cnn) {
  TinyCnnTrace t = tinycnn_trace(img, cnn);
  return {std::move(t.features), std::move(t.p2.output)};
}

/// Backward from dL/d(activation maps); accumulates conv grads, returns dL/dinput (CHW).
inline Tensor tinycnn_backward_from_activations(const TinyCnnTrace& t, const Tensor& dact, TinyCnn& cnn) {
  Tensor d = nn::maxpool2_backward(t.z2.shape(), t.p2, dact);
  d = nn::relu_backward(t.z2, d);
  d = nn::conv3x3_backward(t.p1.output, d, cnn.conv2);
  d = nn::maxpool2_backward(t.z1.shape(), t.p1, d);
  d = nn::relu_backward(t.z1, d);
  return nn::conv3x3_backward(t.input, d, cnn.conv1);
}

inline Tensor tinycnn_backward(const TinyCnnTrace& t, std::span<const double> dfeatures, TinyCnn& cnn) {
  return tinycnn_backward_from_activations(t, nn::global_average_pool_backward(t.p2.output.shape(), dfeatures),
                                           cnn);
}

/// Extracts features for a list of frames.
inline std::vector<Vec> tinycnn_features(const std::vector<Image>& frames, const TinyCnn& cnn) {
  std::vector<Vec> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(tinycnn_extract(f, cnn).features);
  return out;
}

namespace detail {

/// Half-pixel-centre bilinear resampling of an h x w grid to H x W.
inline std::vector<double> bilinear_resize(const std::vector<double>& src, std::size_t h, std::size_t w,
                                           std::size_t H, std::size_t W) {
  std::vector<double> out(H * W);
  const auto coord = [](std::size_t dst, std::size_t in, std::size_t outn) {
    const double s = (static_cast<double>(dst) + 0.5) * static_cast<double>(in) / static_cast<double>(outn) - 0.5;
    return std::clamp(s, 0.0, static_cast<double>(in - 1));
  };
  for (std::size_t y = 0; y < H; ++y) {
    const double sy = coord(y, h, H);
    const auto y0 = static_cast<std::size_t>(std::floor(sy));
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t x = 0; x < W; ++x) {
      const double sx = coord(x, w, W);
      const auto x0 = static_cast<std::size_t>(std::floor(sx));
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const double fx = sx - static_cast<double>(x0);
      const double top = src[y0 * w + x0] * (1.0 - fx) + src[y0 * w + x1] * fx;
      const double bot = src[y1 * w + x0] * (1.0 - fx) + src[y1 * w + x1] * fx;
      out[y * W + x] = top * (1.0 - fy) + bot * fy;
    }
  }
  return out;
}

}  // namespace detail

/// GradCAM: alpha_k = spatial mean of dy/dA_k, L = ReLU(sum_k alpha_k A_k),
/// bilinear upsample to H x W, then min-max normalise. A constant positive
/// map normalises to all ones; an all-zero map stays zero.
inline SaliencyMap gradcam(const Tensor& activations, const Tensor& gradients, std::size_t height,
                           std::size_t width, std::size_t frame_index = 0) {
  if (activations.rank() != 3 || activations.shape() != gradients.shape()) {
    fail(ErrorCode::ShapeError, "gradcam: activations " + nn::shape_string(activations.shape()) +
                                    " vs gradients " + nn::shape_string(gradients.shape()));
  }
  if (height == 0 || width == 0) fail(ErrorCode::ShapeError, "gradcam: empty target size");
  const std::size_t ch = activations.extent(0), h = activations.extent(1), w = activations.extent(2);
  const std::size_t area = h * w;
  std::vector<double> cam(area, 0.0);
  for (std::size_t k = 0; k < ch; ++k) {
    double alpha = 0.0;
    for (std::size_t i = 0; i < area; ++i) alpha += gradients[k * area + i];
    alpha /= static_cast<double>(area);
    for (std::size_t i = 0; i < area; ++i) cam[i] += alpha * activations[k * area + i];
  }
  for (double& v : cam) v = std::max(v, 0.0);

  SaliencyMap m;
  m.height = height;
  m.width = width;
  m.frame_index = frame_index;
  m.grid = detail::bilinear_resize(cam, h, w, height, width);
  const auto [lo, hi] = std::minmax_element(m.grid.begin(), m.grid.end());
  m.raw_min = *lo;
  m.raw_max = *hi;
  const double range = m.raw_max - m.raw_min;
  for (double& v : m.grid) {
    if (range > 0.0) {
      v = (v - m.raw_min) / range;
    } else {
      v = m.raw_max > 0.0 ? 1.0 : 0.0;
    }
  }
  return m;
}

/// Tiny CNN backbone with a dense+sigmoid head, trained end to end on images.
class CnnClassifier {
 public:
  explicit CnnClassifier(std::size_t in_channels = 1)
      : cnn_(in_channels), head_(kTinyCnnFeatures, "tinycnn.head") {}

  TinyCnn& backbone() { return cnn_; }
  const TinyCnn& backbone() const { return cnn_; }
  nn::LogisticHead& head() { return head_; }
  const nn::LogisticHead& head() const { return head_; }

  void init(nn::Rng& rng) {
    cnn_.init(rng);
    head_.init(rng);
  }

  nn::ParamRefs params() {
    nn::ParamRefs out = cnn_.params();
    nn::append(out, head_.params());
    return out;
  }

  double logit(const Image& x) const { return head_.logit(tinycnn_trace(x, cnn_).features); }

  double loss(const Image& x, int label, nn::KinkProbe* probe = nullptr) const {
    return nn::bce_with_logit(head_.logit(tinycnn_trace(x, cnn_, probe).features), label);
  }

  double accumulate(const Image& x, int label) {
    const TinyCnnTrace t = tinycnn_trace(x, cnn_);
    const double z = head_.logit(t.features);
    const double dz = nn::sigmoid(z) - label;
    const Vec df = head_.layer().backward(t.features, std::span<const double>(&dz, 1));
    tinycnn_backward(t, df, cnn_);
    return nn::bce_with_logit(z, label);
  }

  int predict(const Image& x) const { return logit(x) > 0.0 ? 1 : 0; }

  /// dy/dA for the class logit y, together with A.
  std::pair<Tensor, Tensor> activation_gradients(const Image& x) const {
    const TinyCnnTrace t = tinycnn_trace(x, cnn_);
    const Vec& w = head_.layer().weight.value.storage();
    return {t.p2.output, nn::global_average_pool_backward(t.p2.output.shape(), w)};
  }

  SaliencyMap saliency(const Image& x, std::size_t frame_index = 0) const {
    const auto [a, g] = activation_gradients(x);
    return gradcam(a, g, x.height, x.width, frame_index);
  }

 private:
  TinyCnn cnn_;
  nn::LogisticHead head_;
};

static_assert(nn::Classifier<CnnClassifier, Image>);

/// Grayscale images where the positive class carries one bright square patch.
struct PatchImage {
  Image image;
  int label = 0;
  std::size_t patch_y = 0, patch_x = 0;  // top-left, positives only
};

struct PatchOptions {
  std::size_t side = 32;
  std::size_t patch = 8;
  double background_max = 0.4;
  double patch_min = 0.8;
};

inline std::vector<PatchImage> make_patch_images(std::size_t n, std::uint64_t seed, const PatchOptions& opt = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> bg(0.0, opt.background_max);
  std::uniform_real_distribution<double> bright(opt.patch_min, 1.0);
  std::uniform_int_distribution<std::size_t> loc(0, opt.side - opt.patch);
  std::vector<PatchImage> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    PatchImage& p = out[i];
    p.image = Image(opt.side, opt.side, 1);
    for (double& v : p.image.data) v = bg(rng);
    p.label = i % 2 == 0 ? 1 : 0;
    if (p.label == 1) {
      p.patch_y = loc(rng);
      p.patch_x = loc(rng);
      for (std::size_t y = 0; y < opt.patch; ++y) {
        for (std::size_t x = 0; x < opt.patch; ++x) p.image.at(p.patch_y + y, p.patch_x + x) = bright(rng);
      }
    }
  }
  return out;
}

/// Mean heat inside the patch divided by mean heat outside it.
inline double patch_heat_ratio(const SaliencyMap& m, std::size_t py, std::size_t px, std::size_t patch) {
  double in = 0.0, out = 0.0;
  std::size_t n_in = 0, n_out = 0;
  for (std::size_t y = 0; y < m.height; ++y) {
    for (std::size_t x = 0; x < m.width; ++x) {
      const bool inside = y >= py && y < py + patch && x >= px && x < px + patch;
      (inside ? in : out) += m.at(y, x);
      (inside ? n_in : n_out) += 1;
    }
  }
  in /= static_cast<double>(std::max<std::size_t>(n_in, 1));
  out /= static_cast<double>(std::max<std::size_t>(n_out, 1));
  return out > 0.0 ? in / out : (in > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
}

}  // namespace vidpop::visual
