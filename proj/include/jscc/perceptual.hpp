#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "jscc/conv.hpp"
#include "jscc/error.hpp"
#include "jscc/tensor.hpp"

namespace jscc {

// LPIPS-style distance: deep features of both images are unit-normalized
// along channels at each tapped layer, squared differences are weighted per
// channel, averaged spatially and summed over taps.
//
// Weight file layout (little-endian):
//   "LPIP" u32 version(=1) u32 n_stages
//   f32 shift[3] f32 scale[3]       input whitening after mapping to [-1, 1]
//   per stage: u32 kind (0 = conv3x3+relu, 1 = maxpool2x2)
//     conv: u32 in_c u32 out_c u32 tap
//           f32 kernel[out_c * in_c * 9] f32 bias[out_c]
//           if tap: f32 lin[out_c]
//
// tools/export_lpips_vgg.py writes this format from torchvision/LPIPS weights.

class PerceptualModel {
 public:
  struct Stage {
    bool pool = false;
    int in_c = 0, out_c = 0;
    bool tap = false;
    std::vector<float> kernel, bias, lin;
  };

  std::array<float, 3> shift{0.f, 0.f, 0.f};
  std::array<float, 3> scale{1.f, 1.f, 1.f};
  std::vector<Stage> stages;

  /// Loads a weights file; returns nullopt when it does not exist so callers
  /// can report the metric as absent.
  static std::optional<PerceptualModel> load(const std::filesystem::path& path) {
    std::error_code ec;
    if (path.empty() || !std::filesystem::exists(path, ec)) return std::nullopt;
    std::ifstream is(path, std::ios::binary);
    if (!is) return std::nullopt;
    auto u32 = [&] {
      std::uint32_t v = 0;
      is.read(reinterpret_cast<char*>(&v), sizeof v);
      return v;
    };
    auto floats = [&](std::vector<float>& v, std::size_t n) {
      v.resize(n);
      is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(float)));
    };
    char magic[4];
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != "LPIP") throw LoadError(path.string() + ": not a perceptual weights file");
    if (u32() != 1) throw LoadError(path.string() + ": unsupported version");
    const std::uint32_t n = u32();
    PerceptualModel m;
    is.read(reinterpret_cast<char*>(m.shift.data()), 3 * sizeof(float));
    is.read(reinterpret_cast<char*>(m.scale.data()), 3 * sizeof(float));
    for (std::uint32_t i = 0; i < n; ++i) {
      Stage st;
      const std::uint32_t kind = u32();
      if (kind == 1) {
        st.pool = true;
      } else if (kind == 0) {
        st.in_c = static_cast<int>(u32());
        st.out_c = static_cast<int>(u32());
        st.tap = u32() != 0;
        floats(st.kernel, static_cast<std::size_t>(st.out_c) * st.in_c * 9);
        floats(st.bias, st.out_c);
        if (st.tap) floats(st.lin, st.out_c);
      } else {
        throw LoadError(path.string() + ": unknown stage kind " + std::to_string(kind));
      }
      if (!is) throw LoadError(path.string() + ": truncated at stage " + std::to_string(i));
      m.stages.push_back(std::move(st));
    }
    return m;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary);
    auto u32 = [&](std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); };
    auto floats = [&](const std::vector<float>& v) {
      os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
    };
    os.write("LPIP", 4);
    u32(1);
    u32(static_cast<std::uint32_t>(stages.size()));
    os.write(reinterpret_cast<const char*>(shift.data()), 3 * sizeof(float));
    os.write(reinterpret_cast<const char*>(scale.data()), 3 * sizeof(float));
    for (const auto& st : stages) {
      if (st.pool) {
        u32(1);
        continue;
      }
      u32(0);
      u32(static_cast<std::uint32_t>(st.in_c));
      u32(static_cast<std::uint32_t>(st.out_c));
      u32(st.tap ? 1u : 0u);
      floats(st.kernel);
      floats(st.bias);
      if (st.tap) floats(st.lin);
    }
  }

  /// Distance between two pixel-scale images (batch 1 each, or averaged over the batch).
  double distance(const ImageBatch<float>& a, const ImageBatch<float>& b) const {
    require_same_shape(a, b, "perceptual_distance");
    if (a.shape().c != 3) throw ContractError("perceptual_distance expects 3-channel images");
    double total = 0.0;
    for (int n = 0; n < a.batch(); ++n) {
      const auto fa = features(a, n);
      const auto fb = features(b, n);
      for (std::size_t t = 0; t < fa.size(); ++t) total += tap_distance(fa[t], fb[t]);
    }
    return total / a.batch();
  }

 private:
  struct Feature {
    int c = 0, h = 0, w = 0;
    std::vector<float> v;
    const Stage* stage = nullptr;
  };

  std::vector<Feature> features(const ImageBatch<float>& img, int n) const {
    const ImageBatch<float> unit = img.to_unit();
    Feature cur{unit.shape().c, unit.shape().h, unit.shape().w, {}, nullptr};
    auto src = unit.data.image(n);
    cur.v.assign(src.begin(), src.end());
    const std::size_t plane = static_cast<std::size_t>(cur.h) * cur.w;
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < plane; ++i) {
        float& x = cur.v[c * plane + i];
        x = (2.f * x - 1.f - shift[c]) / scale[c];
      }
    std::vector<Feature> taps;
    std::vector<float> scratch;
    for (const auto& st : stages) {
      if (st.pool) {
        Feature next{cur.c, cur.h / 2, cur.w / 2, {}, nullptr};
        next.v.assign(static_cast<std::size_t>(next.c) * next.h * next.w, 0.f);
        for (int c = 0; c < cur.c; ++c)
          for (int y = 0; y < next.h; ++y)
            for (int x = 0; x < next.w; ++x) {
              float m = std::numeric_limits<float>::lowest();
              for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx)
                  m = std::max(m, cur.v[(static_cast<std::size_t>(c) * cur.h + 2 * y + dy) * cur.w + 2 * x + dx]);
              next.v[(static_cast<std::size_t>(c) * next.h + y) * next.w + x] = m;
            }
        cur = std::move(next);
        continue;
      }
      if (st.in_c != cur.c) throw ShapeError("perceptual model channel mismatch");
      Feature next{st.out_c, cur.h, cur.w, {}, &st};
      next.v.assign(static_cast<std::size_t>(st.out_c) * cur.h * cur.w, 0.f);
      const auto g = PatchGeometry::same(cur.c, cur.h, cur.w, cur.h, cur.w, 3, 1, 1);
      conv_forward<float>(g, st.out_c, st.kernel, st.bias, cur.v.data(), next.v.data(), scratch);
      for (auto& x : next.v) x = std::max(x, 0.f);
      cur = std::move(next);
      if (st.tap) taps.push_back(cur);
    }
    return taps;
  }

  static double tap_distance(const Feature& a, const Feature& b) {
    const std::size_t plane = static_cast<std::size_t>(a.h) * a.w;
    double sum = 0.0;
    for (std::size_t p = 0; p < plane; ++p) {
      double na = 0.0, nb = 0.0;
      for (int c = 0; c < a.c; ++c) {
        na += static_cast<double>(a.v[c * plane + p]) * a.v[c * plane + p];
        nb += static_cast<double>(b.v[c * plane + p]) * b.v[c * plane + p];
      }
      na = std::sqrt(na) + 1e-10;
      nb = std::sqrt(nb) + 1e-10;
      for (int c = 0; c < a.c; ++c) {
        const double d = a.v[c * plane + p] / na - b.v[c * plane + p] / nb;
        sum += a.stage->lin[c] * d * d;
      }
    }
    return sum / static_cast<double>(plane);
  }
};

/// Perceptual distance, or nullopt when no model is loaded.
inline std::optional<double> perceptual_distance(const ImageBatch<float>& a, const ImageBatch<float>& b,
                                                 const PerceptualModel* model) {
  if (model == nullptr) return std::nullopt;
  return model->distance(a, b);
}

}  // namespace jscc
