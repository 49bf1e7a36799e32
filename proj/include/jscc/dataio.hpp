#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "jscc/error.hpp"
#include "jscc/rng.hpp"
#include "jscc/tensor.hpp"

namespace jscc {

enum class Split { train, test };
enum class OrderPolicy { sequential, seeded_shuffle };

inline const char* to_string(Split s) { return s == Split::train ? "train" : "test"; }

/// Read-only in-memory image set, 8-bit, channel-planar (C x H x W per image).
class DatasetHandle {
 public:
  DatasetHandle() = default;
  DatasetHandle(std::string id, Split split, int height, int width, int channels)
      : id_(std::move(id)), split_(split), height_(height), width_(width), channels_(channels) {}

  const std::string& id() const { return id_; }
  Split split() const { return split_; }
  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t image_bytes() const { return static_cast<std::size_t>(height_) * width_ * channels_; }
  std::size_t size() const { return image_bytes() == 0 ? 0 : pixels_.size() / image_bytes(); }
  OrderPolicy order() const { return order_; }
  void set_order(OrderPolicy p) { order_ = p; }

  void push_back(std::span<const std::uint8_t> chw) {
    if (chw.size() != image_bytes()) throw ShapeError("image does not match dataset geometry");
    pixels_.insert(pixels_.end(), chw.begin(), chw.end());
  }

  std::span<const std::uint8_t> raw(std::size_t i) const {
    return {pixels_.data() + i * image_bytes(), image_bytes()};
  }

  /// Pixel-scale batch (integer values in [0, 255]) of the given indices.
  template <typename T>
  ImageBatch<T> batch(std::span<const std::size_t> indices) const {
    ImageBatch<T> out{Tensor<T>(Shape{static_cast<int>(indices.size()), channels_, height_, width_}),
                      PixelScale::pixel_255};
    for (std::size_t b = 0; b < indices.size(); ++b) {
      if (indices[b] >= size()) throw ContractError("dataset index out of range");
      auto src = raw(indices[b]);
      auto dst = out.data.image(static_cast<int>(b));
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] = static_cast<T>(src[j]);
    }
    return out;
  }

  template <typename T>
  ImageBatch<T> batch_range(std::size_t first, std::size_t count) const {
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), first);
    return batch<T>(idx);
  }

  /// Visiting order for one epoch. Shuffled orders depend only on (seed, epoch).
  std::vector<std::size_t> epoch_order(std::uint64_t seed, int epoch) const {
    std::vector<std::size_t> idx(size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (order_ == OrderPolicy::seeded_shuffle) {
      Rng rng = make_rng(seed, "shuffle/" + std::to_string(epoch));
      std::shuffle(idx.begin(), idx.end(), rng);
    }
    return idx;
  }

  /// First `n` images as a new handle.
  DatasetHandle head(std::size_t n) const {
    DatasetHandle h(id_, split_, height_, width_, channels_);
    h.order_ = order_;
    n = std::min(n, size());
    h.pixels_.assign(pixels_.begin(), pixels_.begin() + static_cast<std::ptrdiff_t>(n * image_bytes()));
    return h;
  }

  void set_id(std::string id) { id_ = std::move(id); }

 private:
  std::string id_;
  Split split_ = Split::train;
  int height_ = 0, width_ = 0, channels_ = 0;
  OrderPolicy order_ = OrderPolicy::seeded_shuffle;
  std::vector<std::uint8_t> pixels_;
};

// ---------------------------------------------------------------------------
// CIFAR-10 binary batches: 10000 records of 1 label byte + 3072 pixel bytes
// (1024 R, 1024 G, 1024 B, row-major 32x32).

inline constexpr std::size_t kCifarRecordBytes = 1 + 3 * 32 * 32;
inline constexpr std::size_t kCifarRecordsPerFile = 10000;

struct CifarRecord {
  std::uint8_t label = 0;
  std::vector<std::uint8_t> pixels;  // channel-planar 3 x 32 x 32
};

inline CifarRecord decode_cifar_record(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kCifarRecordBytes) throw IngestionError("CIFAR-10 record must be 3073 bytes");
  return {bytes[0], std::vector<std::uint8_t>(bytes.begin() + 1, bytes.end())};
}

inline std::vector<std::uint8_t> encode_cifar_record(const CifarRecord& r) {
  std::vector<std::uint8_t> out;
  out.reserve(kCifarRecordBytes);
  out.push_back(r.label);
  out.insert(out.end(), r.pixels.begin(), r.pixels.end());
  return out;
}

inline std::vector<std::string> cifar_files(Split split) {
  if (split == Split::test) return {"test_batch.bin"};
  return {"data_batch_1.bin", "data_batch_2.bin", "data_batch_3.bin", "data_batch_4.bin", "data_batch_5.bin"};
}

/// Loads the canonical binary batches under `root` (or root/cifar-10-batches-bin).
/// `limit` keeps only the first records, reading no further than needed.
inline DatasetHandle load_cifar10(const std::filesystem::path& root, Split split,
                                  std::optional<std::size_t> limit = std::nullopt) {
  std::filesystem::path dir = root;
  if (!std::filesystem::exists(dir / cifar_files(split).front()) &&
      std::filesystem::exists(dir / "cifar-10-batches-bin"))
    dir /= "cifar-10-batches-bin";
  DatasetHandle h("cifar10", split, 32, 32, 3);
  const std::size_t want = limit.value_or(std::numeric_limits<std::size_t>::max());
  std::vector<std::uint8_t> buf(kCifarRecordBytes * kCifarRecordsPerFile);
  for (const auto& name : cifar_files(split)) {
    if (h.size() >= want) break;
    const auto path = dir / name;
    std::ifstream is(path, std::ios::binary);
    if (!is)
      throw IngestionError("missing CIFAR-10 file " + path.string() + " (expected " +
                           std::to_string(buf.size()) + " bytes)");
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(is.gcount()) != buf.size())
      throw IngestionError("short CIFAR-10 file " + path.string() + ": read " +
                           std::to_string(is.gcount()) + " of " + std::to_string(buf.size()) + " bytes");
    for (std::size_t r = 0; r < kCifarRecordsPerFile && h.size() < want; ++r) {
      const auto rec = decode_cifar_record({buf.data() + r * kCifarRecordBytes, kCifarRecordBytes});
      h.push_back(rec.pixels);
    }
  }
  return h;
}

// ---------------------------------------------------------------------------
// Image folders.

/// Center-crops the largest centered square, resizes to target, returns RGB CHW bytes.
inline std::vector<std::uint8_t> center_crop_resize(const cv::Mat& bgr, int target_h, int target_w) {
  const int side = std::min(bgr.rows, bgr.cols);
  const cv::Rect roi((bgr.cols - side) / 2, (bgr.rows - side) / 2, side, side);
  cv::Mat crop = bgr(roi), resized, rgb;
  const int interp = side > target_h ? cv::INTER_AREA : cv::INTER_LINEAR;
  cv::resize(crop, resized, cv::Size(target_w, target_h), 0, 0, interp);
  cv::cvtColor(resized, rgb, cv::COLOR_BGR2RGB);
  std::vector<std::uint8_t> chw(static_cast<std::size_t>(3) * target_h * target_w);
  for (int y = 0; y < target_h; ++y)
    for (int x = 0; x < target_w; ++x) {
      const auto& px = rgb.at<cv::Vec3b>(y, x);
      for (int c = 0; c < 3; ++c)
        chw[(static_cast<std::size_t>(c) * target_h + y) * target_w + x] = px[c];
    }
  return chw;
}

struct FolderSplit {
  DatasetHandle train;
  DatasetHandle test;
  std::vector<std::string> train_files;
  std::vector<std::string> test_files;
};

/// Files are sorted by name, shuffled with `seed`, and the first
/// floor(split_fraction * N) go to train. Undecodable or undersized files are
/// skipped with a warning.
inline FolderSplit load_image_folder(const std::filesystem::path& root, int target_h, int target_w,
                                     double split_fraction, std::uint64_t seed) {
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw ConfigError("split_fraction must lie in (0, 1)");
  if (!std::filesystem::is_directory(root)) throw IngestionError("image folder " + root.string() + " does not exist");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(root))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });

  std::vector<std::pair<std::string, std::vector<std::uint8_t>>> decoded;
  for (const auto& f : files) {
    cv::Mat img = cv::imread(f.string(), cv::IMREAD_COLOR);
    if (img.empty()) {
      std::cerr << "warning: skipping undecodable image " << f << "\n";
      continue;
    }
    if (img.rows < target_h || img.cols < target_w) {
      std::cerr << "warning: skipping " << f << " (smaller than " << target_h << "x" << target_w << ")\n";
      continue;
    }
    decoded.emplace_back(f.filename().string(), center_crop_resize(img, target_h, target_w));
  }
  if (decoded.empty()) throw IngestionError("no decodable images under " + root.string());

  std::vector<std::size_t> order(decoded.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(seed, "folder-split");
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::floor(split_fraction * decoded.size() + 1e-9));

  const std::string id = "folder:" + root.filename().string();
  FolderSplit out{DatasetHandle(id, Split::train, target_h, target_w, 3),
                  DatasetHandle(id, Split::test, target_h, target_w, 3), {}, {}};
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& [name, px] = decoded[order[i]];
    if (i < n_train) {
      out.train.push_back(px);
      out.train_files.push_back(name);
    } else {
      out.test.push_back(px);
      out.test_files.push_back(name);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Procedural images: a two-color gradient, a few flat rectangles and a
// band-limited sinusoidal texture.

inline std::vector<std::uint8_t> synthetic_image(int h, int w, int channels, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> img(static_cast<std::size_t>(channels) * h * w);
  const double angle = u(rng) * 2.0 * M_PI;
  const double gx = std::cos(angle), gy = std::sin(angle);
  std::vector<double> c0(channels), c1(channels);
  for (int c = 0; c < channels; ++c) {
    c0[c] = 255.0 * u(rng);
    c1[c] = 255.0 * u(rng);
  }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double t = 0.5 + 0.5 * (gx * (2.0 * x / std::max(w - 1, 1) - 1.0) + gy * (2.0 * y / std::max(h - 1, 1) - 1.0)) / std::sqrt(2.0);
      for (int c = 0; c < channels; ++c)
        img[(static_cast<std::size_t>(c) * h + y) * w + x] = c0[c] * (1.0 - t) + c1[c] * t;
    }
  const int rects = 1 + static_cast<int>(u(rng) * 3.0);
  for (int r = 0; r < rects; ++r) {
    const int rw = std::max(2, static_cast<int>(w * (0.15 + 0.4 * u(rng))));
    const int rh = std::max(2, static_cast<int>(h * (0.15 + 0.4 * u(rng))));
    const int x0 = static_cast<int>(u(rng) * (w - rw));
    const int y0 = static_cast<int>(u(rng) * (h - rh));
    std::vector<double> col(channels);
    for (auto& v : col) v = 255.0 * u(rng);
    for (int y = y0; y < y0 + rh; ++y)
      for (int x = x0; x < x0 + rw; ++x)
        for (int c = 0; c < channels; ++c) img[(static_cast<std::size_t>(c) * h + y) * w + x] = col[c];
  }
  const int waves = 3;
  for (int k = 0; k < waves; ++k) {
    const double fx = (1.0 + 3.0 * u(rng)) * 2.0 * M_PI / w;
    const double fy = (1.0 + 3.0 * u(rng)) * 2.0 * M_PI / h;
    const double phase = 2.0 * M_PI * u(rng);
    const double amp = 6.0 + 10.0 * u(rng);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double v = amp * std::sin(fx * x + fy * y + phase);
        for (int c = 0; c < channels; ++c) img[(static_cast<std::size_t>(c) * h + y) * w + x] += v;
      }
  }
  std::vector<std::uint8_t> out(img.size());
  for (std::size_t i = 0; i < img.size(); ++i)
    out[i] = static_cast<std::uint8_t>(std::clamp(std::round(img[i]), 0.0, 255.0));
  return out;
}

inline DatasetHandle synthetic_dataset(std::size_t n, int height, int width, int channels, std::uint64_t seed,
                                       Split split = Split::train) {
  if (n < 1) throw ConfigError("synthetic dataset needs n >= 1");
  DatasetHandle h("synthetic", split, height, width, channels);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_rng(seed, std::string("synthetic/") + to_string(split) + "/" + std::to_string(i));
    h.push_back(synthetic_image(height, width, channels, rng));
  }
  return h;
}

// ---------------------------------------------------------------------------
// Dataset selectors: cifar10, cifar10-mini, synthetic-200,
// synthetic:<n>@<H>x<W>, folder:<path>@<H>x<W>.

struct DatasetPair {
  DatasetHandle train;
  DatasetHandle test;
};

struct DatasetOptions {
  std::filesystem::path cifar_root;
  double split_fraction = 0.9;
  std::uint64_t seed = 0;
};

inline std::pair<int, int> parse_hw(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw ConfigError("expected <H>x<W>, got '" + s + "'");
  try {
    return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
  } catch (const std::exception&) {
    throw ConfigError("expected <H>x<W>, got '" + s + "'");
  }
}

inline DatasetPair open_dataset(const std::string& selector, const DatasetOptions& opt) {
  if (selector == "cifar10" || selector == "cifar10-mini") {
    const bool mini = selector == "cifar10-mini";
    std::filesystem::path root = opt.cifar_root;
    if (root.empty())
      if (const char* env = std::getenv("JSCC_CIFAR10_ROOT")) root = env;
    if (root.empty()) throw IngestionError("CIFAR-10 root not set (use --data-root or JSCC_CIFAR10_ROOT)");
    DatasetPair p{load_cifar10(root, Split::train, mini ? std::optional<std::size_t>(5000) : std::nullopt),
                  load_cifar10(root, Split::test, mini ? std::optional<std::size_t>(1000) : std::nullopt)};
    p.train.set_id(selector);
    p.test.set_id(selector);
    return p;
  }
  if (selector == "synthetic-200") {
    DatasetPair p{synthetic_dataset(200, 32, 32, 3, opt.seed, Split::train),
                  synthetic_dataset(50, 32, 32, 3, opt.seed, Split::test)};
    p.train.set_id(selector);
    p.test.set_id(selector);
    return p;
  }
  if (selector.rfind("synthetic:", 0) == 0) {
    const std::string rest = selector.substr(10);
    const auto at = rest.find('@');
    if (at == std::string::npos) throw ConfigError("expected synthetic:<n>@<H>x<W>");
    std::size_t n = 0;
    try {
      n = std::stoul(rest.substr(0, at));
    } catch (const std::exception&) {
      throw ConfigError("bad synthetic image count in '" + selector + "'");
    }
    const auto [h, w] = parse_hw(rest.substr(at + 1));
    DatasetPair p{synthetic_dataset(n, h, w, 3, opt.seed, Split::train),
                  synthetic_dataset(std::max<std::size_t>(1, n / 4), h, w, 3, opt.seed, Split::test)};
    p.train.set_id(selector);
    p.test.set_id(selector);
    return p;
  }
  if (selector.rfind("folder:", 0) == 0) {
    const std::string rest = selector.substr(7);
    const auto at = rest.rfind('@');
    if (at == std::string::npos) throw ConfigError("expected folder:<path>@<H>x<W>");
    const auto [h, w] = parse_hw(rest.substr(at + 1));
    auto split = load_image_folder(rest.substr(0, at), h, w, opt.split_fraction, opt.seed);
    split.train.set_id(selector);
    split.test.set_id(selector);
    return {std::move(split.train), std::move(split.test)};
  }
  throw ConfigError("unknown dataset '" + selector + "'");
}

}  // namespace jscc
