#include "hzcert/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace hzcert {

Tensor Dataset::batch(const std::vector<std::size_t>& idx) const {
  std::size_t p = dim();
  std::vector<double> out(idx.size() * p);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= count()) throw ValueError("dataset: example index out of range");
    std::copy(values.begin() + idx[r] * p, values.begin() + (idx[r] + 1) * p,
              out.begin() + r * p);
  }
  return Tensor::from_data({idx.size(), p}, std::move(out));
}

Tensor Dataset::example(std::size_t i) const { return batch({i}); }

namespace {

class IdxReader {
 public:
  explicit IdxReader(const std::string& path) : path_(path), f_(path, std::ios::binary) {
    if (!f_) throw IoError("cannot open IDX file: " + path);
  }

  std::uint32_t u32(const char* what) {
    unsigned char b[4];
    if (!f_.read(reinterpret_cast<char*>(b), 4))
      throw IoError("IDX " + path_ + ": truncated reading " + what + " at offset " +
                    std::to_string(offset_));
    offset_ += 4;
    return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
  }

  void bytes(unsigned char* dst, std::size_t n, const char* what) {
    if (!f_.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n)))
      throw IoError("IDX " + path_ + ": truncated reading " + what + " at offset " +
                    std::to_string(offset_));
    offset_ += n;
  }

  std::size_t offset() const { return offset_; }

 private:
  std::string path_;
  std::ifstream f_;
  std::size_t offset_ = 0;
};

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  IdxReader img(images_path);
  std::uint32_t magic = img.u32("magic");
  if (magic != 0x00000803u)
    throw IoError("IDX " + images_path + ": bad image magic 0x" + [&] {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%08x", magic);
      return std::string(buf);
    }() + " at offset 0");
  std::uint32_t n = img.u32("count"), rows = img.u32("rows"), cols = img.u32("cols");
  if (rows == 0 || cols == 0) throw IoError("IDX " + images_path + ": zero image dimensions");

  IdxReader lab(labels_path);
  std::uint32_t lmagic = lab.u32("magic");
  if (lmagic != 0x00000801u) throw IoError("IDX " + labels_path + ": bad label magic at offset 0");
  std::uint32_t ln = lab.u32("count");
  if (ln != n)
    throw IoError("IDX: image count " + std::to_string(n) + " != label count " +
                  std::to_string(ln));

  Dataset d;
  d.var_shape = {1, rows, cols};
  d.lo = 0.0;
  d.hi = 1.0;
  std::size_t p = static_cast<std::size_t>(rows) * cols;
  d.values.resize(static_cast<std::size_t>(n) * p);
  std::vector<unsigned char> buf(p);
  for (std::size_t i = 0; i < n; ++i) {
    img.bytes(buf.data(), p, "pixels");
    for (std::size_t j = 0; j < p; ++j) d.values[i * p + j] = buf[j] / 255.0;
  }
  d.labels.resize(n);
  std::vector<unsigned char> lbuf(n);
  if (n > 0) lab.bytes(lbuf.data(), n, "labels");
  int max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    d.labels[i] = lbuf[i];
    max_label = std::max(max_label, d.labels[i]);
  }
  d.num_classes = static_cast<std::size_t>(std::max(max_label + 1, 2));
  return d;
}

namespace {

Dataset synthetic_2d(std::size_t n, double noise, std::uint64_t seed, bool moons) {
  if (n == 0) throw ValueError("synthetic dataset: n must be positive");
  if (noise < 0) throw ValueError("synthetic dataset: noise must be nonnegative");
  Dataset d;
  d.var_shape = {2};
  d.num_classes = 2;
  d.lo = 0.0;
  d.hi = 1.0;
  d.values.resize(n * 2);
  d.labels.resize(n);
  RngStream root(seed);
  constexpr double pi = 3.14159265358979323846;
  for (std::size_t i = 0; i < n; ++i) {
    RngStream s = root.split(i);
    int label = static_cast<int>(i % 2);
    double x, y;
    if (moons) {
      double a = s.uniform(0.0, pi);
      if (label == 0) {
        x = 0.5 + 0.35 * std::cos(a);
        y = 0.55 + 0.35 * std::sin(a);
      } else {
        x = 0.5 + 0.35 * std::cos(a + pi) + 0.175;
        y = 0.45 + 0.35 * std::sin(a + pi);
      }
    } else {
      double cx = label == 0 ? 0.25 : 0.75;
      double cy = label == 0 ? 0.25 : 0.75;
      x = cx;
      y = cy;
    }
    x += noise * s.normal();
    y += noise * s.normal();
    d.values[i * 2] = std::clamp(x, 0.0, 1.0);
    d.values[i * 2 + 1] = std::clamp(y, 0.0, 1.0);
    d.labels[i] = label;
  }
  return d;
}

}  // namespace

Dataset synthetic_blobs(std::size_t n, double noise, std::uint64_t seed) {
  return synthetic_2d(n, noise, seed, false);
}

Dataset synthetic_moons(std::size_t n, double noise, std::uint64_t seed) {
  return synthetic_2d(n, noise, seed, true);
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double test_fraction) {
  if (test_fraction <= 0 || test_fraction >= 1)
    throw ValueError("split_dataset: test fraction must be in (0,1)");
  std::size_t stride = static_cast<std::size_t>(std::llround(1.0 / test_fraction));
  if (stride < 2) stride = 2;
  Dataset train = d, test = d;
  train.values.clear();
  train.labels.clear();
  test.values.clear();
  test.labels.clear();
  std::size_t p = d.dim();
  for (std::size_t i = 0; i < d.count(); ++i) {
    Dataset& dst = (i % stride == stride - 1) ? test : train;
    dst.values.insert(dst.values.end(), d.values.begin() + i * p, d.values.begin() + (i + 1) * p);
    dst.labels.push_back(d.labels[i]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace hzcert
