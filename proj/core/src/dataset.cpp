#include "homeostat/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "homeostat/rng.hpp"

namespace homeostat {

namespace {

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<unsigned char> read_file(const std::string& path) {
  if (has_suffix(path, ".gz")) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw IoError("cannot open " + path);
    std::vector<unsigned char> out;
    std::array<unsigned char, 1 << 16> buf;
    int n;
    while ((n = gzread(f, buf.data(), buf.size())) > 0)
      out.insert(out.end(), buf.begin(), buf.begin() + n);
    const bool bad = n < 0;
    gzclose(f);
    if (bad) throw IoError("gzip read failed for " + path);
    return out;
  }
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(f),
                                    std::istreambuf_iterator<char>());
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t off) {
  if (off + 4 > buf.size()) throw IoError("truncated IDX header");
  return (std::uint32_t(buf[off]) << 24) | (std::uint32_t(buf[off + 1]) << 16) |
         (std::uint32_t(buf[off + 2]) << 8) | std::uint32_t(buf[off + 3]);
}

void write_be32(std::ofstream& f, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path, Split split) {
  const auto ibuf = read_file(images_path);
  const auto lbuf = read_file(labels_path);

  const std::uint32_t imagic = read_be32(ibuf, 0);
  if (imagic != kIdxImageMagic)
    throw FormatError(images_path + ": expected image magic " +
                      std::to_string(kIdxImageMagic) + ", got " + std::to_string(imagic));
  const std::uint32_t lmagic = read_be32(lbuf, 0);
  if (lmagic != kIdxLabelMagic)
    throw FormatError(labels_path + ": expected label magic " +
                      std::to_string(kIdxLabelMagic) + ", got " + std::to_string(lmagic));

  const std::uint32_t m = read_be32(ibuf, 4);
  const std::uint32_t rows = read_be32(ibuf, 8);
  const std::uint32_t cols = read_be32(ibuf, 12);
  const std::uint32_t ml = read_be32(lbuf, 4);
  if (m != ml)
    throw FormatError("image count " + std::to_string(m) + " != label count " +
                      std::to_string(ml));
  if (m == 0) throw FormatError("empty dataset");

  const std::size_t pix = static_cast<std::size_t>(rows) * cols;
  if (ibuf.size() < 16 + static_cast<std::size_t>(m) * pix)
    throw IoError(images_path + ": truncated image data");
  if (lbuf.size() < 8 + m) throw IoError(labels_path + ": truncated label data");

  Dataset d;
  d.split = split;
  d.rows = static_cast<int>(rows);
  d.cols = static_cast<int>(cols);
  d.images.resize(static_cast<Eigen::Index>(pix), static_cast<Eigen::Index>(m));
  d.raw_labels.resize(m);
  for (std::uint32_t i = 0; i < m; ++i) {
    const unsigned char* src = ibuf.data() + 16 + static_cast<std::size_t>(i) * pix;
    for (std::size_t p = 0; p < pix; ++p)
      d.images(static_cast<Eigen::Index>(p), i) = src[p] / 255.0;
    const int y = lbuf[8 + i];
    if (y < 0 || y >= kNumClasses)
      throw FormatError(labels_path + ": label " + std::to_string(y) + " out of range");
    d.raw_labels[i] = y;
  }
  return d;
}

void save_idx(const Dataset& data, const std::string& images_path,
              const std::string& labels_path) {
  std::ofstream fi(images_path, std::ios::binary);
  if (!fi) throw IoError("cannot write " + images_path);
  write_be32(fi, kIdxImageMagic);
  write_be32(fi, static_cast<std::uint32_t>(data.size()));
  write_be32(fi, static_cast<std::uint32_t>(data.rows));
  write_be32(fi, static_cast<std::uint32_t>(data.cols));
  for (int i = 0; i < data.size(); ++i) {
    for (Eigen::Index p = 0; p < data.images.rows(); ++p) {
      const double v = std::clamp(data.images(p, i), 0.0, 1.0);
      const unsigned char byte = static_cast<unsigned char>(std::lround(v * 255.0));
      fi.write(reinterpret_cast<const char*>(&byte), 1);
    }
  }
  if (!fi) throw IoError("write failed for " + images_path);

  std::ofstream fl(labels_path, std::ios::binary);
  if (!fl) throw IoError("cannot write " + labels_path);
  write_be32(fl, kIdxLabelMagic);
  write_be32(fl, static_cast<std::uint32_t>(data.size()));
  for (int y : data.raw_labels) {
    const unsigned char byte = static_cast<unsigned char>(y);
    fl.write(reinterpret_cast<const char*>(&byte), 1);
  }
  if (!fl) throw IoError("write failed for " + labels_path);
}

Dataset stratified_subset(const Dataset& data, int n, std::mt19937_64& rng) {
  if (n < 1 || n > data.size())
    throw ConfigurationError("stratified_subset: n out of range");
  std::array<std::vector<int>, kNumClasses> by_class;
  for (int i = 0; i < data.size(); ++i)
    by_class[static_cast<std::size_t>(data.raw_labels[static_cast<std::size_t>(i)])].push_back(i);
  for (auto& idx : by_class) std::shuffle(idx.begin(), idx.end(), rng);

  // n/10 each, remainder spread over the lowest class indices.
  std::vector<int> chosen;
  chosen.reserve(static_cast<std::size_t>(n));
  for (int c = 0; c < kNumClasses; ++c) {
    int want = n / kNumClasses + (c < n % kNumClasses ? 1 : 0);
    const auto& idx = by_class[static_cast<std::size_t>(c)];
    if (want > static_cast<int>(idx.size()))
      throw ConfigurationError("stratified_subset: class " + std::to_string(c) +
                               " has too few samples");
    chosen.insert(chosen.end(), idx.begin(), idx.begin() + want);
  }
  std::sort(chosen.begin(), chosen.end());

  Dataset out;
  out.split = data.split;
  out.rows = data.rows;
  out.cols = data.cols;
  out.images.resize(data.images.rows(), n);
  out.raw_labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out.images.col(i) = data.images.col(chosen[static_cast<std::size_t>(i)]);
    out.raw_labels[static_cast<std::size_t>(i)] =
        data.raw_labels[static_cast<std::size_t>(chosen[static_cast<std::size_t>(i)])];
  }
  return out;
}

Batch as_batch(const Dataset& data) { return Batch{data.images, data.raw_labels}; }

namespace {

// Sum of random Gaussian blobs on the image grid.
Vec blob_field(int side, int blobs, double amp_lo, double amp_hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec p = Vec::Zero(side * side);
  for (int bidx = 0; bidx < blobs; ++bidx) {
    const double cx = 4.0 + (side - 8.0) * unit(rng);
    const double cy = 4.0 + (side - 8.0) * unit(rng);
    const double s = 1.5 + 3.0 * unit(rng);
    const double amp = amp_lo + (amp_hi - amp_lo) * unit(rng);
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) {
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        p[y * side + x] += amp * std::exp(-d2 / (2.0 * s * s));
      }
  }
  return p;
}

}  // namespace

Dataset make_synthetic(int n, std::uint64_t seed, double noise, Split split) {
  if (n < 1) throw ConfigurationError("make_synthetic: n must be >= 1");
  if (noise < 0.0 || noise > 1.0)
    throw ConfigurationError("make_synthetic: noise must be in [0,1]");
  const int side = 28;
  const int dim = side * side;
  const int modes = 6;              // sub-prototypes per class
  const double class_sep = 3.0;     // class signal relative to the shared base

  // Prototypes come from a fixed sub-seed so train/validation share the same
  // concept regardless of n or the sample seed. Classes share one strong base
  // pattern; only a small multimodal delta distinguishes them, which keeps
  // margins tight and learning gradual.
  auto proto_rng = make_rng(seed, 0xC1A55);
  const Vec base = blob_field(side, 6, 0.15, 0.35, proto_rng);
  // Classes are weighted mixtures of a shared atom dictionary, so features
  // overlap across classes and margins stay modest.
  const int atoms = 12;
  std::vector<Vec> dict;
  for (int a = 0; a < atoms; ++a) dict.push_back(blob_field(side, 3, 0.5, 1.0, proto_rng));
  std::uniform_real_distribution<double> unit01(0.0, 1.0);
  std::array<std::array<Vec, modes>, kNumClasses> protos;
  for (int c = 0; c < kNumClasses; ++c)
    for (int m = 0; m < modes; ++m) {
      // sparse mixture: 3 of the shared atoms per class mode
      std::array<int, 12> order{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
      std::shuffle(order.begin(), order.end(), proto_rng);
      Vec mix = Vec::Zero(dim);
      double total = 0.0;
      for (int k = 0; k < 3; ++k) {
        const double w = 0.5 + 0.5 * unit01(proto_rng);
        mix += w * dict[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
        total += w;
      }
      protos[static_cast<std::size_t>(c)][static_cast<std::size_t>(m)] =
          base + (class_sep / total) * mix;
    }

  auto rng = make_rng(seed, split == Split::Train ? 0x7121 : 0x7122);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> shift_dist(-2, 2);
  std::uniform_int_distribution<int> mode_dist(0, modes - 1);

  Dataset d;
  d.split = split;
  d.images.resize(dim, n);
  d.raw_labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int c = i % kNumClasses;
    d.raw_labels[static_cast<std::size_t>(i)] = c;
    const Vec& p = protos[static_cast<std::size_t>(c)][static_cast<std::size_t>(mode_dist(rng))];
    const int dx = shift_dist(rng);
    const int dy = shift_dist(rng);
    const double gain = 0.7 + 0.6 * unit(rng);
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) {
        const int sx = x - dx;
        const int sy = y - dy;
        double v = 0.0;
        if (sx >= 0 && sx < side && sy >= 0 && sy < side) v = p[sy * side + sx];
        v = gain * v + noise * gauss(rng);
        d.images(y * side + x, i) = std::clamp(v, 0.0, 1.0);
      }
  }
  return d;
}

}  // namespace homeostat
