#pragma once

// Dataset loaders for WDBC (UCI CSV), MNIST (IDX) and CIFAR-10 (binary
// batches). Every loader returns one Dataset holding all samples with
// disjoint train/test index lists into it.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qls/error.hpp"

namespace qls {

using FloatRows = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Dataset {
  std::string name;
  FloatRows inputs;   // samples x features
  FloatRows targets;  // samples x classes (one-hot) or samples x 1 (binary)
  std::vector<int> labels;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;

  std::size_t samples() const { return static_cast<std::size_t>(inputs.rows()); }
  std::size_t features() const { return static_cast<std::size_t>(inputs.cols()); }
  std::size_t target_width() const { return static_cast<std::size_t>(targets.cols()); }
};

enum class Split { train, test };

inline const std::vector<std::size_t>& split_indices(const Dataset& data, Split split) {
  return split == Split::train ? data.train : data.test;
}

namespace detail {

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset) {
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

inline FloatRows one_hot(const std::vector<int>& labels, int classes) {
  FloatRows t = FloatRows::Zero(static_cast<Eigen::Index>(labels.size()), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) t(static_cast<Eigen::Index>(i), labels[i]) = 1.0f;
  return t;
}

}  // namespace detail

/// Loads the UCI `wdbc.data` layout: id, diagnosis (M/B), 30 real features.
/// Features are z-scored with training-split statistics; M maps to 1.
inline Dataset load_wdbc(const std::filesystem::path& path, std::uint64_t split_seed = 1,
                         std::size_t train_count = 400) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  constexpr std::size_t kFeatures = 30;
  std::vector<std::array<double, kFeatures>> rows;
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string field; std::getline(ss, field, ',');) fields.push_back(field);
    if (fields.size() != kFeatures + 2) {
      throw ParseError("wdbc line " + std::to_string(line_no) + ": expected 32 fields, got " +
                       std::to_string(fields.size()));
    }
    if (fields[1] == "M") {
      labels.push_back(1);
    } else if (fields[1] == "B") {
      labels.push_back(0);
    } else {
      throw ParseError("wdbc line " + std::to_string(line_no) + ": bad diagnosis '" + fields[1] + "'");
    }
    std::array<double, kFeatures> row{};
    for (std::size_t j = 0; j < kFeatures; ++j) {
      const std::string& f = fields[j + 2];
      std::size_t used = 0;
      try {
        row[j] = std::stod(f, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != f.size() || !std::isfinite(row[j])) {
        throw ParseError("wdbc line " + std::to_string(line_no) + ": bad feature '" + f + "'");
      }
    }
    rows.push_back(row);
  }
  if (rows.size() <= train_count) {
    throw ParseError("wdbc: only " + std::to_string(rows.size()) + " samples, need more than " +
                     std::to_string(train_count));
  }

  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(split_seed);
  std::shuffle(order.begin(), order.end(), rng);

  Dataset data;
  data.name = "wdbc";
  data.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_count));
  data.test.assign(order.begin() + static_cast<std::ptrdiff_t>(train_count), order.end());
  std::sort(data.train.begin(), data.train.end());
  std::sort(data.test.begin(), data.test.end());

  std::array<double, kFeatures> mean{};
  std::array<double, kFeatures> stddev{};
  for (std::size_t i : data.train)
    for (std::size_t j = 0; j < kFeatures; ++j) mean[j] += rows[i][j];
  for (double& m : mean) m /= static_cast<double>(train_count);
  for (std::size_t i : data.train)
    for (std::size_t j = 0; j < kFeatures; ++j) stddev[j] += (rows[i][j] - mean[j]) * (rows[i][j] - mean[j]);
  for (double& s : stddev) {
    s = std::sqrt(s / static_cast<double>(train_count));
    if (s == 0.0) s = 1.0;
  }

  data.inputs.resize(static_cast<Eigen::Index>(rows.size()), kFeatures);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < kFeatures; ++j)
      data.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          static_cast<float>((rows[i][j] - mean[j]) / stddev[j]);
  data.labels = std::move(labels);
  data.targets.resize(static_cast<Eigen::Index>(rows.size()), 1);
  for (std::size_t i = 0; i < rows.size(); ++i)
    data.targets(static_cast<Eigen::Index>(i), 0) = static_cast<float>(data.labels[i]);
  return data;
}

struct IdxImages {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<unsigned char> pixels;
};

inline IdxImages read_idx_images(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  if (bytes.size() < 16) throw LengthMismatch(path.string() + ": truncated IDX header");
  const std::uint32_t magic = detail::read_be32(bytes, 0);
  if (magic != 2051) throw BadMagic(path.string() + ": image magic " + std::to_string(magic) + " != 2051");
  IdxImages out;
  out.count = detail::read_be32(bytes, 4);
  out.rows = detail::read_be32(bytes, 8);
  out.cols = detail::read_be32(bytes, 12);
  const std::size_t expected = 16 + out.count * out.rows * out.cols;
  if (bytes.size() != expected) {
    throw LengthMismatch(path.string() + ": expected " + std::to_string(expected) + " bytes, found " +
                         std::to_string(bytes.size()));
  }
  out.pixels.assign(bytes.begin() + 16, bytes.end());
  return out;
}

inline std::vector<int> read_idx_labels(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  if (bytes.size() < 8) throw LengthMismatch(path.string() + ": truncated IDX header");
  const std::uint32_t magic = detail::read_be32(bytes, 0);
  if (magic != 2049) throw BadMagic(path.string() + ": label magic " + std::to_string(magic) + " != 2049");
  const std::size_t count = detail::read_be32(bytes, 4);
  if (bytes.size() != 8 + count) {
    throw LengthMismatch(path.string() + ": expected " + std::to_string(8 + count) + " bytes, found " +
                         std::to_string(bytes.size()));
  }
  std::vector<int> labels(bytes.begin() + 8, bytes.end());
  for (int l : labels) {
    if (l > 9) throw ParseError(path.string() + ": label " + std::to_string(l) + " outside 0..9");
  }
  return labels;
}

struct IdxPair {
  std::filesystem::path images;
  std::filesystem::path labels;
};

/// MNIST from IDX files. The test pair is optional; without it the dataset
/// has an empty test split.
inline Dataset load_mnist(const IdxPair& train, const std::optional<IdxPair>& test = std::nullopt) {
  std::vector<IdxImages> image_sets;
  std::vector<std::vector<int>> label_sets;
  image_sets.push_back(read_idx_images(train.images));
  label_sets.push_back(read_idx_labels(train.labels));
  if (test) {
    image_sets.push_back(read_idx_images(test->images));
    label_sets.push_back(read_idx_labels(test->labels));
  }
  const std::size_t features = image_sets[0].rows * image_sets[0].cols;
  std::size_t total = 0;
  for (std::size_t s = 0; s < image_sets.size(); ++s) {
    if (image_sets[s].count != label_sets[s].size()) {
      throw LengthMismatch("mnist: image count " + std::to_string(image_sets[s].count) + " != label count " +
                           std::to_string(label_sets[s].size()));
    }
    if (image_sets[s].rows * image_sets[s].cols != features) {
      throw LengthMismatch("mnist: train and test image shapes differ");
    }
    total += image_sets[s].count;
  }

  Dataset data;
  data.name = "mnist";
  data.inputs.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(features));
  std::size_t row = 0;
  for (std::size_t s = 0; s < image_sets.size(); ++s) {
    auto& target = s == 0 ? data.train : data.test;
    for (std::size_t i = 0; i < image_sets[s].count; ++i, ++row) {
      for (std::size_t j = 0; j < features; ++j) {
        data.inputs(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) =
            static_cast<float>(image_sets[s].pixels[i * features + j]) / 255.0f;
      }
      data.labels.push_back(label_sets[s][i]);
      target.push_back(row);
    }
  }
  data.targets = detail::one_hot(data.labels, 10);
  return data;
}

/// CIFAR-10 binary batches: 3073-byte records (label byte, 3072 pixels).
inline Dataset load_cifar10(const std::vector<std::filesystem::path>& train_batches,
                            const std::optional<std::filesystem::path>& test_batch = std::nullopt) {
  constexpr std::size_t kRecord = 3073;
  constexpr std::size_t kPixels = 3072;
  if (train_batches.empty()) throw IoError("cifar10: no training batch given");

  std::vector<std::vector<unsigned char>> files;
  for (const auto& p : train_batches) files.push_back(detail::read_file(p));
  if (test_batch) files.push_back(detail::read_file(*test_batch));
  std::size_t total = 0;
  for (std::size_t f = 0; f < files.size(); ++f) {
    if (files[f].empty() || files[f].size() % kRecord != 0) {
      throw LengthMismatch("cifar10: file size " + std::to_string(files[f].size()) +
                           " is not a positive multiple of 3073");
    }
    total += files[f].size() / kRecord;
  }

  Dataset data;
  data.name = "cifar10";
  data.inputs.resize(static_cast<Eigen::Index>(total), kPixels);
  std::size_t row = 0;
  for (std::size_t f = 0; f < files.size(); ++f) {
    const bool is_test = test_batch && f + 1 == files.size();
    const auto& bytes = files[f];
    for (std::size_t r = 0; r < bytes.size() / kRecord; ++r, ++row) {
      const unsigned char* rec = bytes.data() + r * kRecord;
      if (rec[0] > 9) throw ParseError("cifar10: label " + std::to_string(rec[0]) + " outside 0..9");
      data.labels.push_back(rec[0]);
      for (std::size_t j = 0; j < kPixels; ++j) {
        data.inputs(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) =
            static_cast<float>(rec[1 + j]) / 255.0f;
      }
      (is_test ? data.test : data.train).push_back(row);
    }
  }
  data.targets = detail::one_hot(data.labels, 10);
  return data;
}

}  // namespace qls
