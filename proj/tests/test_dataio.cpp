#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "qls/dataio.hpp"
#include "support.hpp"

using namespace qls;
using qls::testing::scratch_dir;

namespace {

void put_be32(std::ofstream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_idx_images(const std::filesystem::path& p, std::uint32_t magic, std::uint32_t n, std::uint32_t rows,
                      std::uint32_t cols, std::size_t drop_bytes = 0) {
  std::ofstream out(p, std::ios::binary);
  put_be32(out, magic);
  put_be32(out, n);
  put_be32(out, rows);
  put_be32(out, cols);
  for (std::size_t i = 0; i < n * rows * cols - drop_bytes; ++i) out.put(static_cast<char>(i * 37 % 256));
}

void write_idx_labels(const std::filesystem::path& p, std::uint32_t magic, std::uint32_t n) {
  std::ofstream out(p, std::ios::binary);
  put_be32(out, magic);
  put_be32(out, n);
  for (std::uint32_t i = 0; i < n; ++i) out.put(static_cast<char>(i % 10));
}

void write_cifar(const std::filesystem::path& p, std::size_t records, std::size_t extra = 0) {
  std::ofstream out(p, std::ios::binary);
  for (std::size_t r = 0; r < records; ++r) {
    out.put(static_cast<char>((r * 3) % 10));
    for (std::size_t i = 0; i < 3072; ++i) out.put(static_cast<char>((r + i) % 256));
  }
  for (std::size_t i = 0; i < extra; ++i) out.put('x');
}

}  // namespace

TEST(LoadWdbc, ShapeAndSplit) {
  const Dataset d = load_wdbc(qls::testing::wdbc_path());
  EXPECT_EQ(d.samples(), 569u);
  EXPECT_EQ(d.features(), 30u);
  EXPECT_EQ(d.train.size(), 400u);
  EXPECT_EQ(d.test.size(), 169u);
  EXPECT_EQ(d.target_width(), 1u);
  std::set<std::size_t> train(d.train.begin(), d.train.end());
  for (std::size_t i : d.test) EXPECT_FALSE(train.count(i));
  EXPECT_TRUE(d.inputs.allFinite());
  int malignant = 0;
  for (std::size_t i = 0; i < d.samples(); ++i) {
    EXPECT_EQ(d.targets(static_cast<Eigen::Index>(i), 0), static_cast<float>(d.labels[i]));
    malignant += d.labels[i];
  }
  EXPECT_EQ(malignant, 212);
}

TEST(LoadWdbc, TrainingColumnsAreStandardized) {
  const Dataset d = load_wdbc(qls::testing::wdbc_path());
  for (Eigen::Index j = 0; j < 30; ++j) {
    double s = 0, s2 = 0;
    for (std::size_t i : d.train) s += d.inputs(static_cast<Eigen::Index>(i), j);
    const double mean = s / 400.0;
    for (std::size_t i : d.train) {
      const double v = d.inputs(static_cast<Eigen::Index>(i), j) - mean;
      s2 += v * v;
    }
    EXPECT_NEAR(mean, 0.0, 1e-6);
    EXPECT_NEAR(s2 / 400.0, 1.0, 1e-3);
  }
}

TEST(LoadWdbc, SplitDependsOnSeedOnly) {
  const Dataset a = load_wdbc(qls::testing::wdbc_path(), 3);
  const Dataset b = load_wdbc(qls::testing::wdbc_path(), 3);
  const Dataset c = load_wdbc(qls::testing::wdbc_path(), 4);
  EXPECT_EQ(a.train, b.train);
  EXPECT_NE(a.train, c.train);
}

TEST(LoadWdbc, Errors) {
  const auto dir = scratch_dir("wdbc_errors");
  {
    std::ifstream in(qls::testing::wdbc_path());
    std::ofstream out(dir / "bad.data");
    std::string line;
    std::getline(in, line);
    line[line.find(',') + 1] = 'X';
    out << line << "\n";
    while (std::getline(in, line)) out << line << "\n";
  }
  EXPECT_THROW(load_wdbc(dir / "bad.data"), ParseError);
  {
    std::ofstream out(dir / "short.data");
    out << "1,M,1.0,2.0\n";
  }
  EXPECT_THROW(load_wdbc(dir / "short.data"), ParseError);
  EXPECT_THROW(load_wdbc(dir / "missing.data"), IoError);
}

TEST(LoadMnist, SyntheticIdx) {
  const auto dir = scratch_dir("mnist");
  write_idx_images(dir / "tr-img", 2051, 20, 28, 28);
  write_idx_labels(dir / "tr-lab", 2049, 20);
  write_idx_images(dir / "te-img", 2051, 5, 28, 28);
  write_idx_labels(dir / "te-lab", 2049, 5);
  const Dataset d = load_mnist({dir / "tr-img", dir / "tr-lab"}, IdxPair{dir / "te-img", dir / "te-lab"});
  EXPECT_EQ(d.train.size(), 20u);
  EXPECT_EQ(d.test.size(), 5u);
  EXPECT_EQ(d.features(), 784u);
  EXPECT_EQ(d.target_width(), 10u);
  EXPECT_GE(d.inputs.minCoeff(), 0.0f);
  EXPECT_LE(d.inputs.maxCoeff(), 1.0f);
  EXPECT_FLOAT_EQ(d.inputs(0, 1), 37.0f / 255.0f);
  for (std::size_t i = 0; i < d.samples(); ++i) {
    const auto row = d.targets.row(static_cast<Eigen::Index>(i));
    EXPECT_FLOAT_EQ(row.sum(), 1.0f);
    Eigen::Index arg;
    row.maxCoeff(&arg);
    EXPECT_EQ(arg, d.labels[i]);
  }
}

TEST(LoadMnist, Errors) {
  const auto dir = scratch_dir("mnist_errors");
  write_idx_images(dir / "wrong-magic", 2049, 2, 28, 28);
  write_idx_images(dir / "short-img", 2051, 2, 28, 28, 10);
  write_idx_images(dir / "img", 2051, 3, 28, 28);
  write_idx_labels(dir / "lab", 2049, 2);
  write_idx_labels(dir / "lab3", 2049, 3);
  EXPECT_THROW(read_idx_images(dir / "wrong-magic"), BadMagic);
  EXPECT_THROW(read_idx_images(dir / "short-img"), LengthMismatch);
  EXPECT_THROW(read_idx_labels(dir / "img"), BadMagic);
  EXPECT_THROW(load_mnist({dir / "img", dir / "lab"}), LengthMismatch);
  EXPECT_THROW(load_mnist({dir / "nope", dir / "lab3"}), IoError);
  EXPECT_NO_THROW(load_mnist({dir / "img", dir / "lab3"}));
}

TEST(LoadCifar, SyntheticBatches) {
  const auto dir = scratch_dir("cifar");
  write_cifar(dir / "data_batch_1.bin", 12);
  write_cifar(dir / "test_batch.bin", 4);
  const Dataset d = load_cifar10({dir / "data_batch_1.bin"}, dir / "test_batch.bin");
  EXPECT_EQ(d.train.size(), 12u);
  EXPECT_EQ(d.test.size(), 4u);
  EXPECT_EQ(d.features(), 3072u);
  EXPECT_EQ(d.target_width(), 10u);
  for (int l : d.labels) {
    EXPECT_GE(l, 0);
    EXPECT_LE(l, 9);
  }
  EXPECT_EQ(d.labels[1], 3);
  EXPECT_FLOAT_EQ(d.inputs(1, 0), 1.0f / 255.0f);
  EXPECT_GE(d.inputs.minCoeff(), 0.0f);
  EXPECT_LE(d.inputs.maxCoeff(), 1.0f);
}

TEST(LoadCifar, TruncatedFile) {
  const auto dir = scratch_dir("cifar_bad");
  write_cifar(dir / "b.bin", 2, 100);
  EXPECT_THROW(load_cifar10({dir / "b.bin"}), LengthMismatch);
  EXPECT_THROW(load_cifar10({dir / "missing.bin"}), IoError);
}
