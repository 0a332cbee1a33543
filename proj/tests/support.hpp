#pragma once

// Shared fixtures: toy datasets, finite-difference oracle, scratch dirs.

#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "qls/dataio.hpp"
#include "qls/netcore.hpp"

namespace qls::testing {

inline std::filesystem::path data_dir() { return QLS_TEST_DATA_DIR; }
inline std::filesystem::path wdbc_path() { return data_dir() / "wdbc.data"; }

/// Fresh directory under the system temp dir, removed and recreated.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("qls_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// Random classification data: inputs uniform in [0,1], labels uniform.
/// `classes` == 1 gives a binary target column.
inline Dataset random_dataset(std::size_t n, std::size_t features, int classes, std::uint64_t seed,
                              std::size_t train = 0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Dataset d;
  d.name = "random";
  d.inputs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(features));
  for (Eigen::Index i = 0; i < d.inputs.size(); ++i) d.inputs.data()[i] = u(rng);
  const int label_count = classes == 1 ? 2 : classes;
  std::uniform_int_distribution<int> lab(0, label_count - 1);
  for (std::size_t i = 0; i < n; ++i) d.labels.push_back(lab(rng));
  if (classes == 1) {
    d.targets.resize(static_cast<Eigen::Index>(n), 1);
    for (std::size_t i = 0; i < n; ++i) d.targets(static_cast<Eigen::Index>(i), 0) = static_cast<float>(d.labels[i]);
  } else {
    d.targets = FloatRows::Zero(static_cast<Eigen::Index>(n), classes);
    for (std::size_t i = 0; i < n; ++i) d.targets(static_cast<Eigen::Index>(i), d.labels[i]) = 1.0f;
  }
  const std::size_t n_train = train ? train : n;
  for (std::size_t i = 0; i < n; ++i) (i < n_train ? d.train : d.test).push_back(i);
  return d;
}

inline std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  std::iota(r.begin(), r.end(), std::size_t{0});
  return r;
}

/// Central difference of batch_loss along coordinate i, with a step scaled
/// to the coordinate's magnitude.
inline double central_difference(const NetworkSpec& spec, const Vector& x, const Dataset& data,
                                 const std::vector<std::size_t>& rows, Eigen::Index i) {
  const double h = 1e-5 * std::max(1.0, std::abs(x[i]));
  Vector xp = x, xm = x;
  xp[i] += h;
  xm[i] -= h;
  return (batch_loss(spec, xp, data, rows) - batch_loss(spec, xm, data, rows)) / (2.0 * h);
}

/// Relative error with a floor so tiny gradients are compared absolutely.
inline double relative_error(double a, double b, double floor = 1e-7) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace qls::testing
