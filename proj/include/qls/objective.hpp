#pragma once

// Objectives consumed by the line probe and trainer. A batch is a list of
// positions into the objective's training pool (0..sample_count()-1).

#include <Eigen/Core>

#include <concepts>
#include <span>
#include <vector>

#include "qls/dataio.hpp"
#include "qls/netcore.hpp"

namespace qls {

template <class T>
concept BatchObjective = requires(const T& obj, const Vector& x, std::span<const std::size_t> batch, Vector& grad) {
  { obj.dimension() } -> std::convertible_to<std::size_t>;
  { obj.sample_count() } -> std::convertible_to<std::size_t>;
  { obj.value(x, batch) } -> std::convertible_to<double>;
  { obj.value_grad(x, batch, grad) } -> std::convertible_to<double>;
};

template <class T>
concept ClassifierObjective = BatchObjective<T> && requires(const T& obj, const Vector& x) {
  { obj.error(x, Split::train) } -> std::convertible_to<double>;
};

/// Network loss over the training split of a dataset.
class NetworkObjective {
 public:
  NetworkObjective(NetworkSpec spec, const Dataset& data) : spec_(std::move(spec)), data_(&data) {
    spec_.validate();
    if (spec_.layers.front() != data.features()) throw InvalidSpec("network input width != dataset features");
    if (spec_.layers.back() != data.target_width()) throw InvalidSpec("network output width != target width");
  }

  const NetworkSpec& spec() const { return spec_; }
  const Dataset& data() const { return *data_; }
  std::size_t dimension() const { return spec_.parameter_count(); }
  std::size_t sample_count() const { return data_->train.size(); }

  double value(const Vector& x, std::span<const std::size_t> batch) const {
    return batch_loss(spec_, x, *data_, rows(batch));
  }
  double value_grad(const Vector& x, std::span<const std::size_t> batch, Vector& grad) const {
    return batch_grad(spec_, x, *data_, rows(batch), grad);
  }
  double error(const Vector& x, Split split) const { return classification_error(spec_, x, *data_, split); }

 private:
  std::vector<std::size_t> rows(std::span<const std::size_t> batch) const {
    std::vector<std::size_t> r(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) r[i] = data_->train[batch[i]];
    return r;
  }

  NetworkSpec spec_;
  const Dataset* data_;
};

/// f(x) = 1/2 x^T H x - c^T x, independent of the batch.
class QuadraticObjective {
 public:
  QuadraticObjective(Eigen::MatrixXd hessian, Vector linear) : h_(std::move(hessian)), c_(std::move(linear)) {
    if (h_.rows() != h_.cols() || h_.rows() != c_.size()) throw DimensionMismatch("QuadraticObjective shapes");
  }

  std::size_t dimension() const { return static_cast<std::size_t>(c_.size()); }
  std::size_t sample_count() const { return 1; }
  double value(const Vector& x, std::span<const std::size_t>) const { return 0.5 * x.dot(h_ * x) - c_.dot(x); }
  double value_grad(const Vector& x, std::span<const std::size_t> batch, Vector& grad) const {
    grad = h_ * x - c_;
    return value(x, batch);
  }

 private:
  Eigen::MatrixXd h_;
  Vector c_;
};

}  // namespace qls
