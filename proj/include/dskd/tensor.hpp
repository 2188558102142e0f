#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dskd/rng.hpp"

namespace dskd {

// Dense 64-bit storage, row-major so raw buffers serialize in row order.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using BoolMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMask = std::vector<uint8_t>;  // 1 = row participates

/// One node in a reverse-mode differentiation graph. Values are stored as a
/// flattened matrix: for a logical shape (d0, ..., dk) the matrix has
/// prod(d0..dk-1) rows and dk columns, matching row-major element order.
struct TensorNode {
  Mat value;
  Mat grad;  // empty until a gradient is accumulated
  std::vector<int> shape;
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;

  void ensure_grad() {
    if (grad.size() == 0) grad = Mat::Zero(value.rows(), value.cols());
  }
  template <class E>
  void accumulate(const E& e) {
    if (!requires_grad) return;
    ensure_grad();
    grad += e;
  }
};

/// Value-semantic handle to a TensorNode. Copies share the node, like the
/// underlying graph requires; use detach() for an independent constant.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}

  static Tensor from(Mat m, bool requires_grad = false);
  static Tensor from_shape(std::vector<int> shape, const std::vector<double>& data,
                           bool requires_grad = false);
  static Tensor zeros(int rows, int cols, bool requires_grad = false);
  static Tensor ones(int rows, int cols);
  static Tensor constant(int rows, int cols, double v);
  static Tensor scalar(double v);
  static Tensor randn(int rows, int cols, Rng& rng, double stddev,
                      bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int ndim() const { return static_cast<int>(node_->shape.size()); }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  Eigen::Index numel() const { return node_->value.size(); }

  const Mat& val() const { return node_->value; }
  Mat& val() { return node_->value; }
  double item() const;

  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool rg);
  bool has_grad() const { return node_ && node_->grad.size() != 0; }
  const Mat& grad() const;
  void zero_grad();

  /// Constant copy of the current value, disconnected from any graph.
  Tensor detach() const;
  /// Same data viewed under a new logical shape (gradient passes through).
  Tensor reshape(std::vector<int> new_shape) const;

  const std::shared_ptr<TensorNode>& node() const { return node_; }

 private:
  std::shared_ptr<TensorNode> node_;
};

/// Runs reverse-mode differentiation from a scalar loss, accumulating into
/// the grad buffer of every requires_grad ancestor. Grads are not cleared
/// first: repeated calls accumulate.
void backward(const Tensor& loss);

std::string shape_str(const Tensor& t);
std::string shape_str(const std::vector<int>& s);

namespace detail {
Tensor make_node(Mat value, std::vector<int> shape,
                 std::vector<std::shared_ptr<TensorNode>> parents);
}

}  // namespace dskd
