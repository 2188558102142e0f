#include "dskd/tensor.hpp"

#include <stdexcept>
#include <unordered_set>

namespace dskd {

std::string shape_str(const std::vector<int>& s) {
  std::string out = "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

std::string shape_str(const Tensor& t) { return shape_str(t.shape()); }

static std::vector<int> check_shape(const std::vector<int>& shape, Eigen::Index numel) {
  if (shape.empty() || shape.size() > 3)
    throw std::invalid_argument("tensor shape must have 1 to 3 dims, got " +
                                shape_str(shape));
  long long prod = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("tensor dims must be positive: " + shape_str(shape));
    prod *= d;
  }
  if (prod != numel)
    throw std::invalid_argument("shape " + shape_str(shape) + " does not match " +
                                std::to_string(numel) + " elements");
  return shape;
}

Tensor Tensor::from(Mat m, bool requires_grad) {
  auto n = std::make_shared<TensorNode>();
  n->shape = {static_cast<int>(m.rows()), static_cast<int>(m.cols())};
  n->value = std::move(m);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::from_shape(std::vector<int> shape, const std::vector<double>& data,
                          bool requires_grad) {
  check_shape(shape, static_cast<Eigen::Index>(data.size()));
  int cols = shape.back();
  int rows = static_cast<int>(data.size()) / cols;
  auto n = std::make_shared<TensorNode>();
  n->value = Eigen::Map<const Mat>(data.data(), rows, cols);
  n->shape = std::move(shape);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) {
  return from(Mat::Zero(rows, cols), requires_grad);
}

Tensor Tensor::ones(int rows, int cols) { return from(Mat::Ones(rows, cols)); }

Tensor Tensor::constant(int rows, int cols, double v) {
  return from(Mat::Constant(rows, cols, v));
}

Tensor Tensor::scalar(double v) { return from(Mat::Constant(1, 1, v)); }

Tensor Tensor::randn(int rows, int cols, Rng& rng, double stddev, bool requires_grad) {
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = stddev * rng.normal();
  return from(std::move(m), requires_grad);
}

double Tensor::item() const {
  if (numel() != 1)
    throw std::invalid_argument("item() requires a scalar tensor, got " + shape_str(*this));
  return node_->value(0, 0);
}

void Tensor::set_requires_grad(bool rg) {
  if (node_->backward_fn)
    throw std::invalid_argument("requires_grad can only be toggled on leaf tensors");
  node_->requires_grad = rg;
}

const Mat& Tensor::grad() const {
  if (!has_grad())
    throw std::runtime_error("no gradient present; call backward() first");
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_ && node_->grad.size() != 0) node_->grad.setZero();
}

Tensor Tensor::detach() const {
  auto n = std::make_shared<TensorNode>();
  n->value = node_->value;
  n->shape = node_->shape;
  n->requires_grad = false;
  return Tensor(std::move(n));
}

Tensor Tensor::reshape(std::vector<int> new_shape) const {
  check_shape(new_shape, numel());
  int cols = new_shape.back();
  int rows = static_cast<int>(numel()) / cols;
  // row-major storage: a reshape is a remap of the same linear buffer
  Mat v = Eigen::Map<const Mat>(node_->value.data(), rows, cols);
  Tensor out = detail::make_node(std::move(v), std::move(new_shape), {node_});
  if (out.requires_grad()) {
    auto src = node_.get();
    Eigen::Index r = node_->value.rows(), c = node_->value.cols();
    out.node()->backward_fn = [src, r, c](TensorNode& self) {
      src->accumulate(Eigen::Map<const Mat>(self.grad.data(), r, c));
    };
  }
  return out;
}

namespace detail {
Tensor make_node(Mat value, std::vector<int> shape,
                 std::vector<std::shared_ptr<TensorNode>> parents) {
  auto n = std::make_shared<TensorNode>();
  n->value = std::move(value);
  n->shape = std::move(shape);
  n->parents = std::move(parents);
  for (const auto& p : n->parents)
    if (p && p->requires_grad) n->requires_grad = true;
  return Tensor(std::move(n));
}
}  // namespace detail

void backward(const Tensor& loss) {
  if (!loss.defined()) throw std::invalid_argument("backward: undefined tensor");
  if (loss.numel() != 1)
    throw std::invalid_argument("backward requires a scalar loss, got " + shape_str(loss));

  TensorNode* root = loss.node().get();
  if (!root->requires_grad) return;  // loss independent of every parameter

  // iterative post-order DFS over requires_grad ancestors
  struct Frame {
    TensorNode* n;
    size_t next = 0;
  };
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited{root};
  std::vector<Frame> stack{{root}};
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.n->parents.size()) {
      TensorNode* p = f.n->parents[f.next++].get();
      if (p && p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p});
      }
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }

  root->accumulate(Mat::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* n = *it;
    if (n->backward_fn) {
      n->ensure_grad();
      n->backward_fn(*n);
    }
  }
}

}  // namespace dskd
