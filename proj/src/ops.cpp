#include "dskd/ops.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dskd {

namespace {

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(op) + ": shape mismatch: " + shape_str(a) +
                                " vs " + shape_str(b));
}

void check_2d(const char* op, const Tensor& a) {
  if (a.ndim() != 2)
    throw std::invalid_argument(std::string(op) + ": expected a 2-D tensor, got " +
                                shape_str(a));
}

using GradFn = std::function<Mat(const Mat& g, const Mat& x, const Mat& y)>;

Tensor unary(const Tensor& a, Mat value, GradFn dfn) {
  Tensor out = detail::make_node(std::move(value), a.shape(), {a.node()});
  if (out.requires_grad()) {
    auto* pa = a.node().get();
    out.node()->backward_fn = [pa, dfn = std::move(dfn)](TensorNode& self) {
      pa->accumulate(dfn(self.grad, pa->value, self.value));
    };
  }
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  Tensor out = detail::make_node(a.val() + b.val(), a.shape(), {a.node(), b.node()});
  if (out.requires_grad()) {
    auto *pa = a.node().get(), *pb = b.node().get();
    out.node()->backward_fn = [pa, pb](TensorNode& self) {
      pa->accumulate(self.grad);
      pb->accumulate(self.grad);
    };
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  Tensor out = detail::make_node(a.val() - b.val(), a.shape(), {a.node(), b.node()});
  if (out.requires_grad()) {
    auto *pa = a.node().get(), *pb = b.node().get();
    out.node()->backward_fn = [pa, pb](TensorNode& self) {
      pa->accumulate(self.grad);
      pb->accumulate(-self.grad);
    };
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape("mul", a, b);
  Tensor out = detail::make_node(a.val().cwiseProduct(b.val()), a.shape(),
                                 {a.node(), b.node()});
  if (out.requires_grad()) {
    auto *pa = a.node().get(), *pb = b.node().get();
    out.node()->backward_fn = [pa, pb](TensorNode& self) {
      pa->accumulate(self.grad.cwiseProduct(pb->value));
      pb->accumulate(self.grad.cwiseProduct(pa->value));
    };
  }
  return out;
}

Tensor divide(const Tensor& a, const Tensor& b) {
  check_same_shape("divide", a, b);
  Tensor out = detail::make_node(a.val().cwiseQuotient(b.val()), a.shape(),
                                 {a.node(), b.node()});
  if (out.requires_grad()) {
    auto *pa = a.node().get(), *pb = b.node().get();
    out.node()->backward_fn = [pa, pb](TensorNode& self) {
      pa->accumulate(self.grad.cwiseQuotient(pb->value));
      pb->accumulate(-self.grad.cwiseProduct(self.value).cwiseQuotient(pb->value));
    };
  }
  return out;
}

Tensor scalar_mul(const Tensor& a, double c) {
  return unary(a, a.val() * c,
               [c](const Mat& g, const Mat&, const Mat&) -> Mat { return g * c; });
}

Tensor add_scalar(const Tensor& a, double c) {
  return unary(a, (a.val().array() + c).matrix(),
               [](const Mat& g, const Mat&, const Mat&) -> Mat { return g; });
}

Tensor exp(const Tensor& a) {
  return unary(a, a.val().array().exp().matrix(),
               [](const Mat& g, const Mat&, const Mat& y) -> Mat {
                 return g.cwiseProduct(y);
               });
}

Tensor log(const Tensor& a) {
  return unary(a, a.val().array().log().matrix(),
               [](const Mat& g, const Mat& x, const Mat&) -> Mat {
                 return g.cwiseQuotient(x);
               });
}

Tensor log_clamped(const Tensor& a, double floor) {
  return unary(a, a.val().array().max(floor).log().matrix(),
               [floor](const Mat& g, const Mat& x, const Mat&) -> Mat {
                 // below the clamp the output is constant
                 return (x.array() > floor)
                     .select(g.cwiseQuotient(x), Mat::Zero(g.rows(), g.cols()));
               });
}

Tensor sigmoid(const Tensor& a) {
  return unary(a, (1.0 / (1.0 + (-a.val().array()).exp())).matrix(),
               [](const Mat& g, const Mat&, const Mat& y) -> Mat {
                 return (g.array() * y.array() * (1.0 - y.array())).matrix();
               });
}

Tensor abs(const Tensor& a) {
  return unary(a, a.val().array().abs().matrix(),
               [](const Mat& g, const Mat& x, const Mat&) -> Mat {
                 return (g.array() * x.array().sign()).matrix();
               });
}

Tensor sqrt(const Tensor& a) {
  return unary(a, a.val().array().sqrt().matrix(),
               [](const Mat& g, const Mat&, const Mat& y) -> Mat {
                 return (g.array() / (2.0 * y.array())).matrix();
               });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  return unary(a, a.val().array().max(lo).min(hi).matrix(),
               [lo, hi](const Mat& g, const Mat& x, const Mat&) -> Mat {
                 return (x.array() > lo && x.array() < hi)
                     .select(g, Mat::Zero(g.rows(), g.cols()));
               });
}

Tensor gelu(const Tensor& a) {
  static constexpr double k = 0.7978845608028654;  // sqrt(2/pi)
  static constexpr double c3 = 0.044715;
  auto x = a.val().array();
  Eigen::ArrayXXd t = (k * (x + c3 * x.cube())).tanh();
  return unary(a, (0.5 * x * (1.0 + t)).matrix(),
               [](const Mat& g, const Mat& xv, const Mat&) -> Mat {
                 auto x = xv.array();
                 Eigen::ArrayXXd t = (k * (x + c3 * x.cube())).tanh();
                 Eigen::ArrayXXd d = 0.5 * (1.0 + t) +
                     0.5 * x * (1.0 - t.square()) * k * (1.0 + 3.0 * c3 * x.square());
                 return (g.array() * d).matrix();
               });
}

Tensor leaky_relu(const Tensor& a, double slope) {
  return unary(a, a.val().array().max(a.val().array() * slope).matrix(),
               [slope](const Mat& g, const Mat& x, const Mat&) -> Mat {
                 return (x.array() > 0.0).select(g, g * slope);
               });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_2d("matmul", a);
  check_2d("matmul", b);
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: inner dimensions differ: " + shape_str(a) +
                                " vs " + shape_str(b));
  Tensor out = detail::make_node(a.val() * b.val(),
                                 {static_cast<int>(a.rows()), static_cast<int>(b.cols())},
                                 {a.node(), b.node()});
  if (out.requires_grad()) {
    auto *pa = a.node().get(), *pb = b.node().get();
    out.node()->backward_fn = [pa, pb](TensorNode& self) {
      if (pa->requires_grad) pa->accumulate(self.grad * pb->value.transpose());
      if (pb->requires_grad) pb->accumulate(pa->value.transpose() * self.grad);
    };
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  check_2d("transpose", a);
  Tensor out = detail::make_node(a.val().transpose(),
                                 {static_cast<int>(a.cols()), static_cast<int>(a.rows())},
                                 {a.node()});
  if (out.requires_grad()) {
    auto* pa = a.node().get();
    out.node()->backward_fn = [pa](TensorNode& self) {
      pa->accumulate(self.grad.transpose());
    };
  }
  return out;
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  check_2d("affine", x);
  check_2d("affine", w);
  if (x.cols() != w.rows())
    throw std::invalid_argument("affine: inner dimensions differ: " + shape_str(x) +
                                " vs " + shape_str(w));
  if (b.rows() != 1 || b.cols() != w.cols())
    throw std::invalid_argument("affine: bias must be 1x" + std::to_string(w.cols()) +
                                ", got " + shape_str(b));
  Mat y = x.val() * w.val();
  y.rowwise() += b.val().row(0);
  Tensor out = detail::make_node(std::move(y),
                                 {static_cast<int>(x.rows()), static_cast<int>(w.cols())},
                                 {x.node(), w.node(), b.node()});
  if (out.requires_grad()) {
    auto *px = x.node().get(), *pw = w.node().get(), *pb = b.node().get();
    out.node()->backward_fn = [px, pw, pb](TensorNode& self) {
      if (px->requires_grad) px->accumulate(self.grad * pw->value.transpose());
      if (pw->requires_grad) pw->accumulate(px->value.transpose() * self.grad);
      if (pb->requires_grad) pb->accumulate(self.grad.colwise().sum());
    };
  }
  return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: empty input");
  Eigen::Index rows = parts[0].rows(), cols = 0;
  std::vector<std::shared_ptr<TensorNode>> parents;
  for (const auto& p : parts) {
    check_2d("concat_cols", p);
    if (p.rows() != rows)
      throw std::invalid_argument("concat_cols: row counts differ: " + shape_str(parts[0]) +
                                  " vs " + shape_str(p));
    cols += p.cols();
    parents.push_back(p.node());
  }
  Mat y(rows, cols);
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    y.middleCols(off, p.cols()) = p.val();
    off += p.cols();
  }
  Tensor out = detail::make_node(std::move(y),
                                 {static_cast<int>(rows), static_cast<int>(cols)},
                                 std::move(parents));
  if (out.requires_grad()) {
    out.node()->backward_fn = [](TensorNode& self) {
      Eigen::Index off = 0;
      for (auto& p : self.parents) {
        Eigen::Index c = p->value.cols();
        p->accumulate(self.grad.middleCols(off, c));
        off += c;
      }
    };
  }
  return out;
}

Tensor slice_cols(const Tensor& a, int start, int len) {
  check_2d("slice_cols", a);
  if (start < 0 || len <= 0 || start + len > a.cols())
    throw std::invalid_argument("slice_cols: range [" + std::to_string(start) + ", " +
                                std::to_string(start + len) + ") out of " + shape_str(a));
  Tensor out = detail::make_node(a.val().middleCols(start, len),
                                 {static_cast<int>(a.rows()), len}, {a.node()});
  if (out.requires_grad()) {
    auto* pa = a.node().get();
    out.node()->backward_fn = [pa, start, len](TensorNode& self) {
      pa->ensure_grad();
      pa->grad.middleCols(start, len) += self.grad;
    };
  }
  return out;
}

Tensor row_gather(const Tensor& table, const std::vector<int>& ids, int zero_id) {
  check_2d("row_gather", table);
  const Eigen::Index v = table.rows(), d = table.cols();
  Mat y = Mat::Zero(static_cast<Eigen::Index>(ids.size()), d);
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == zero_id) continue;
    if (ids[i] < 0 || ids[i] >= v)
      throw std::invalid_argument("row_gather: id " + std::to_string(ids[i]) +
                                  " out of range for " + shape_str(table));
    y.row(static_cast<Eigen::Index>(i)) = table.val().row(ids[i]);
  }
  Tensor out = detail::make_node(std::move(y),
                                 {static_cast<int>(ids.size()), static_cast<int>(d)},
                                 {table.node()});
  if (out.requires_grad()) {
    auto* pt = table.node().get();
    out.node()->backward_fn = [pt, ids, zero_id](TensorNode& self) {
      pt->ensure_grad();
      for (size_t i = 0; i < ids.size(); ++i)
        if (ids[i] != zero_id)
          pt->grad.row(ids[i]) += self.grad.row(static_cast<Eigen::Index>(i));
    };
  }
  return out;
}

Tensor sum(const Tensor& a) {
  Tensor out = detail::make_node(Mat::Constant(1, 1, a.val().sum()), {1, 1}, {a.node()});
  if (out.requires_grad()) {
    auto* pa = a.node().get();
    out.node()->backward_fn = [pa](TensorNode& self) {
      pa->accumulate(Mat::Constant(pa->value.rows(), pa->value.cols(), self.grad(0, 0)));
    };
  }
  return out;
}

Tensor mean(const Tensor& a) {
  const double n = static_cast<double>(a.numel());
  Tensor out = detail::make_node(Mat::Constant(1, 1, a.val().sum() / n), {1, 1}, {a.node()});
  if (out.requires_grad()) {
    auto* pa = a.node().get();
    out.node()->backward_fn = [pa, n](TensorNode& self) {
      pa->accumulate(Mat::Constant(pa->value.rows(), pa->value.cols(), self.grad(0, 0) / n));
    };
  }
  return out;
}

Tensor row_sums(const Tensor& a) {
  check_2d("row_sums", a);
  Tensor out = detail::make_node(a.val().rowwise().sum(),
                                 {static_cast<int>(a.rows()), 1}, {a.node()});
  if (out.requires_grad()) {
    auto* pa = a.node().get();
    out.node()->backward_fn = [pa](TensorNode& self) {
      pa->accumulate(self.grad.col(0).replicate(1, pa->value.cols()));
    };
  }
  return out;
}

Tensor masked_row_mean(const Tensor& a, const RowMask& mask) {
  check_2d("masked_row_mean", a);
  if (static_cast<Eigen::Index>(mask.size()) != a.rows())
    throw std::invalid_argument("masked_row_mean: mask length " +
                                std::to_string(mask.size()) + " vs " + shape_str(a));
  double count = 0, total = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    if (mask[static_cast<size_t>(i)]) {
      total += a.val().row(i).sum();
      count += 1;
    }
  if (count == 0) throw std::invalid_argument("masked_row_mean: mask admits no rows");
  Tensor out = detail::make_node(Mat::Constant(1, 1, total / count), {1, 1}, {a.node()});
  if (out.requires_grad()) {
    auto* pa = a.node().get();
    out.node()->backward_fn = [pa, mask, count](TensorNode& self) {
      pa->ensure_grad();
      const double g = self.grad(0, 0) / count;
      for (Eigen::Index i = 0; i < pa->value.rows(); ++i)
        if (mask[static_cast<size_t>(i)]) pa->grad.row(i).array() += g;
    };
  }
  return out;
}

Tensor softmax_rows(const Tensor& x, const BoolMask* mask, bool* degenerate) {
  check_2d("softmax_rows", x);
  if (mask && (mask->rows() != x.rows() || mask->cols() != x.cols()))
    throw std::invalid_argument("softmax_rows: mask shape (" +
                                std::to_string(mask->rows()) + "x" +
                                std::to_string(mask->cols()) + ") vs " + shape_str(x));
  if (degenerate) *degenerate = false;
  const Eigen::Index n = x.rows(), m = x.cols();
  Mat y = Mat::Zero(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < m; ++j)
      if (!mask || (*mask)(i, j)) mx = std::max(mx, x.val()(i, j));
    if (!std::isfinite(mx)) {  // nothing admitted in this row
      if (degenerate) *degenerate = true;
      continue;
    }
    double s = 0;
    for (Eigen::Index j = 0; j < m; ++j)
      if (!mask || (*mask)(i, j)) {
        y(i, j) = std::exp(x.val()(i, j) - mx);
        s += y(i, j);
      }
    y.row(i) /= s;
  }
  Tensor out = detail::make_node(std::move(y), x.shape(), {x.node()});
  if (out.requires_grad()) {
    auto* px = x.node().get();
    out.node()->backward_fn = [px](TensorNode& self) {
      // masked entries have y = 0, so they contribute nothing and get nothing
      Mat gin(self.value.rows(), self.value.cols());
      for (Eigen::Index i = 0; i < self.value.rows(); ++i) {
        const double dot = self.grad.row(i).dot(self.value.row(i));
        gin.row(i) = self.value.row(i).cwiseProduct(
            (self.grad.row(i).array() - dot).matrix());
      }
      px->accumulate(gin);
    };
  }
  return out;
}

Tensor std_normalize_rows(const Tensor& x) {
  check_2d("std_normalize_rows", x);
  if (x.cols() < 2)
    throw std::invalid_argument("std_normalize_rows: needs at least 2 columns, got " +
                                shape_str(x));
  const Eigen::Index n = x.rows(), m = x.cols();
  Eigen::ArrayXd means(n), stds(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = x.val().row(i).mean();
    const double var = x.val().row(i).array().square().mean() - mu * mu;
    means(i) = mu;
    stds(i) = std::sqrt(std::max(var, 0.0));
  }
  Mat y(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (stds(i) < 1e-8)
      y.row(i) = x.val().row(i);
    else
      y.row(i) = x.val().row(i) / stds(i);
  }
  Tensor out = detail::make_node(std::move(y), x.shape(), {x.node()});
  if (out.requires_grad()) {
    auto* px = x.node().get();
    out.node()->backward_fn = [px, means, stds](TensorNode& self) {
      px->ensure_grad();
      const Eigen::Index m = self.value.cols();
      for (Eigen::Index i = 0; i < self.value.rows(); ++i) {
        if (stds(i) < 1e-8) {
          px->grad.row(i) += self.grad.row(i);
          continue;
        }
        const double s = stds(i);
        const double gx = self.grad.row(i).dot(px->value.row(i));
        px->grad.row(i) += self.grad.row(i) / s -
            (gx / (static_cast<double>(m) * s * s * s)) *
                (px->value.row(i).array() - means(i)).matrix();
      }
    };
  }
  return out;
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       double eps) {
  check_2d("layer_norm_rows", x);
  if (gamma.rows() != 1 || gamma.cols() != x.cols() || beta.rows() != 1 ||
      beta.cols() != x.cols())
    throw std::invalid_argument("layer_norm_rows: gamma/beta must be 1x" +
                                std::to_string(x.cols()));
  const Eigen::Index n = x.rows(), m = x.cols();
  Mat xhat(n, m);
  Eigen::ArrayXd inv_sigma(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = x.val().row(i).mean();
    const double var = (x.val().row(i).array() - mu).square().mean();
    inv_sigma(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = ((x.val().row(i).array() - mu) * inv_sigma(i)).matrix();
  }
  Mat y = (xhat.array().rowwise() * gamma.val().row(0).array()).matrix();
  y.rowwise() += beta.val().row(0);
  Tensor out = detail::make_node(std::move(y), x.shape(),
                                 {x.node(), gamma.node(), beta.node()});
  if (out.requires_grad()) {
    auto *px = x.node().get(), *pg = gamma.node().get(), *pb = beta.node().get();
    out.node()->backward_fn = [px, pg, pb, xhat, inv_sigma](TensorNode& self) {
      if (pg->requires_grad)
        pg->accumulate((self.grad.array() * xhat.array()).colwise().sum().matrix());
      if (pb->requires_grad) pb->accumulate(self.grad.colwise().sum());
      if (px->requires_grad) {
        px->ensure_grad();
        for (Eigen::Index i = 0; i < xhat.rows(); ++i) {
          Eigen::ArrayXd gh =
              (self.grad.row(i).array() * pg->value.row(0).array()).transpose();
          Eigen::ArrayXd xh = xhat.row(i).transpose().array();
          const double mg = gh.mean();
          const double mgx = (gh * xh).mean();
          px->grad.row(i) +=
              (inv_sigma(i) * (gh - mg - xh * mgx)).matrix().transpose();
        }
      }
    };
  }
  return out;
}

Tensor cross_entropy_rows(const Tensor& logits, const std::vector<int>& gold,
                          const RowMask& mask) {
  check_2d("cross_entropy_rows", logits);
  const Eigen::Index n = logits.rows(), v = logits.cols();
  if (static_cast<Eigen::Index>(gold.size()) != n ||
      static_cast<Eigen::Index>(mask.size()) != n)
    throw std::invalid_argument("cross_entropy_rows: gold/mask length vs " +
                                shape_str(logits));
  double count = 0;
  for (auto b : mask) count += b ? 1 : 0;
  if (count == 0) throw std::invalid_argument("cross_entropy_rows: empty response mask");

  Mat probs = Mat::Zero(n, v);  // filled for masked rows only, reused in backward
  double total = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!mask[static_cast<size_t>(i)]) continue;
    const int gi = gold[static_cast<size_t>(i)];
    if (gi < 0 || gi >= v)
      throw std::invalid_argument("cross_entropy_rows: gold id out of range at row " +
                                  std::to_string(i));
    const double mx = logits.val().row(i).maxCoeff();
    Eigen::ArrayXd e = (logits.val().row(i).array() - mx).exp().transpose();
    const double z = e.sum();
    probs.row(i) = (e / z).matrix().transpose();
    total += std::log(z) + mx - logits.val()(i, gi);
  }
  Tensor out = detail::make_node(Mat::Constant(1, 1, total / count), {1, 1},
                                 {logits.node()});
  if (out.requires_grad()) {
    auto* pl = logits.node().get();
    out.node()->backward_fn = [pl, probs, gold, mask, count](TensorNode& self) {
      pl->ensure_grad();
      const double g = self.grad(0, 0) / count;
      for (Eigen::Index i = 0; i < pl->value.rows(); ++i) {
        if (!mask[static_cast<size_t>(i)]) continue;
        pl->grad.row(i) += g * probs.row(i);
        pl->grad(i, gold[static_cast<size_t>(i)]) -= g;
      }
    };
  }
  return out;
}

}  // namespace dskd
