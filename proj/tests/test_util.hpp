#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dskd/ops.hpp"
#include "dskd/rng.hpp"
#include "dskd/tensor.hpp"

namespace dskd::testutil {

inline Tensor rand_uniform(int rows, int cols, Rng& rng, double lo, double hi,
                           bool requires_grad = false) {
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(lo, hi);
  return Tensor::from(std::move(m), requires_grad);
}

struct GradCheck {
  bool ok = true;
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  std::string where;
};

// Central finite differences against the analytic reverse-mode gradients.
// Elements whose analytic gradient is below abs_floor are compared
// absolutely; everything else relatively.
inline GradCheck check_gradients(const std::function<Tensor()>& loss_fn,
                                 const std::vector<Tensor>& params, double h = 1e-5,
                                 double tol = 1e-4, double abs_floor = 1e-6) {
  GradCheck res;
  for (auto& p : params) const_cast<Tensor&>(p).zero_grad();
  Tensor loss = loss_fn();
  backward(loss);

  std::vector<Mat> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params)
    analytic.push_back(p.has_grad() ? p.grad() : Mat::Zero(p.rows(), p.cols()));

  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor p = params[pi];
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      for (Eigen::Index j = 0; j < p.cols(); ++j) {
        const double orig = p.val()(i, j);
        p.val()(i, j) = orig + h;
        const double lp = loss_fn().item();
        p.val()(i, j) = orig - h;
        const double lm = loss_fn().item();
        p.val()(i, j) = orig;
        const double fd = (lp - lm) / (2.0 * h);
        const double an = analytic[pi](i, j);
        const double abs_err = std::abs(an - fd);
        double rel_err = 0.0;
        bool bad = false;
        if (std::abs(an) < abs_floor && std::abs(fd) < abs_floor) {
          bad = abs_err > tol;
        } else {
          rel_err = abs_err / std::max(std::abs(an), std::abs(fd));
          bad = rel_err > tol;
        }
        res.max_abs_err = std::max(res.max_abs_err, abs_err);
        res.max_rel_err = std::max(res.max_rel_err, rel_err);
        if (bad && res.ok) {
          res.ok = false;
          res.where = "param " + std::to_string(pi) + " (" + std::to_string(i) + "," +
                      std::to_string(j) + "): analytic " + std::to_string(an) +
                      " vs fd " + std::to_string(fd);
        }
      }
    }
  }
  return res;
}

// Weighted sum against fixed coefficients; gives every output element a
// distinct upstream gradient so transposition bugs cannot cancel out. The
// coefficient tensor must stay fixed across finite-difference re-evaluations.
inline Tensor weighted_sum(const Tensor& y, const Tensor& coeffs) {
  return sum(mul(y, coeffs));
}

}  // namespace dskd::testutil
