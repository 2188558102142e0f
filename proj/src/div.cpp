#include "dskd/div.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace dskd::div {

namespace {

// p * (log p - log q), elementwise; row sums give per-row KL
Tensor kl_terms(const Tensor& p, const Tensor& q) {
  return mul(p, sub(log_clamped(p), log_clamped(q)));
}

void validate(const Tensor& p, const Tensor& q, const RowMask& mask) {
  if (p.shape() != q.shape())
    throw std::invalid_argument("divergence: shape mismatch: " + shape_str(p) + " vs " +
                                shape_str(q));
  if (static_cast<Eigen::Index>(mask.size()) != p.rows())
    throw std::invalid_argument("divergence: mask length " + std::to_string(mask.size()) +
                                " vs " + shape_str(p));
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    if (!mask[static_cast<size_t>(i)]) continue;
    const double sp = p.val().row(i).sum();
    const double sq = q.val().row(i).sum();
    if (std::abs(sp - 1.0) > 1e-6 || std::abs(sq - 1.0) > 1e-6)
      throw std::invalid_argument("divergence: row " + std::to_string(i) +
                                  " is not normalized (sums " + std::to_string(sp) +
                                  ", " + std::to_string(sq) + ")");
  }
}

}  // namespace

Tensor akl_alpha(const Tensor& p, const Tensor& q, double mu) {
  const Eigen::Index n = p.rows(), v = p.cols();
  Mat head = Mat::Zero(n, v);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<int> order(static_cast<size_t>(v));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return p.val()(i, a) > p.val()(i, b);
    });
    double mass = 0;
    for (int j : order) {
      head(i, j) = 1.0;
      mass += p.val()(i, j);
      if (mass >= mu) break;
    }
  }
  Tensor gaps = abs(sub(p, q));
  Tensor g_head = row_sums(mul(gaps, Tensor::from(std::move(head))));
  Tensor g_all = row_sums(gaps);

  // rows with a vanishing total gap get the constant 0.5
  Mat ok(n, 1), fallback(n, 1), safe_fill(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool has_gap = g_all.val()(i, 0) >= 1e-12;
    ok(i, 0) = has_gap ? 1.0 : 0.0;
    fallback(i, 0) = has_gap ? 0.0 : 0.5;
    safe_fill(i, 0) = has_gap ? 0.0 : 1.0;
  }
  Tensor ok_t = Tensor::from(std::move(ok));
  Tensor denom = add(mul(g_all, ok_t), Tensor::from(std::move(safe_fill)));
  return add(mul(divide(g_head, denom), ok_t), Tensor::from(std::move(fallback)));
}

Tensor divergence(Kind kind, const Tensor& p, const Tensor& q, const RowMask& mask,
                  const Params& prm) {
  validate(p, q, mask);
  switch (kind) {
    case Kind::KL:
      return masked_row_mean(kl_terms(p, q), mask);
    case Kind::RKL:
      return masked_row_mean(kl_terms(q, p), mask);
    case Kind::SKL: {
      if (prm.skew_lambda <= 0.0 || prm.skew_lambda >= 1.0)
        throw std::invalid_argument("divergence: skew_lambda must lie in (0,1)");
      Tensor m = add(scalar_mul(p, prm.skew_lambda), scalar_mul(q, 1.0 - prm.skew_lambda));
      return masked_row_mean(kl_terms(p, m), mask);
    }
    case Kind::SRKL: {
      if (prm.skew_lambda <= 0.0 || prm.skew_lambda >= 1.0)
        throw std::invalid_argument("divergence: skew_lambda must lie in (0,1)");
      Tensor m = add(scalar_mul(q, prm.skew_lambda), scalar_mul(p, 1.0 - prm.skew_lambda));
      return masked_row_mean(kl_terms(q, m), mask);
    }
    case Kind::JSD: {
      Tensor m = scalar_mul(add(p, q), 0.5);
      return add(scalar_mul(masked_row_mean(kl_terms(p, m), mask), 0.5),
                 scalar_mul(masked_row_mean(kl_terms(q, m), mask), 0.5));
    }
    case Kind::AKL: {
      if (prm.akl_mu <= 0.0 || prm.akl_mu >= 1.0)
        throw std::invalid_argument("divergence: akl_mu must lie in (0,1)");
      Tensor alpha = akl_alpha(p, q, prm.akl_mu);
      Tensor kl_rows = row_sums(kl_terms(p, q));
      Tensor rkl_rows = row_sums(kl_terms(q, p));
      Tensor ones = Tensor::ones(static_cast<int>(p.rows()), 1);
      Tensor blended = add(mul(alpha, kl_rows), mul(sub(ones, alpha), rkl_rows));
      return masked_row_mean(blended, mask);
    }
  }
  throw std::logic_error("divergence: unknown kind");
}

Kind parse_kind(const std::string& name) {
  if (name == "kl") return Kind::KL;
  if (name == "rkl") return Kind::RKL;
  if (name == "skl") return Kind::SKL;
  if (name == "srkl") return Kind::SRKL;
  if (name == "akl") return Kind::AKL;
  if (name == "jsd") return Kind::JSD;
  throw std::invalid_argument("unknown divergence kind: " + name);
}

std::string to_string(Kind kind) {
  switch (kind) {
    case Kind::KL: return "kl";
    case Kind::RKL: return "rkl";
    case Kind::SKL: return "skl";
    case Kind::SRKL: return "srkl";
    case Kind::AKL: return "akl";
    case Kind::JSD: return "jsd";
  }
  return "?";
}

}  // namespace dskd::div
