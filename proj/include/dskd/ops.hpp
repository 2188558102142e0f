#pragma once

#include <vector>

#include "dskd/tensor.hpp"

namespace dskd {

// Elementwise arithmetic. Shapes must match exactly; no broadcasting beyond
// the bias term of affine().
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor divide(const Tensor& a, const Tensor& b);
Tensor scalar_mul(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);

// Elementwise functions.
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);  // plain log, caller keeps a > 0
Tensor log_clamped(const Tensor& a, double floor = 1e-12);
Tensor sigmoid(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor gelu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope);

// Linear algebra (2-D only).
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);  // xW + b, b is 1 x n
Tensor concat_cols(const std::vector<Tensor>& parts);              // concat along last dim
Tensor slice_cols(const Tensor& a, int start, int len);
Tensor row_gather(const Tensor& table, const std::vector<int>& ids, int zero_id = -1);

// Reductions.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor row_sums(const Tensor& a);  // n x 1
/// Mean over masked rows of each row's sum; the usual reduction for
/// per-position losses restricted to response positions.
Tensor masked_row_mean(const Tensor& a, const RowMask& mask);

/// Row-wise softmax with optional admissibility mask. Masked-out entries get
/// exactly zero probability (they are excluded from the exp sum, not scaled).
/// Rows whose mask admits nothing come back all-zero and set *degenerate.
Tensor softmax_rows(const Tensor& x, const BoolMask* mask = nullptr,
                    bool* degenerate = nullptr);

/// Divides each row by its population standard deviation (mean is not
/// subtracted). Rows with std below 1e-8 pass through unchanged.
Tensor std_normalize_rows(const Tensor& x);

Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       double eps = 1e-5);

/// Mean negative log-likelihood of gold[i] under softmax(logits row i),
/// over rows with mask[i] set. Stable log-sum-exp path.
Tensor cross_entropy_rows(const Tensor& logits, const std::vector<int>& gold,
                          const RowMask& mask);

}  // namespace dskd
