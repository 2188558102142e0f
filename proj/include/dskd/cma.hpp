#pragma once

#include <string>
#include <utility>

#include "dskd/align.hpp"
#include "dskd/div.hpp"
#include "dskd/lm.hpp"
#include "dskd/ops.hpp"
#include "dskd/report.hpp"

namespace dskd::cma {

/// CMA attends freely; CLP replaces attention with uniform weights over
/// aligned chunks; CLA masks attention to aligned chunks.
enum class AlignmentMode { CMA, CLP, CLA };

/// Learnable maps between the two hidden spaces: the query projector
/// (2d_s -> 2d_t) and the value projectors (d_s -> d_t, d_t -> d_s).
struct Projectors {
  int d_s = 0, d_t = 0;
  Tensor pq_w, pq_b;
  Tensor s2t_w, s2t_b;
  Tensor t2s_w, t2s_b;
  std::vector<Tensor> parameters() const;
};

Projectors init_projectors(int d_s, int d_t, uint64_t seed);
void save_projectors(const Projectors& p, const std::string& path);
Projectors load_projectors(const std::string& path);

struct QueryKey {
  Tensor q;  // n_s x 2d_t, trainable through the query projector
  Tensor k;  // n_t x 2d_t, std-normalized teacher embeddings, no gradient
};

QueryKey build_qk(const lm::ForwardOutput& s_out, const lm::ForwardOutput& t_out,
                  const Projectors& proj);

struct AttentionPair {
  Tensor a_t2s;  // n_s x n_t
  Tensor a_s2t;  // n_t x n_s
  bool degenerate = false;  // some row had no admissible entry (uniform fallback)
};

/// Scaled dot-product attention in both directions. CLA additionally masks
/// logits to aligned chunks (zeros outside, via -inf masking). valid_t /
/// valid_s restrict admissible key columns (pads); null means all valid.
AttentionPair attention(const Tensor& q, const Tensor& k, AlignmentMode mode,
                        const align::AlignmentMatrix* m,
                        const RowMask* valid_s = nullptr,
                        const RowMask* valid_t = nullptr);

/// (V_s2t, V_t2s): student hidden states projected to the teacher space, and
/// std-normalized teacher hidden + target-embedding sums projected to the
/// student space. Teacher inputs carry no gradient; both projectors train.
std::pair<Tensor, Tensor> project_values(const lm::ForwardOutput& s_out,
                                         const lm::ForwardOutput& t_out,
                                         const Projectors& proj);

struct CrossStates {
  Tensor h_t2s;  // n_s x d_s
  Tensor h_s2t;  // n_t x d_t
  bool degenerate = false;
};

/// Length adaptation to the opposite sequence. CMA/CLA use the attention
/// matrices; CLP uses uniform weights over each row's aligned chunk.
CrossStates cross_states(const Tensor& a_t2s, const Tensor& a_s2t, const Tensor& v_t2s,
                         const Tensor& v_s2t, AlignmentMode mode,
                         const align::AlignmentMatrix* m);

/// Uniform row weights over admitted entries of a chunk matrix; all-zero rows
/// fall back to uniform-over-everything and set *degenerate.
Mat uniform_chunk_weights(const Mat& m, bool* degenerate = nullptr);

struct DualSpaceLosses {
  Tensor total;   // the joint objective (without any key-query term)
  Tensor q_t2s;   // n_s x V_s rows on the student vocabulary
  Tensor q_s2t;   // n_t x V_t rows on the teacher vocabulary
  LossReport report;
};

/// Projected states pass through the opposite model's head; KD divergences
/// are taken in both spaces (prediction argument first unless swapped), the
/// teacher-space gold adds a cross CE, and everything combines as
/// total = ce_s/2 + (kd_s2t + kd_t2s + ce_t)/2.
DualSpaceLosses dual_space_losses(const Tensor& h_t2s, const Tensor& h_s2t,
                                  const lm::ForwardOutput& s_out,
                                  const lm::ForwardOutput& t_out, const Tensor& head_s,
                                  const Tensor& head_t, div::Kind kind,
                                  const div::Params& prm, const RowMask& mask_s,
                                  const RowMask& mask_t, const std::vector<int>& gold_s,
                                  const std::vector<int>& gold_t,
                                  bool swap_divergence_args = false);

}  // namespace dskd::cma
