#pragma once

#include <string>
#include <vector>

#include "dskd/ops.hpp"
#include "dskd/tensor.hpp"

namespace dskd::lm {

struct ModelConfig {
  int vocab_size = 0;
  int hidden_dim = 0;
  int num_layers = 0;
  int num_heads = 0;
  int max_seq = 0;
  uint64_t seed = 0;
};

struct LayerParams {
  Tensor ln1_g, ln1_b;
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor ln2_g, ln2_b;
  Tensor w1, b1, w2, b2;
};

/// Decoder-only pre-LN transformer with learned absolute positions and an
/// untied d x V prediction head.
struct ModelState {
  ModelConfig config;
  bool frozen = false;
  Tensor token_embedding;     // V x d
  Tensor position_embedding;  // max_seq x d
  std::vector<LayerParams> layers;
  Tensor ln_f_g, ln_f_b;
  Tensor head;  // d x V

  std::vector<Tensor> parameters() const;  // declaration order
  void set_frozen(bool f);
  uint64_t checksum() const;  // FNV-1a over parameter bytes
};

ModelState init_model(const ModelConfig& cfg);

struct ForwardOutput {
  Tensor hidden;         // n x d, final-layer states (post final LN)
  Tensor input_embeds;   // n x d, token embeddings of the inputs
  Tensor target_embeds;  // n x d, token embeddings of the gold next tokens
  Tensor logits;         // n x V
};

/// Causally masked forward pass over one unpadded sequence. gold supplies the
/// next-token targets whose embeddings the distillation queries/keys consume;
/// pad ids in gold produce zero target-embedding rows.
ForwardOutput forward(const ModelState& m, const std::vector<int>& ids,
                      const std::vector<int>& gold);

/// Mean NLL over response positions; gradient reaches the logits only.
Tensor ce_loss(const Tensor& logits, const std::vector<int>& gold, const RowMask& mask);

/// Deterministic argmax decoding (ties to the lowest token id); stops at eos,
/// max_new tokens, or the positional capacity. Returns the generated ids
/// without the prompt or the terminating eos.
std::vector<int> greedy_decode(const ModelState& m, const std::vector<int>& prompt_ids,
                               int max_new, int eos_id);

void save_checkpoint(const ModelState& m, const std::string& path);
ModelState load_checkpoint(const std::string& path);

}  // namespace dskd::lm
