#include "dskd/lm.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dskd/binio.hpp"
#include "dskd/rng.hpp"
#include "dskd/tok.hpp"

namespace dskd::lm {

namespace {

void validate(const ModelConfig& c) {
  if (c.vocab_size <= 0 || c.hidden_dim <= 0 || c.num_layers <= 0 || c.num_heads <= 0 ||
      c.max_seq <= 0)
    throw std::invalid_argument("model config fields must be positive");
  if (c.hidden_dim % c.num_heads != 0)
    throw std::invalid_argument("hidden_dim " + std::to_string(c.hidden_dim) +
                                " not divisible by num_heads " +
                                std::to_string(c.num_heads));
}

// zero-valued parameter set with the right shapes; init and load fill it
ModelState shell(const ModelConfig& cfg) {
  ModelState m;
  m.config = cfg;
  const int d = cfg.hidden_dim;
  m.token_embedding = Tensor::zeros(cfg.vocab_size, d, true);
  m.position_embedding = Tensor::zeros(cfg.max_seq, d, true);
  m.layers.resize(static_cast<size_t>(cfg.num_layers));
  for (auto& l : m.layers) {
    l.ln1_g = Tensor::zeros(1, d, true);
    l.ln1_b = Tensor::zeros(1, d, true);
    l.wq = Tensor::zeros(d, d, true);
    l.bq = Tensor::zeros(1, d, true);
    l.wk = Tensor::zeros(d, d, true);
    l.bk = Tensor::zeros(1, d, true);
    l.wv = Tensor::zeros(d, d, true);
    l.bv = Tensor::zeros(1, d, true);
    l.wo = Tensor::zeros(d, d, true);
    l.bo = Tensor::zeros(1, d, true);
    l.ln2_g = Tensor::zeros(1, d, true);
    l.ln2_b = Tensor::zeros(1, d, true);
    l.w1 = Tensor::zeros(d, 4 * d, true);
    l.b1 = Tensor::zeros(1, 4 * d, true);
    l.w2 = Tensor::zeros(4 * d, d, true);
    l.b2 = Tensor::zeros(1, d, true);
  }
  m.ln_f_g = Tensor::zeros(1, d, true);
  m.ln_f_b = Tensor::zeros(1, d, true);
  m.head = Tensor::zeros(d, cfg.vocab_size, true);
  return m;
}

void fill_normal(Tensor& t, Rng& rng, double stddev) {
  for (Eigen::Index i = 0; i < t.rows(); ++i)
    for (Eigen::Index j = 0; j < t.cols(); ++j) t.val()(i, j) = stddev * rng.normal();
}

}  // namespace

std::vector<Tensor> ModelState::parameters() const {
  std::vector<Tensor> p{token_embedding, position_embedding};
  for (const auto& l : layers) {
    for (const auto& t : {l.ln1_g, l.ln1_b, l.wq, l.bq, l.wk, l.bk, l.wv, l.bv, l.wo,
                          l.bo, l.ln2_g, l.ln2_b, l.w1, l.b1, l.w2, l.b2})
      p.push_back(t);
  }
  p.push_back(ln_f_g);
  p.push_back(ln_f_b);
  p.push_back(head);
  return p;
}

void ModelState::set_frozen(bool f) {
  frozen = f;
  for (auto& t : parameters()) t.set_requires_grad(!f);
}

uint64_t ModelState::checksum() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : parameters()) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(t.val().data());
    const size_t n = sizeof(double) * static_cast<size_t>(t.val().size());
    for (size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

ModelState init_model(const ModelConfig& cfg) {
  validate(cfg);
  ModelState m = shell(cfg);
  Rng rng = Rng::stream(cfg.seed, "model-init");
  const double d = cfg.hidden_dim;
  fill_normal(m.token_embedding, rng, 0.02);
  fill_normal(m.position_embedding, rng, 0.02);
  for (auto& l : m.layers) {
    l.ln1_g.val().setOnes();
    fill_normal(l.wq, rng, 1.0 / std::sqrt(d));
    fill_normal(l.wk, rng, 1.0 / std::sqrt(d));
    fill_normal(l.wv, rng, 1.0 / std::sqrt(d));
    fill_normal(l.wo, rng, 1.0 / std::sqrt(d));
    l.ln2_g.val().setOnes();
    fill_normal(l.w1, rng, 1.0 / std::sqrt(d));
    fill_normal(l.w2, rng, 1.0 / std::sqrt(4.0 * d));
  }
  m.ln_f_g.val().setOnes();
  fill_normal(m.head, rng, 1.0 / std::sqrt(d));
  return m;
}

ForwardOutput forward(const ModelState& m, const std::vector<int>& ids,
                      const std::vector<int>& gold) {
  const int n = static_cast<int>(ids.size());
  if (n == 0) throw std::invalid_argument("forward: empty sequence");
  if (ids.size() != gold.size())
    throw std::invalid_argument("forward: ids and gold lengths differ");
  if (n > m.config.max_seq)
    throw std::invalid_argument("forward: sequence length " + std::to_string(n) +
                                " exceeds max_seq " + std::to_string(m.config.max_seq));

  std::vector<int> positions(static_cast<size_t>(n));
  std::iota(positions.begin(), positions.end(), 0);
  Tensor x = add(row_gather(m.token_embedding, ids),
                 row_gather(m.position_embedding, positions));

  BoolMask causal(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) causal(i, j) = j <= i;

  const int heads = m.config.num_heads;
  const int dh = m.config.hidden_dim / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  for (const auto& l : m.layers) {
    Tensor h1 = layer_norm_rows(x, l.ln1_g, l.ln1_b);
    Tensor q = affine(h1, l.wq, l.bq);
    Tensor k = affine(h1, l.wk, l.bk);
    Tensor v = affine(h1, l.wv, l.bv);
    std::vector<Tensor> ctx;
    ctx.reserve(static_cast<size_t>(heads));
    for (int h = 0; h < heads; ++h) {
      Tensor qh = slice_cols(q, h * dh, dh);
      Tensor kh = slice_cols(k, h * dh, dh);
      Tensor vh = slice_cols(v, h * dh, dh);
      Tensor att = softmax_rows(scalar_mul(matmul(qh, transpose(kh)), scale), &causal);
      ctx.push_back(matmul(att, vh));
    }
    x = add(x, affine(concat_cols(ctx), l.wo, l.bo));
    Tensor h2 = layer_norm_rows(x, l.ln2_g, l.ln2_b);
    x = add(x, affine(gelu(affine(h2, l.w1, l.b1)), l.w2, l.b2));
  }

  ForwardOutput out;
  out.hidden = layer_norm_rows(x, m.ln_f_g, m.ln_f_b);
  out.logits = matmul(out.hidden, m.head);
  out.input_embeds = row_gather(m.token_embedding, ids);
  out.target_embeds = row_gather(m.token_embedding, gold, tok::kPadId);
  return out;
}

Tensor ce_loss(const Tensor& logits, const std::vector<int>& gold, const RowMask& mask) {
  return cross_entropy_rows(logits, gold, mask);
}

std::vector<int> greedy_decode(const ModelState& m, const std::vector<int>& prompt_ids,
                               int max_new, int eos_id) {
  if (static_cast<int>(prompt_ids.size()) > m.config.max_seq)
    throw std::invalid_argument("greedy_decode: prompt longer than max_seq");
  std::vector<int> ids = prompt_ids;
  std::vector<int> generated;
  for (int step = 0; step < max_new; ++step) {
    if (static_cast<int>(ids.size()) >= m.config.max_seq) break;
    std::vector<int> dummy_gold(ids.size(), tok::kPadId);
    ForwardOutput out = forward(m, ids, dummy_gold);
    const auto last = out.logits.val().row(out.logits.rows() - 1);
    int best = 0;
    for (int j = 1; j < m.config.vocab_size; ++j)
      if (last(j) > last(best)) best = j;  // strict: ties keep the lowest id
    if (best == eos_id) break;
    generated.push_back(best);
    ids.push_back(best);
  }
  return generated;
}

static constexpr char kMagic[9] = "DSKDLM01";

void save_checkpoint(const ModelState& m, const std::string& path) {
  binio::Writer w(path);
  w.magic(kMagic);
  w.u32(static_cast<uint32_t>(m.config.vocab_size));
  w.u32(static_cast<uint32_t>(m.config.hidden_dim));
  w.u32(static_cast<uint32_t>(m.config.num_layers));
  w.u32(static_cast<uint32_t>(m.config.num_heads));
  w.u32(static_cast<uint32_t>(m.config.max_seq));
  w.u64(m.config.seed);
  w.u8(m.frozen ? 1 : 0);
  for (const auto& t : m.parameters()) w.mat(t.val());
  w.close(path);
}

ModelState load_checkpoint(const std::string& path) {
  binio::Reader r(path);
  r.expect_magic(kMagic);
  ModelConfig cfg;
  cfg.vocab_size = static_cast<int>(r.u32());
  cfg.hidden_dim = static_cast<int>(r.u32());
  cfg.num_layers = static_cast<int>(r.u32());
  cfg.num_heads = static_cast<int>(r.u32());
  cfg.max_seq = static_cast<int>(r.u32());
  cfg.seed = r.u64();
  validate(cfg);
  const bool frozen = r.u8() != 0;
  ModelState m = shell(cfg);
  for (auto& t : m.parameters()) r.mat(t.val());
  m.set_frozen(frozen);
  return m;
}

}  // namespace dskd::lm
