#pragma once

#include <string>

#include "dskd/ops.hpp"
#include "dskd/tensor.hpp"

namespace dskd::div {

enum class Kind { KL, RKL, SKL, SRKL, AKL, JSD };

struct Params {
  double skew_lambda = 0.1;  // SKL / SRKL mixture weight
  double akl_mu = 0.5;       // AKL head cumulative mass
};

/// Mean over masked rows of the per-row divergence between distribution rows
/// p and q (same vocabulary). Logs are clamped at 1e-12. Gradients flow into
/// both sides; callers stop-gradient the frozen side.
///
///   KL(p||q)    = sum p log(p/q)
///   RKL(p||q)   = KL(q||p)
///   SKL_l       = KL(p || l*p + (1-l)*q)
///   SRKL_l      = KL(q || l*q + (1-l)*p)
///   JSD         = 1/2 KL(p||m) + 1/2 KL(q||m),  m = (p+q)/2
///   AKL         = a*KL(p||q) + (1-a)*RKL(p||q), a per row from gap masses
Tensor divergence(Kind kind, const Tensor& p, const Tensor& q, const RowMask& mask,
                  const Params& prm = {});

/// AKL's per-row blend weight: the head set is the smallest prefix of entries
/// by descending p whose mass reaches mu; a = G_head / (G_head + G_tail) over
/// gap masses G = sum |p - q|, with a = 0.5 where the total gap vanishes.
/// Differentiable in the gap magnitudes; the head selection is a constant.
Tensor akl_alpha(const Tensor& p, const Tensor& q, double mu);

Kind parse_kind(const std::string& name);
std::string to_string(Kind kind);

}  // namespace dskd::div
