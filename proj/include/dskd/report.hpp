#pragma once

namespace dskd {

/// Per-step loss breakdown. kq holds the weighted key-query contribution
/// (weight * generator loss), so totals recompose as:
///   SFT:             total = ce_s
///   same-tokenizer:  total = ce_s/2 + kd_t2s/2
///   CMA family:      total = ce_s/2 + (kd_s2t + kd_t2s + ce_t)/2 + kq
struct LossReport {
  double ce_s = 0;
  double kd_s2t = 0;
  double kd_t2s = 0;
  double ce_t = 0;
  double kq = 0;
  double total = 0;
};

}  // namespace dskd
