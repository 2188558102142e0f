#pragma once

#include <vector>

#include "dskd/tensor.hpp"

namespace dskd {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Per-parameter adaptive moment estimation. step() consumes whatever is in
/// each parameter's grad buffer (missing buffers count as zero) and rejects
/// non-finite gradients.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig cfg = {});
  void step();
  void zero_grad();

 private:
  std::vector<Tensor> params_;
  std::vector<Mat> m_, v_;
  AdamConfig cfg_;
  long t_ = 0;
};

}  // namespace dskd
