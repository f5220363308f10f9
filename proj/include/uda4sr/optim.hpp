#pragma once

#include <vector>

#include "uda4sr/autodiff.hpp"

namespace uda4sr {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected adaptive-moment optimizer over a fixed parameter list.
// Pinned padding rows are never moved.
class Adam {
 public:
  Adam(std::vector<ad::Param*> params, AdamConfig cfg = {});

  void step();
  void zero_grad();
  long steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

  // Moment buffers, exposed for checkpointing.
  std::vector<ad::Matrix>& first_moments() { return m_; }
  std::vector<ad::Matrix>& second_moments() { return v_; }
  void set_steps(long t) { t_ = t; }

 private:
  std::vector<ad::Param*> params_;
  AdamConfig cfg_;
  std::vector<ad::Matrix> m_;
  std::vector<ad::Matrix> v_;
  long t_ = 0;
};

}  // namespace uda4sr
