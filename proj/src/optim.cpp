#include "uda4sr/optim.hpp"

#include <cmath>

namespace uda4sr {

Adam::Adam(std::vector<ad::Param*> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  for (ad::Param* p : params_) {
    m_.push_back(ad::Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(ad::Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    ad::Param& p = *params_[i];
    if (p.pin_first_row && p.grad.rows() > 0) p.grad.row(0).setZero();
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * p.grad;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * p.grad.cwiseAbs2();
    const ad::Matrix m_hat = m_[i] / c1;
    const ad::Matrix v_hat = v_[i] / c2;
    p.value.array() -= cfg_.lr * m_hat.array() / (v_hat.array().sqrt() + cfg_.eps);
    if (p.pin_first_row && p.value.rows() > 0) p.value.row(0).setZero();
  }
}

void Adam::zero_grad() {
  for (ad::Param* p : params_) p->zero_grad();
}

}  // namespace uda4sr
