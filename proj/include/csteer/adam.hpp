#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace csteer {

/// Bias-corrected Adam state for one flat parameter vector.
class Adam {
 public:
  explicit Adam(Eigen::Index size, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-12)
      : beta1_(beta1), beta2_(beta2), eps_(eps),
        m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)) {}

  void step(Eigen::Ref<Eigen::VectorXd> z, const Eigen::VectorXd& grad, double lr) {
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1_, t_);
    const double c2 = 1.0 - std::pow(beta2_, t_);
    z.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
  }

 private:
  double beta1_, beta2_, eps_;
  Eigen::VectorXd m_, v_;
  int t_ = 0;
};

}  // namespace csteer
