#ifndef ERRL_ADAM_HPP
#define ERRL_ADAM_HPP

#include <cmath>
#include <stdexcept>

#include "errl/mlp.hpp"

namespace errl {

template <typename Scalar>
struct Adam {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step_count = 0;
  Vec<Scalar> first_moment;
  Vec<Scalar> second_moment;

  Adam() = default;
  Adam(Eigen::Index parameter_count, double lr)
      : learning_rate(lr),
        first_moment(Vec<Scalar>::Zero(parameter_count)),
        second_moment(Vec<Scalar>::Zero(parameter_count)) {}
};

/// One bias-corrected adaptive-moment step. A non-finite gradient is rejected with
/// std::domain_error and leaves both the parameters and the optimizer untouched.
template <typename Scalar, typename Derived>
void adam_step(Adam<Scalar>& opt, Vec<Scalar>& params, const Eigen::MatrixBase<Derived>& grads) {
  if (grads.size() != params.size() || opt.first_moment.size() != params.size()) {
    throw std::domain_error("adam_step: shape mismatch");
  }
  if (!grads.allFinite()) throw std::domain_error("adam_step: non-finite gradient");
  ++opt.step_count;
  const Scalar b1 = static_cast<Scalar>(opt.beta1);
  const Scalar b2 = static_cast<Scalar>(opt.beta2);
  opt.first_moment = b1 * opt.first_moment + (Scalar(1) - b1) * grads;
  opt.second_moment = b2 * opt.second_moment + (Scalar(1) - b2) * grads.cwiseAbs2();
  const double t = static_cast<double>(opt.step_count);
  const Scalar correction1 = static_cast<Scalar>(1.0 - std::pow(opt.beta1, t));
  const Scalar correction2 = static_cast<Scalar>(1.0 - std::pow(opt.beta2, t));
  const Scalar lr = static_cast<Scalar>(opt.learning_rate);
  const Scalar eps = static_cast<Scalar>(opt.epsilon);
  params.array() -= lr * (opt.first_moment.array() / correction1) /
                    ((opt.second_moment.array() / correction2).sqrt() + eps);
}

}  // namespace errl

#endif  // ERRL_ADAM_HPP
