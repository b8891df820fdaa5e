#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <nlohmann/json.hpp>
#include <utility>

namespace coupled {

// Population-side handle produced by the synthetic generators: the regression
// functions, a joint feature sampler, and the parameters that were drawn.
// Components not defined for a generator are left empty.
struct Truth {
  // E[y | x]
  std::function<Eigen::VectorXd(const Eigen::MatrixXd&)> mu;
  // E[y | x, w]
  std::function<Eigen::VectorXd(const Eigen::MatrixXd&, const Eigen::MatrixXd&)> eta;
  // Noise-free logit (binary diagnostic generator only).
  std::function<Eigen::VectorXd(const Eigen::MatrixXd&, const Eigen::MatrixXd&)> clean_logit;
  // Fresh draws (x, w) from the population feature distribution.
  std::function<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>(int count, std::uint64_t seed)>
      sample_joint;
  nlohmann::json params;  // generator name, coefficient vectors, mixing matrices, ...
};

}  // namespace coupled
