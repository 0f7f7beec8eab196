#pragma once

#include <cstddef>
#include <string>

#include <Eigen/Core>

namespace negrl {

/// A named, contiguous block of the flat parameter vector.
struct ParamSection {
  std::string name;
  std::size_t offset = 0;
  int rows = 0;
  int cols = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
};

/// Raw head outputs for one observation (always reported in double).
struct PolicyLogits {
  Eigen::Vector2d accept_logits = Eigen::Vector2d::Zero();
  Eigen::VectorXd offer_logits;  ///< one logit per value, objective-major
  double value = 0.0;
};

/// Loss gradients with respect to the head outputs, same shapes as
/// PolicyLogits.
struct HeadGrads {
  Eigen::Vector2d accept = Eigen::Vector2d::Zero();
  Eigen::VectorXd offer;
  double value = 0.0;
};

}  // namespace negrl
