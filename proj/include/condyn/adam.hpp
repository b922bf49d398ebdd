#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "condyn/params.hpp"

namespace condyn::diff {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction over a fixed subset of parameter names. Moment
// tensors are zero-initialized on first sight of a parameter. Throws
// NonFiniteError naming the parameter on a non-finite gradient.
class Adam {
 public:
  Adam(AdamConfig cfg, std::vector<std::string> names);

  void step(ParameterSet& ps, const GradientRecord& grads);
  std::int64_t steps_taken() const { return t_; }
  const std::vector<std::string>& names() const { return names_; }

 private:
  AdamConfig cfg_;
  std::vector<std::string> names_;
  std::int64_t t_ = 0;
  std::map<std::string, std::pair<Tensor, Tensor>> state_;  // m, v
};

}  // namespace condyn::diff
