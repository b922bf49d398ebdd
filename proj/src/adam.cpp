#include "condyn/adam.hpp"

#include <cmath>

namespace condyn::diff {

Adam::Adam(AdamConfig cfg, std::vector<std::string> names)
    : cfg_(cfg), names_(std::move(names)) {}

void Adam::step(ParameterSet& ps, const GradientRecord& grads) {
  ++t_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (const std::string& name : names_) {
    Tensor& p = ps.at(name);
    const Tensor& gt = grads.at(name);
    if (!same_shape(p, gt))
      throw ShapeError("adam: gradient shape " + shape_str(gt.shape()) +
                       " vs parameter '" + name + "' " + shape_str(p.shape()));
    if (!gt.all_finite())
      throw NonFiniteError("non-finite gradient for parameter '" + name + "'");
    auto it = state_.find(name);
    if (it == state_.end())
      it = state_.emplace(name, std::make_pair(Tensor::zeros(p.shape()),
                                               Tensor::zeros(p.shape()))).first;
    Tensor& m = it->second.first;
    Tensor& v = it->second.second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      double gi = gt[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      p[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace condyn::diff
