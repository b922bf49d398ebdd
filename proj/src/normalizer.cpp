#include "condyn/normalizer.hpp"

#include <cmath>

#include "condyn/ops.hpp"

namespace condyn::model {

namespace {
constexpr double kEps = 1e-8;
}

RunningStats::RunningStats(std::size_t dim)
    : mean_(Tensor::zeros({dim})), m2_(Tensor::zeros({dim})) {}

void RunningStats::update(std::span<const Tensor> batch) {
  if (count_ == 0 && batch.empty())
    throw ConfigError("normalizer: first update with an empty batch");
  for (const Tensor& x : batch) {
    if (x.size() != mean_.size())
      throw ShapeError("normalizer: sample shape " + diff::shape_str(x.shape()) +
                       " vs dim " + std::to_string(mean_.size()));
    ++count_;
    double n = static_cast<double>(count_);
    for (std::size_t i = 0; i < mean_.size(); ++i) {
      double d = x[i] - mean_[i];
      mean_[i] += d / n;
      m2_[i] += d * (x[i] - mean_[i]);
    }
  }
}

Tensor RunningStats::stddev() const {
  Tensor out(mean_.shape());
  if (count_ == 0) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0;
    return out;
  }
  double n = static_cast<double>(count_);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::sqrt(std::max(m2_[i] / n, 0.0));
  return out;
}

Tensor RunningStats::apply(const Tensor& x) const {
  Tensor sd = stddev();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = (x[i] - mean_[i]) / (sd[i] + kEps);
  return out;
}

Tensor RunningStats::invert(const Tensor& y) const {
  Tensor sd = stddev();
  Tensor out(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i)
    out[i] = y[i] * (sd[i] + kEps) + mean_[i];
  return out;
}

Var RunningStats::apply(Graph& g, Var x) const {
  Tensor sd = stddev();
  Tensor inv(sd.shape());
  for (std::size_t i = 0; i < sd.size(); ++i) inv[i] = 1.0 / (sd[i] + kEps);
  Var centered = diff::sub(g, x, g.constant(mean_, "norm.mean"));
  return diff::mul(g, centered, g.constant(inv, "norm.inv_std"));
}

Var RunningStats::invert(Graph& g, Var y) const {
  Tensor sd = stddev();
  for (std::size_t i = 0; i < sd.size(); ++i) sd[i] += kEps;
  Var scaled = diff::mul(g, y, g.constant(sd, "norm.std"));
  return diff::add(g, scaled, g.constant(mean_, "norm.mean"));
}

void RunningStats::to_params(ParameterSet& ps, const std::string& prefix) const {
  ps.add(prefix + ".mean", mean_);
  ps.add(prefix + ".m2", m2_);
  ps.add(prefix + ".count", Tensor::scalar(static_cast<double>(count_)));
}

RunningStats RunningStats::from_params(const ParameterSet& ps,
                                       const std::string& prefix) {
  const Tensor& mean = ps.at(prefix + ".mean");
  RunningStats rs(mean.size());
  rs.mean_ = mean;
  rs.m2_ = ps.at(prefix + ".m2");
  if (rs.m2_.size() != mean.size())
    throw IoError("normalizer stats '" + prefix + "' have mismatched shapes");
  rs.count_ = static_cast<std::size_t>(ps.at(prefix + ".count").item());
  return rs;
}

std::vector<Tensor> Normalizer::update_apply(std::span<const Tensor> states,
                                             std::span<const Tensor> actions,
                                             std::span<const Tensor> deltas) {
  state.update(states);
  action.update(actions);
  delta.update(deltas);
  std::vector<Tensor> out;
  out.reserve(states.size());
  for (const Tensor& s : states) out.push_back(state.apply(s));
  return out;
}

void Normalizer::to_params(ParameterSet& ps) const {
  state.to_params(ps, "norm.state");
  action.to_params(ps, "norm.action");
  delta.to_params(ps, "norm.delta");
}

Normalizer Normalizer::from_params(const ParameterSet& ps) {
  Normalizer n(ps.at("norm.state.mean").size(), ps.at("norm.action.mean").size());
  n.state = RunningStats::from_params(ps, "norm.state");
  n.action = RunningStats::from_params(ps, "norm.action");
  n.delta = RunningStats::from_params(ps, "norm.delta");
  return n;
}

}  // namespace condyn::model
