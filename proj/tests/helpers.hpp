#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "condyn/params.hpp"

namespace testutil {

using condyn::diff::BoundParams;
using condyn::diff::GradientRecord;
using condyn::diff::Graph;
using condyn::diff::ParameterSet;
using condyn::diff::Tensor;
using condyn::diff::Var;

// Builds the scalar loss on a fresh graph from the given parameters. Must be
// a pure deterministic function of the parameter values (fixed data, fixed
// noise) so that re-evaluation under perturbed parameters is meaningful.
using LossBuilder = std::function<Var(Graph&, const BoundParams&)>;

struct FdReport {
  double max_rel = 0.0;
  std::string worst = "(none)";
  std::size_t checked = 0;
};

// Central-difference comparison of analytic gradients over every element of
// the named parameters. Relative error uses max(1, |fd|, |analytic|) as the
// denominator, so tiny gradients are compared absolutely and large ones
// relatively.
inline FdReport fd_compare(ParameterSet ps,
                           const std::vector<std::string>& names,
                           const LossBuilder& build, double h = 1e-5) {
  GradientRecord analytic;
  {
    Graph g;
    BoundParams bp(g, ps);
    Var loss = build(g, bp);
    analytic = condyn::diff::backward_gradients(g, loss, bp, ps);
  }
  auto eval = [&build](const ParameterSet& q) {
    Graph g;
    BoundParams bp(g, q, /*trainable=*/false);
    return g.value(build(g, bp)).item();
  };
  FdReport rep;
  for (const std::string& name : names) {
    Tensor& t = ps.at(name);
    const Tensor& ga = analytic.at(name);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double orig = t[i];
      t[i] = orig + h;
      const double fp = eval(ps);
      t[i] = orig - h;
      const double fm = eval(ps);
      t[i] = orig;
      const double fd = (fp - fm) / (2.0 * h);
      const double a = ga[i];
      const double denom = std::max({1.0, std::fabs(fd), std::fabs(a)});
      const double rel = std::fabs(fd - a) / denom;
      ++rep.checked;
      if (rel > rep.max_rel) {
        rep.max_rel = rel;
        rep.worst = name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return rep;
}

// Fresh scratch directory under the system temp root; removed and recreated
// on every call so reruns start clean.
inline std::string scratch_dir(const std::string& tag) {
  namespace fs = std::filesystem;
  fs::path p = fs::temp_directory_path() / ("condyn-test-" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

inline std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void spit(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << text;
}

inline Tensor tensor1(std::vector<double> v) {
  return Tensor({v.size()}, std::move(v));
}

}  // namespace testutil
