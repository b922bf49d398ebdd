#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "condyn/config.hpp"
#include "condyn/dataset.hpp"
#include "condyn/envs.hpp"
#include "condyn/errors.hpp"
#include "condyn/harness.hpp"
#include "condyn/metrics.hpp"
#include "condyn/nn.hpp"
#include "condyn/report.hpp"
#include "condyn/snapshot.hpp"
#include "condyn/ssm.hpp"
#include "condyn/tensor.hpp"

namespace py = pybind11;

namespace {

using condyn::diff::Shape;
using condyn::diff::Tensor;

// (shape, flat row-major values) pair; keeps the Python side free of any
// array-library dependency.
using PyTensor = std::pair<std::vector<std::size_t>, std::vector<double>>;

PyTensor to_py(const Tensor& t) {
  return {t.shape(), std::vector<double>(t.data(), t.data() + t.size())};
}

Tensor from_py(const PyTensor& p) {
  return Tensor(Shape(p.first.begin(), p.first.end()), p.second);
}

py::dict snapshot_to_dict(const condyn::diff::ParameterSet& ps) {
  py::dict out;
  for (const std::string& name : ps.names()) {
    out[py::str(name)] = to_py(ps.at(name));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_condyn, m) {
  m.doc() =
      "Joint policy / dynamics-model training with a k-step rollout "
      "consistency penalty: training drivers, environments, and file formats.";

  py::register_exception<condyn::ConfigError>(m, "ConfigError",
                                              PyExc_ValueError);
  py::register_exception<condyn::IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<condyn::NonFiniteError>(m, "NonFiniteError",
                                                 PyExc_ArithmeticError);

  m.def(
      "train",
      [](const std::string& config_path, std::optional<std::uint64_t> seed) {
        return condyn::cli::run_train(config_path, seed);
      },
      py::arg("config_path"), py::arg("seed") = std::nullopt,
      "Run one training job; returns the process exit code (0 ok, 1 "
      "diverged, 2 bad config).");

  m.def(
      "generate_data",
      [](const std::string& env, std::size_t episodes, std::size_t steps,
         std::uint64_t seed, const std::string& out) {
        std::vector<condyn::data::TrajData> trajs =
            condyn::data::generate_expert_dataset(env, episodes, steps, seed);
        condyn::data::save_dataset(out, trajs);
        return trajs.size();
      },
      py::arg("env"), py::arg("episodes"), py::arg("steps") = 60,
      py::arg("seed") = 0, py::arg("out") = std::string("data.traj"),
      "Record scripted-expert trajectories with rendered observations.");

  m.def(
      "imagination_score",
      [](const std::string& snapshot_path, const std::string& data_path,
         std::size_t horizon) {
        // Same computation the `robustness` subcommand prints.
        py::gil_scoped_release release;
        condyn::diff::ParameterSet ps =
            condyn::diff::load_snapshot(snapshot_path);
        const condyn::ssm::SsmSpec spec = condyn::ssm::infer_spec(ps);
        const Shape obs_shape = {spec.frame_channels, spec.frame_h,
                                 spec.frame_w};
        std::vector<condyn::ssm::EvalTraj> eval = condyn::data::to_eval(
            condyn::data::load_dataset(data_path, obs_shape,
                                       spec.action_dim));
        return condyn::ssm::imagination_log_likelihood(ps, spec, eval,
                                                       horizon);
      },
      py::arg("snapshot"), py::arg("data"), py::arg("horizon"),
      "Open-loop imagination log-likelihood of a saved sequence model.");

  m.def(
      "report",
      [](const std::string& runs_dir, const std::string& out_path,
         std::size_t smooth) {
        condyn::run::emit_report(runs_dir, out_path, smooth);
      },
      py::arg("runs"), py::arg("out"), py::arg("smooth") = 100,
      "Aggregate per-seed metrics files into mean/std curves.");

  m.def(
      "load_snapshot",
      [](const std::string& path) {
        return snapshot_to_dict(condyn::diff::load_snapshot(path));
      },
      py::arg("path"),
      "Load a parameter snapshot as {name: (shape, values)}.");

  m.def(
      "save_snapshot",
      [](const std::string& path,
         const std::map<std::string, PyTensor>& params) {
        condyn::diff::ParameterSet ps;
        for (const auto& [name, t] : params) ps.add(name, from_py(t));
        condyn::diff::save_snapshot(path, ps);
      },
      py::arg("path"), py::arg("params"));

  m.def(
      "read_metrics",
      [](const std::string& path) {
        std::vector<condyn::run::MetricsRow> rows =
            condyn::run::read_metrics(path);
        py::list out;
        for (const auto& row : rows) {
          py::dict d;
          d["update"] = row.update;
          for (std::size_t i = 0; i < condyn::run::kNumMetrics; ++i) {
            if (row.values[i].has_value()) {
              d[condyn::run::kMetricNames[i]] = *row.values[i];
            } else {
              d[condyn::run::kMetricNames[i]] = py::none();
            }
          }
          out.append(d);
        }
        return out;
      },
      py::arg("path"), "Parse a metrics CSV into a list of dicts.");

  m.def(
      "expert_rollout",
      [](const std::string& env_name, std::size_t steps, std::uint64_t seed) {
        const condyn::env::EnvSpec spec = condyn::env::make_env(env_name);
        condyn::diff::RngStream rng(seed, "expert-rollout");
        condyn::env::EnvState s = condyn::env::env_reset(spec, rng);
        std::vector<std::vector<double>> states = {s.v};
        std::vector<std::vector<double>> actions;
        std::vector<double> rewards;
        for (std::size_t t = 0; t < steps; ++t) {
          const Tensor a = condyn::env::expert_action(spec, s);
          const condyn::env::StepResult r =
              condyn::env::env_step(spec, s, a);
          actions.emplace_back(a.data(), a.data() + a.size());
          rewards.push_back(r.reward);
          s = r.state;
          states.push_back(s.v);
          if (r.done) break;
        }
        py::dict out;
        out["states"] = states;
        out["actions"] = actions;
        out["rewards"] = rewards;
        return out;
      },
      py::arg("env"), py::arg("steps"), py::arg("seed") = 0,
      "Roll the scripted expert and return raw states/actions/rewards.");

  m.def(
      "discounted_return",
      [](const std::vector<double>& rewards, double gamma) {
        return condyn::env::discounted_return(rewards, gamma);
      },
      py::arg("rewards"), py::arg("gamma"));

  m.def(
      "gaussian_nll",
      [](const std::vector<double>& x, const std::vector<double>& mu,
         const std::vector<double>& log_var) {
        return condyn::diff::gaussian_diag_nll(
            Tensor({x.size()}, x), Tensor({mu.size()}, mu),
            Tensor({log_var.size()}, log_var));
      },
      py::arg("x"), py::arg("mu"), py::arg("log_var"),
      "Diagonal-Gaussian negative log-likelihood of x.");

  m.attr("csv_header") = condyn::run::kCsvHeader;
  m.attr("__version__") = "1.0.0";
}
