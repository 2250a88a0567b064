#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "repsample/core.hpp"
#include "repsample/fairness.hpp"
#include "repsample/harness.hpp"
#include "repsample/learners.hpp"
#include "repsample/population.hpp"
#include "repsample/samplers.hpp"
#include "repsample/theory.hpp"

namespace py = pybind11;
using namespace repsample;

namespace {

Metric make_metric(const std::string& name, double epsilon) {
  Metric m = metric_from_name(name);
  m.epsilon = epsilon;
  return m;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Representative multi-site sampling and downstream fairness";

  m.def(
      "distance",
      [](const std::string& metric, const std::vector<double>& v,
         const std::vector<double>& u, double epsilon) {
        return distance(make_metric(metric, epsilon), v, u);
      },
      py::arg("metric"), py::arg("v"), py::arg("u"), py::arg("epsilon") = 1e-6,
      "Distance between a target vector and a mean demographic vector "
      "(metrics: L1, L2, KL).");

  m.def("expected_unfairness", &expected_unfairness, py::arg("sigma0"),
        py::arg("sigma1"), py::arg("n0"), py::arg("n1"),
        "Closed-form expected accuracy gap of optimal per-group threshold "
        "classifiers.");

  m.def("zero_unfairness_ratio", &zero_unfairness_ratio, py::arg("sigma0"),
        py::arg("sigma1"), py::arg("n1"),
        "Group-0 sample count with zero expected gap.");

  m.def(
      "sample_bounds",
      [](double sigma0, double sigma1, double n0, double n1, double delta) {
        const auto b = sample_bounds(sigma0, sigma1, n0, n1, delta);
        return py::make_tuple(b.feasible, b.min_n0, b.min_n1);
      },
      py::arg("sigma0"), py::arg("sigma1"), py::arg("n0"), py::arg("n1"),
      py::arg("delta"),
      "(feasible, min_n0, min_n1) for keeping the expected gap within delta.");

  m.def(
      "monte_carlo_unfairness",
      [](double sigma0, double sigma1, int n0, int n1, int trials,
         std::uint64_t seed, int n_test) {
        Rng rng(seed);
        McConfig cfg;
        cfg.n_test = n_test;
        const auto r = monte_carlo_unfairness(
            UnivariateGroupModel::with_sigmas(sigma0, sigma1), n0, n1, trials,
            rng, cfg);
        return py::make_tuple(r.mean, r.stderr_mean);
      },
      py::arg("sigma0"), py::arg("sigma1"), py::arg("n0"), py::arg("n1"),
      py::arg("trials") = 1000, py::arg("seed") = 0, py::arg("n_test") = 1000,
      "(mean, stderr) of the simulated accuracy gap.");

  m.def(
      "auc",
      [](const std::vector<double>& scores, const std::vector<int>& labels) {
        return auc(scores, labels);
      },
      py::arg("scores"), py::arg("labels"),
      "Exact Mann-Whitney AUC (ties count one half).");

  m.def(
      "tpr_tnr",
      [](const std::vector<double>& scores, const std::vector<int>& labels,
         double threshold) {
        const auto r = tpr_tnr(scores, labels, threshold);
        return py::make_tuple(r.tpr, r.tnr);
      },
      py::arg("scores"), py::arg("labels"), py::arg("threshold") = 0.5);

  m.def(
      "group_report",
      [](const std::vector<double>& scores, const std::vector<int>& labels,
         const std::vector<int>& groups, double threshold) {
        const auto r = group_report(scores, labels, groups, threshold);
        py::dict d;
        d["population_auc"] = r.population_auc;
        d["auc_g0"] = r.g0.auc;
        d["auc_g1"] = r.g1.auc;
        d["tpr_g0"] = r.g0.tpr;
        d["tpr_g1"] = r.g1.tpr;
        d["tnr_g0"] = r.g0.tnr;
        d["tnr_g1"] = r.g1.tnr;
        d["delta_auc"] = r.delta_auc;
        d["delta_tpr"] = r.delta_tpr;
        d["delta_tnr"] = r.delta_tnr;
        d["n_g0"] = r.g0.size;
        d["n_g1"] = r.g1.size;
        return d;
      },
      py::arg("scores"), py::arg("labels"), py::arg("groups"),
      py::arg("threshold") = 0.5);

  m.def(
      "response_weight",
      [](const std::vector<double>& a, double b) { return response_weight(a, b); },
      py::arg("a"), py::arg("b"));

  m.def(
      "simulate",
      [](int m, int d, int T, int k, int replicates, std::uint64_t seed,
         const std::vector<double>& v, const std::string& metric,
         const std::vector<std::string>& policies, double lambda, int gamma,
         double alpha, double prior_noise, double prior_strength,
         double epsilon) {
        SimulateConfig cfg;
        cfg.m = m;
        cfg.d = d;
        cfg.T = T;
        cfg.k = k;
        cfg.replicates = replicates;
        cfg.seed = seed;
        cfg.v = v;
        cfg.metric = metric_from_name(metric);
        cfg.prior_noise = prior_noise;
        cfg.prior_strength = prior_strength;
        for (const auto& p : policies) {
          PolicyConfig pc;
          pc.kind = policy_from_name(p);
          pc.epsilon = epsilon;
          cfg.policies.push_back(pc);
        }
        if (lambda != 1.0 && gamma > 0) cfg.bias = ResponseBiasConfig{lambda, gamma};
        cfg.alpha = alpha;
        const auto out = run_simulation(cfg);
        py::dict result;
        const auto means = mean_final_distance(out, cfg);
        py::dict per_policy;
        for (std::size_t i = 0; i < cfg.policies.size(); ++i)
          per_policy[policy_name(cfg.policies[i].kind).c_str()] = means[i];
        result["mean_final_distance"] = per_policy;
        py::list runs;
        for (const auto& run : out.runs) {
          py::dict r;
          r["policy"] = run.policy;
          r["replicate"] = run.replicate;
          r["final_distance"] = run.final_distance;
          r["trajectory"] = run.trajectory;
          runs.append(std::move(r));
        }
        result["runs"] = runs;
        return result;
      },
      py::arg("m") = 20, py::arg("d") = 3, py::arg("T") = 50,
      py::arg("k") = 40, py::arg("replicates") = 10, py::arg("seed") = 0,
      py::arg("v") = std::vector<double>{0.5, 0.5, 0.5},
      py::arg("metric") = "L2",
      py::arg("policies") = std::vector<std::string>{"OPT", "DPBRS", "Random"},
      py::arg("lambda") = 1.0, py::arg("gamma") = 0, py::arg("alpha") = 0.0,
      py::arg("prior_noise") = 0.1, py::arg("prior_strength") = 5.0,
      py::arg("epsilon") = 0.1,
      "Run the multi-site collection simulation on a synthetic pool.");

  m.attr("__version__") = "0.1.0";
}
