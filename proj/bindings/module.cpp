#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

#include "codband/runner.hpp"

namespace py = pybind11;
using namespace codband;

namespace {

std::string run_experiment_json(const std::string& config_json) {
  const ExperimentConfig config =
      parse_experiment_config(nlohmann::json::parse(config_json));
  return run_experiment_files(config).dump();
}

std::string run_grid_json(const std::string& config_json) {
  const GridConfig config =
      parse_grid_config(nlohmann::json::parse(config_json));
  return run_table_grid_files(config).dump();
}

std::string run_replay_json(const std::string& config_json,
                            const std::string& log_path) {
  const ExperimentConfig config =
      parse_experiment_config(nlohmann::json::parse(config_json));
  return run_replay_files(config, log_path).dump();
}

std::string gen_log_json(const std::string& config_json, long events) {
  const ExperimentConfig config =
      parse_experiment_config(nlohmann::json::parse(config_json));
  return generate_event_log_file(config, events);
}

ReplayResult replay_file(Policy& policy, const std::string& path, Rng& rng) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open event log: " + path);
  EventLogReader reader(in);
  return replay(policy, reader, rng);
}

}  // namespace

PYBIND11_MODULE(_codband, m) {
  m.doc() =
      "Collaborative dynamic bandits: shared Bayesian linear models under a "
      "Dirichlet-Process prior, collapsed Gibbs model assignment, "
      "confidence-bound change detection and Thompson sampling.";

  py::register_exception<StateError>(m, "StateError", PyExc_RuntimeError);
  py::register_exception<LogParseError>(m, "LogParseError", PyExc_ValueError);

  py::class_<Rng>(m, "Rng")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("uniform", py::overload_cast<>(&Rng::uniform))
      .def("normal", py::overload_cast<>(&Rng::normal))
      .def("uniform_int", py::overload_cast<int>(&Rng::uniform_int),
           py::arg("n"))
      .def_static("derive", &Rng::derive, py::arg("seed"), py::arg("a"),
                  py::arg("b") = 0);

  py::class_<Observation>(m, "Observation")
      .def(py::init([](Eigen::VectorXd x, double reward) {
             return Observation{std::move(x), reward};
           }),
           py::arg("x"), py::arg("reward"))
      .def_readwrite("x", &Observation::x)
      .def_readwrite("reward", &Observation::reward);

  py::class_<LinearPosterior>(m, "LinearPosterior")
      .def(py::init<int, double, double>(), py::arg("dim"), py::arg("ridge"),
           py::arg("noise_sd"))
      .def_property_readonly("dim", &LinearPosterior::dim)
      .def_property_readonly("n_obs", &LinearPosterior::n_obs)
      .def_property_readonly("mean", &LinearPosterior::mean)
      .def_property_readonly("precision", &LinearPosterior::precision)
      .def_property_readonly("covariance", &LinearPosterior::covariance)
      .def("absorb",
           py::overload_cast<const Context&, double>(&LinearPosterior::absorb),
           py::arg("x"), py::arg("reward"))
      .def("expel",
           py::overload_cast<const Context&, double>(&LinearPosterior::expel),
           py::arg("x"), py::arg("reward"))
      .def("sample", &LinearPosterior::sample, py::arg("rng"))
      .def("predictive_likelihood", &LinearPosterior::predictive_likelihood,
           py::arg("x"), py::arg("reward"))
      .def("predictive_loglik", &LinearPosterior::predictive_loglik,
           py::arg("x"), py::arg("reward"));

  m.def("ridge_estimate",
        [](const std::vector<Observation>& data, double ridge, int dim) {
          return ridge_estimate(data, ridge, dim);
        },
        py::arg("data"), py::arg("ridge"), py::arg("dim"));
  m.def("confidence_bound",
        [](const std::vector<Observation>& data, const Context& x,
           double ridge, double noise_sd, double delta1) {
          return confidence_bound(data, x, ridge, noise_sd, delta1);
        },
        py::arg("data"), py::arg("x"), py::arg("ridge"), py::arg("noise_sd"),
        py::arg("delta1"));

  py::class_<RidgeAccumulator>(m, "RidgeAccumulator")
      .def(py::init<int, double>(), py::arg("dim"), py::arg("ridge"))
      .def_property_readonly("count", &RidgeAccumulator::count)
      .def_property_readonly("estimate", &RidgeAccumulator::estimate)
      .def("add", &RidgeAccumulator::add, py::arg("x"), py::arg("reward"))
      .def("reset", &RidgeAccumulator::reset)
      .def("predict", &RidgeAccumulator::predict, py::arg("x"))
      .def("confidence_bound", &RidgeAccumulator::confidence_bound,
           py::arg("x"), py::arg("noise_sd"), py::arg("delta1"));

  py::class_<DetectorConfig>(m, "DetectorConfig")
      .def(py::init<>())
      .def_readwrite("delta1", &DetectorConfig::delta1)
      .def_readwrite("delta2", &DetectorConfig::delta2)
      .def_readwrite("window", &DetectorConfig::window)
      .def_readwrite("ridge", &DetectorConfig::ridge)
      .def_readwrite("noise_sd", &DetectorConfig::noise_sd)
      .def("validate", &DetectorConfig::validate)
      .def("threshold", &DetectorConfig::threshold);

  m.def("epsilon", &epsilon, py::arg("config"));
  m.def("test_bit", &test_bit, py::arg("predicted"), py::arg("observed"),
        py::arg("cb"), py::arg("config"));
  m.def("recommended_tau", &recommended_tau, py::arg("rho"), py::arg("config"));

  py::class_<DetectorState>(m, "DetectorState")
      .def(py::init<>())
      .def("push", &DetectorState::push, py::arg("bit"), py::arg("config"))
      .def("check", &DetectorState::check, py::arg("config"))
      .def("push_and_check", &DetectorState::push_and_check, py::arg("bit"),
           py::arg("config"))
      .def("reset", &DetectorState::reset)
      .def_property_readonly("window_mean", &DetectorState::window_mean)
      .def_property_readonly("window_size", &DetectorState::window_size);

  py::class_<GlobalModel>(m, "GlobalModel")
      .def_readonly("posterior", &GlobalModel::posterior)
      .def_readonly("assign_count", &GlobalModel::assign_count);

  py::class_<ModelWeights>(m, "ModelWeights")
      .def_readonly("keys", &ModelWeights::keys)
      .def_readonly("probs", &ModelWeights::probs);

  py::class_<ModelPool>(m, "ModelPool")
      .def(py::init<int, double, double, double, double, double>(),
           py::arg("dim"), py::arg("ridge"), py::arg("noise_sd"),
           py::arg("alpha0"), py::arg("gamma_a") = 1.0,
           py::arg("gamma_b") = 1.0)
      .def_property_readonly("size", &ModelPool::size)
      .def_property_readonly("alpha0", &ModelPool::alpha0)
      .def("keys", &ModelPool::keys)
      .def("contains", &ModelPool::contains, py::arg("key"))
      .def("model", &ModelPool::model, py::arg("key"),
           py::return_value_policy::reference_internal)
      .def("total_assignments", &ModelPool::total_assignments)
      .def("total_observations", &ModelPool::total_observations)
      .def("init_alpha0", &ModelPool::init_alpha0, py::arg("rng"))
      .def("crp_prior_weights", &ModelPool::crp_prior_weights)
      .def("sample_prior_model", &ModelPool::sample_prior_model, py::arg("rng"))
      .def("posterior_weights",
           [](const ModelPool& pool, const std::vector<Observation>& dataset) {
             return pool.posterior_weights(dataset);
           },
           py::arg("dataset"))
      .def("gibbs_reassign",
           [](ModelPool& pool, int current_key,
              const std::vector<Observation>& dataset, Rng& rng) {
             return pool.gibbs_reassign(current_key, dataset, rng);
           },
           py::arg("current_key"), py::arg("dataset"), py::arg("rng"))
      .def("resample_alpha0", &ModelPool::resample_alpha0,
           py::arg("n_assignments"), py::arg("rng"))
      .def("absorb_into", &ModelPool::absorb_into, py::arg("key"), py::arg("x"),
           py::arg("reward"));

  py::class_<Decision>(m, "Decision")
      .def_readonly("arm_index", &Decision::arm_index)
      .def_readonly("model_key", &Decision::model_key)
      .def_readonly("theta", &Decision::theta);

  py::class_<FeedbackResult>(m, "FeedbackResult")
      .def_readonly("detected", &FeedbackResult::detected);

  py::class_<PolicyConfig>(m, "PolicyConfig")
      .def(py::init<>())
      .def_readwrite("dim", &PolicyConfig::dim)
      .def_readwrite("ridge", &PolicyConfig::ridge)
      .def_readwrite("noise_sd", &PolicyConfig::noise_sd)
      .def_readwrite("delta1", &PolicyConfig::delta1)
      .def_readwrite("delta2", &PolicyConfig::delta2)
      .def_readwrite("window", &PolicyConfig::window)
      .def_readwrite("rho", &PolicyConfig::rho)
      .def_readwrite("gamma_a", &PolicyConfig::gamma_a)
      .def_readwrite("gamma_b", &PolicyConfig::gamma_b)
      .def_readwrite("gibbs_every", &PolicyConfig::gibbs_every);

  py::class_<Policy>(m, "Policy")
      .def("name", &Policy::name)
      .def("choose", &Policy::choose, py::arg("user"), py::arg("candidates"),
           py::arg("rng"))
      .def("feedback", &Policy::feedback, py::arg("user"), py::arg("x"),
           py::arg("reward"), py::arg("rng"))
      .def("requires_ground_truth", &Policy::requires_ground_truth)
      .def("inform_ground_truth", &Policy::inform_ground_truth,
           py::arg("user"), py::arg("true_model_id"));

  py::class_<CoDBandPolicy, Policy>(m, "CoDBandPolicy")
      .def(py::init<const PolicyConfig&, Rng&>(), py::arg("config"),
           py::arg("init_rng"))
      .def_property_readonly("pool", &CoDBandPolicy::pool,
                             py::return_value_policy::reference_internal)
      .def("dataset_size", &CoDBandPolicy::dataset_size, py::arg("user"))
      .def("model_key", &CoDBandPolicy::model_key, py::arg("user"));

  m.def("make_policy",
        [](const std::string& name, const PolicyConfig& config, Rng& rng) {
          return make_policy(name, config, rng);
        },
        py::arg("name"), py::arg("config"), py::arg("init_rng"),
        py::keep_alive<0, 3>());

  py::class_<DpSetting>(m, "DpSetting")
      .def(py::init<>())
      .def_readwrite("alpha0", &DpSetting::alpha0)
      .def_readwrite("init_k", &DpSetting::init_k);
  py::class_<FixedMixtureSetting>(m, "FixedMixtureSetting")
      .def(py::init<>())
      .def_readwrite("k", &FixedMixtureSetting::k)
      .def_readwrite("weights", &FixedMixtureSetting::weights);
  py::class_<StationarySetting>(m, "StationarySetting")
      .def(py::init<>())
      .def_readwrite("shared_k", &StationarySetting::shared_k);

  py::class_<EnvConfig>(m, "EnvConfig")
      .def(py::init<>())
      .def_readwrite("n_users", &EnvConfig::n_users)
      .def_readwrite("horizon", &EnvConfig::horizon)
      .def_readwrite("dim", &EnvConfig::dim)
      .def_readwrite("pool_size", &EnvConfig::pool_size)
      .def_readwrite("candidates_per_round", &EnvConfig::candidates_per_round)
      .def_readwrite("s_min", &EnvConfig::s_min)
      .def_readwrite("s_max", &EnvConfig::s_max)
      .def_readwrite("noise_sd", &EnvConfig::noise_sd)
      .def_readwrite("setting", &EnvConfig::setting)
      .def_readwrite("seed", &EnvConfig::seed)
      .def("validate", &EnvConfig::validate);

  py::class_<Period>(m, "Period")
      .def_readonly("start", &Period::start)
      .def_readonly("model_id", &Period::model_id)
      .def_readonly("theta", &Period::theta);

  py::class_<EnvironmentTrace>(m, "EnvironmentTrace")
      .def_readonly("config", &EnvironmentTrace::config)
      .def_readonly("arm_pool", &EnvironmentTrace::arm_pool)
      .def_readonly("user_periods", &EnvironmentTrace::user_periods)
      .def_readonly("n_unique_models", &EnvironmentTrace::n_unique_models)
      .def("true_model_id", &EnvironmentTrace::true_model_id, py::arg("user"),
           py::arg("t"))
      .def("true_theta", &EnvironmentTrace::true_theta, py::arg("user"),
           py::arg("t"));

  py::class_<RoundOutcome>(m, "RoundOutcome")
      .def_readonly("candidate_indices", &RoundOutcome::candidate_indices)
      .def_readonly("candidates", &RoundOutcome::candidates)
      .def_readonly("expected", &RoundOutcome::expected)
      .def_readonly("best_expected", &RoundOutcome::best_expected)
      .def_readonly("noise", &RoundOutcome::noise)
      .def("noisy_reward", &RoundOutcome::noisy_reward, py::arg("arm"));

  py::class_<ChangeAudit>(m, "ChangeAudit")
      .def_readonly("user", &ChangeAudit::user)
      .def_readonly("change_index", &ChangeAudit::change_index)
      .def_readonly("rho", &ChangeAudit::rho);

  m.def("generate_trace", &generate_trace, py::arg("config"), py::arg("rng"));
  m.def("serve_round", &serve_round, py::arg("trace"), py::arg("t"),
        py::arg("user"), py::arg("rng"));
  m.def("audit_assumption1", &audit_assumption1, py::arg("trace"),
        py::arg("delta"));
  m.def("write_trace_file", &write_trace_file, py::arg("trace"),
        py::arg("path"));

  py::class_<RegretCurve>(m, "RegretCurve")
      .def(py::init<>())
      .def_readwrite("policy", &RegretCurve::policy)
      .def_readwrite("seed", &RegretCurve::seed)
      .def_readonly("instantaneous", &RegretCurve::instantaneous)
      .def_readonly("cumulative", &RegretCurve::cumulative)
      .def("record", &RegretCurve::record, py::arg("inst"))
      .def("final_cumulative", &RegretCurve::final_cumulative);

  m.def("record_regret", &record_regret, py::arg("curve"), py::arg("outcome"),
        py::arg("decision"));

  py::class_<EventLogRecord>(m, "EventLogRecord")
      .def(py::init<>())
      .def_readwrite("round", &EventLogRecord::round)
      .def_readwrite("user", &EventLogRecord::user)
      .def_readwrite("logged_arm", &EventLogRecord::logged_arm)
      .def_readwrite("reward", &EventLogRecord::reward)
      .def_readwrite("candidates", &EventLogRecord::candidates);

  m.def("read_event_log", &read_event_log, py::arg("path"));

  py::class_<ReplayResult>(m, "ReplayResult")
      .def_readonly("total_events", &ReplayResult::total_events)
      .def_readonly("matched", &ReplayResult::matched)
      .def_readonly("reward_sum", &ReplayResult::reward_sum)
      .def_readonly("cumulative_reward", &ReplayResult::cumulative_reward)
      .def("reward_rate", &ReplayResult::reward_rate);

  m.def("replay_file", &replay_file, py::arg("policy"), py::arg("log_path"),
        py::arg("rng"));
  m.def("normalized_reward", &normalized_reward, py::arg("policy_cum"),
        py::arg("random_cum"));

  // Experiment runner: JSON-string front doors; the python package wraps
  // them with dict-based helpers.
  m.def("_run_experiment_json", &run_experiment_json, py::arg("config_json"),
        py::call_guard<py::gil_scoped_release>());
  m.def("_run_grid_json", &run_grid_json, py::arg("config_json"),
        py::call_guard<py::gil_scoped_release>());
  m.def("_run_replay_json", &run_replay_json, py::arg("config_json"),
        py::arg("log_path"), py::call_guard<py::gil_scoped_release>());
  m.def("_generate_event_log_json", &gen_log_json, py::arg("config_json"),
        py::arg("events") = 0, py::call_guard<py::gil_scoped_release>());
}
