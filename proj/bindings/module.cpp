#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>
#include <sstream>

#include "exfilpath/experiment.hpp"
#include "exfilpath/oracle.hpp"

namespace py = pybind11;
using namespace exfil;

namespace {

// Reports and documents cross the boundary as JSON strings; callers parse
// them with the stdlib json module.
std::string report_to_json(const EPRLReport& report) {
    return render_report_json(report).dump();
}

AgentKind kind_from_name(const std::string& name) {
    auto kind = parse_agent_kind(name);
    if (!kind) throw std::invalid_argument("unknown agent kind '" + name + "'");
    return *kind;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "CVSS-MDP exfiltration-path simulator and planner";
    m.attr("__version__") = "1.0.0";

    py::enum_<ServiceCategory>(m, "ServiceCategory")
        .value("authentication", ServiceCategory::authentication)
        .value("data", ServiceCategory::data)
        .value("security", ServiceCategory::security)
        .value("common", ServiceCategory::common);

    py::enum_<AttackComplexity>(m, "AttackComplexity")
        .value("low", AttackComplexity::low)
        .value("medium", AttackComplexity::medium)
        .value("high", AttackComplexity::high);

    py::enum_<ActionType>(m, "ActionType")
        .value("service_scan", ActionType::service_scan)
        .value("os_scan", ActionType::os_scan)
        .value("subnet_scan", ActionType::subnet_scan)
        .value("process_scan", ActionType::process_scan)
        .value("exploit", ActionType::exploit)
        .value("privilege_escalation", ActionType::privilege_escalation);

    py::enum_<PrivilegeLevel>(m, "PrivilegeLevel")
        .value("none", PrivilegeLevel::none)
        .value("user", PrivilegeLevel::user)
        .value("root", PrivilegeLevel::root);

    py::class_<Address>(m, "Address")
        .def(py::init<int, int>(), py::arg("subnet"), py::arg("host"))
        .def_readwrite("subnet", &Address::subnet)
        .def_readwrite("host", &Address::host)
        .def("__eq__", [](const Address& a, const Address& b) { return a == b; })
        .def("__hash__", [](const Address& a) { return a.subnet * 1009 + a.host; })
        .def("__repr__", [](const Address& a) { return to_string(a); });

    py::class_<VulnProfile>(m, "VulnProfile")
        .def_readonly("base_score", &VulnProfile::base_score)
        .def_readonly("exploitability_score", &VulnProfile::exploitability_score)
        .def_readonly("complexity", &VulnProfile::complexity);

    py::class_<HostConfig>(m, "HostConfig")
        .def_readonly("address", &HostConfig::address)
        .def_readonly("os", &HostConfig::os)
        .def_readonly("services", &HostConfig::services)
        .def_readonly("processes", &HostConfig::processes)
        .def_readonly("path_score", &HostConfig::path_score);

    py::class_<NetworkScenario, std::shared_ptr<NetworkScenario>>(m, "NetworkScenario")
        .def_readonly("id", &NetworkScenario::id)
        .def_readonly("hosts", &NetworkScenario::hosts)
        .def_readonly("initial_host", &NetworkScenario::initial_host)
        .def_readonly("exit_hosts", &NetworkScenario::exit_hosts)
        .def_property_readonly("subnet_count",
                               [](const NetworkScenario& s) { return s.subnets.size(); })
        .def_property_readonly("host_count",
                               [](const NetworkScenario& s) { return s.hosts.size(); })
        .def_property_readonly("service_count",
                               [](const NetworkScenario& s) { return s.services.size(); })
        .def_property_readonly("process_count",
                               [](const NetworkScenario& s) { return s.processes.size(); })
        .def_property_readonly("os_count",
                               [](const NetworkScenario& s) { return s.os_set.size(); })
        .def_property_readonly("firewall_rule_count",
                               [](const NetworkScenario& s) { return s.firewall.size(); })
        .def("to_json", [](const NetworkScenario& s) { return serialize_scenario(s).dump(); })
        .def("__repr__", [](const NetworkScenario& s) {
            return "<NetworkScenario '" + s.id + "': " + std::to_string(s.hosts.size()) +
                   " hosts>";
        });

    m.def("paper_scenario", &paper_scenario, "Built-in 9-subnet, 26-host enterprise network");
    m.def(
        "load_scenario",
        [](const std::string& text, const std::string& id) {
            return load_scenario_text(text, id);
        },
        py::arg("text"), py::arg("id") = "scenario", "Load a scenario from a JSON string");
    m.def(
        "load_scenario_file",
        [](const std::string& path) { return load_scenario_file(path); },
        py::arg("path"));
    m.def(
        "validate_scenario",
        [](const NetworkScenario& s) {
            std::vector<std::pair<std::string, std::string>> out;
            for (const Violation& v : validate_scenario(s)) out.emplace_back(v.code, v.message);
            return out;
        },
        "Violations as (code, message) pairs; empty when valid");
    m.def("subnet_reachable", &subnet_reachable, py::arg("scenario"), py::arg("src"),
          py::arg("dst"), py::arg("service"));

    py::class_<PenaltyTable>(m, "PenaltyTable")
        .def(py::init<>())
        .def_readwrite("exploit_authentication", &PenaltyTable::exploit_authentication)
        .def_readwrite("exploit_data", &PenaltyTable::exploit_data)
        .def_readwrite("exploit_security", &PenaltyTable::exploit_security)
        .def_readwrite("exploit_common", &PenaltyTable::exploit_common)
        .def_readwrite("scan_offset", &PenaltyTable::scan_offset)
        .def("exploit_penalty", &PenaltyTable::exploit_penalty)
        .def("scan_penalty", &PenaltyTable::scan_penalty);

    py::class_<RewardModel>(m, "RewardModel")
        .def(py::init<>())
        .def_readwrite("step_cost", &RewardModel::step_cost)
        .def_readwrite("goal_reward", &RewardModel::goal_reward)
        .def_readwrite("timeout_reward", &RewardModel::timeout_reward)
        .def_readwrite("penalties", &RewardModel::penalties)
        .def_readwrite("scale_factor", &RewardModel::scale_factor);

    m.def("transition_probability",
          py::overload_cast<AttackComplexity>(&transition_probability));
    m.def("arrival_reward", [](double base, double expl) {
        return arrival_reward({base, expl, AttackComplexity::low});
    });
    m.def(
        "terrain_penalty",
        [](const PenaltyTable& table, double scale, ActionType kind,
           const std::vector<ServiceCategory>& cats) {
            return terrain_penalty(table, scale, kind, cats);
        },
        py::arg("table"), py::arg("scale"), py::arg("kind"), py::arg("categories"));

    py::class_<Action>(m, "Action")
        .def_readonly("kind", &Action::kind)
        .def_readonly("target", &Action::target)
        .def_readonly("parameter", &Action::parameter)
        .def("__repr__", [](const Action& a) { return to_string(a); });

    py::class_<HostStatus>(m, "HostStatus")
        .def_readonly("compromised", &HostStatus::compromised)
        .def_readonly("reachable", &HostStatus::reachable)
        .def_readonly("discovered", &HostStatus::discovered)
        .def_readonly("access", &HostStatus::access);

    py::class_<EnvState>(m, "EnvState")
        .def("status",
             [](const EnvState& s) {
                 return std::vector<HostStatus>(s.status().begin(), s.status().end());
             })
        .def("encode", [](const EnvState& s) { return encode_state(s); })
        .def("__eq__", [](const EnvState& a, const EnvState& b) { return a == b; });

    py::class_<StepOutcome>(m, "StepOutcome")
        .def_readonly("action_succeeded", &StepOutcome::action_succeeded)
        .def_readonly("newly_compromised", &StepOutcome::newly_compromised)
        .def_readonly("goal_reached", &StepOutcome::goal_reached)
        .def_property_readonly("reward_breakdown", [](const StepOutcome& o) {
            py::dict d;
            d["step_cost"] = o.reward_breakdown.step_cost;
            d["terrain_penalty"] = o.reward_breakdown.terrain_penalty;
            d["arrival_reward"] = o.reward_breakdown.arrival_reward;
            d["goal_reward"] = o.reward_breakdown.goal_reward;
            return d;
        });

    py::class_<StepResult>(m, "StepResult")
        .def_readonly("next_state", &StepResult::next_state)
        .def_readonly("reward", &StepResult::reward)
        .def_readonly("done", &StepResult::done)
        .def_readonly("outcome", &StepResult::outcome);

    py::class_<Env>(m, "Env")
        .def(py::init([](const NetworkScenario& s, const RewardModel& rm, std::uint64_t seed) {
                 return Env(std::make_shared<const NetworkScenario>(s), rm, seed);
             }),
             py::arg("scenario"), py::arg("reward_model") = RewardModel{},
             py::arg("seed") = 0)
        .def("reset", py::overload_cast<std::uint64_t>(&Env::reset), py::arg("seed"))
        .def("reset", py::overload_cast<>(&Env::reset))
        .def("step", &Env::step)
        .def("set_exit_hosts", &Env::set_exit_hosts)
        .def_property_readonly("state", &Env::state)
        .def_property_readonly("step_count", &Env::step_count);

    m.def("valid_actions", &valid_actions);
    m.def("is_terminal", [](const EnvState& s, int step_count, int max_steps) {
        switch (is_terminal(s, step_count, max_steps)) {
            case TerminalKind::goal: return "goal";
            case TerminalKind::timeout: return "timeout";
            default: return "continue";
        }
    });
    m.def("encode_state", &encode_state);

    py::class_<AgentConfig>(m, "AgentConfig")
        .def(py::init<>())
        .def_readwrite("learning_rate", &AgentConfig::learning_rate)
        .def_readwrite("gamma", &AgentConfig::gamma)
        .def_readwrite("episodes", &AgentConfig::episodes)
        .def_readwrite("max_steps", &AgentConfig::max_steps)
        .def_readwrite("seed", &AgentConfig::seed)
        .def_readwrite("entropy_coef", &AgentConfig::entropy_coef)
        .def_readwrite("grad_clip", &AgentConfig::grad_clip)
        .def_readwrite("stop_when_converged", &AgentConfig::stop_when_converged);

    py::class_<EpisodeLogRow>(m, "EpisodeLogRow")
        .def_readonly("episode", &EpisodeLogRow::episode)
        .def_readonly("total_reward", &EpisodeLogRow::total_reward)
        .def_readonly("steps", &EpisodeLogRow::steps)
        .def_readonly("goal_reached", &EpisodeLogRow::goal_reached);

    py::class_<TrainingLog>(m, "TrainingLog")
        .def_readonly("rows", &TrainingLog::rows)
        .def("to_csv", [](const TrainingLog& log) {
            std::ostringstream oss;
            write_training_csv(log, oss);
            return oss.str();
        });

    m.def(
        "train",
        [](const NetworkScenario& scenario, const std::string& agent_kind,
           const AgentConfig& config, const RewardModel& rm) {
            Agent agent = make_agent(kind_from_name(agent_kind), scenario, config);
            Env env(std::make_shared<const NetworkScenario>(scenario), rm, config.seed);
            return train(agent, env, config);
        },
        py::arg("scenario"), py::arg("agent") = "a2c", py::arg("config") = AgentConfig{},
        py::arg("reward_model") = RewardModel{},
        "Train a fresh agent on the scenario and return the per-episode log");

    m.def(
        "discover_top_n",
        [](const NetworkScenario& scenario, const std::string& agent_kind,
           const AgentConfig& config, const RewardModel& rm, int n) {
            return report_to_json(
                discover_top_n(scenario, rm, kind_from_name(agent_kind), config, n));
        },
        py::arg("scenario"), py::arg("agent") = "double", py::arg("config") = AgentConfig{},
        py::arg("reward_model") = RewardModel{}, py::arg("n") = 3,
        "Iteratively train, extract the best path, remove its exit; returns JSON");

    m.def(
        "oracle_solve",
        [](const NetworkScenario& scenario, const RewardModel& rm, double gamma,
           double tolerance) {
            TabularMDP mdp = build_tabular(scenario, rm);
            ValueSolution sol = value_iteration(mdp, gamma, tolerance);
            py::dict out;
            out["states"] = mdp.state_count();
            out["iterations"] = sol.iterations;
            out["residual"] = sol.residual;
            out["initial_value"] = sol.values[mdp.initial_state];
            auto exit = oracle_optimal_exit(mdp, sol);
            out["optimal_exit"] = exit ? py::cast(*exit) : py::none();
            return out;
        },
        py::arg("scenario"), py::arg("reward_model") = RewardModel{},
        py::arg("gamma") = 0.99, py::arg("tolerance") = 1e-10,
        "Exact value iteration for small scenarios");

    m.def(
        "enumerate_paths",
        [](const NetworkScenario& scenario, const RewardModel& rm, int max_hosts) {
            std::vector<std::pair<std::vector<Address>, double>> out;
            for (const EnumeratedPath& p : enumerate_paths(scenario, rm, max_hosts))
                out.emplace_back(p.hosts, p.best_case_reward);
            return out;
        },
        py::arg("scenario"), py::arg("reward_model") = RewardModel{},
        py::arg("max_hosts") = 12);

    py::register_exception<ParseError>(m, "ScenarioParseError");
    py::register_exception<ValidationError>(m, "ScenarioValidationError");
    py::register_exception<StateCapExceeded>(m, "StateCapExceededError");
}
