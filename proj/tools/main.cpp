#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "exfilpath/experiment.hpp"
#include "exfilpath/oracle.hpp"

namespace fs = std::filesystem;
using namespace exfil;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;  // validation or training failure
constexpr int kExitUsage = 2;   // usage or IO error

// "paper" resolves to the built-in scenario; otherwise a path, tried
// literally and then under EXFILPATH_SCENARIO_DIR.
NetworkScenario resolve_scenario(const std::string& arg) {
    if (arg == "paper" || arg == "paper_enterprise") return paper_scenario();
    if (fs::exists(arg)) return load_scenario_file(arg);
    if (const char* dir = std::getenv("EXFILPATH_SCENARIO_DIR")) {
        fs::path base(dir);
        for (const fs::path candidate : {base / arg, base / (arg + ".json")})
            if (fs::exists(candidate)) return load_scenario_file(candidate);
    }
    throw std::system_error(make_error_code(std::errc::no_such_file_or_directory),
                            "scenario '" + arg + "' not found");
}

int cmd_validate(const std::string& scenario_arg) {
    nlohmann::json doc;
    std::string id = "scenario";
    if (scenario_arg == "paper" || scenario_arg == "paper_enterprise") {
        NetworkScenario s = paper_scenario();
        doc = serialize_scenario(s);
        id = s.id;
    } else {
        fs::path path = scenario_arg;
        if (!fs::exists(path)) {
            if (const char* dir = std::getenv("EXFILPATH_SCENARIO_DIR")) {
                for (const fs::path candidate :
                     {fs::path(dir) / scenario_arg, fs::path(dir) / (scenario_arg + ".json")})
                    if (fs::exists(candidate)) path = candidate;
            }
        }
        std::ifstream in(path);
        if (!in) {
            std::cerr << "error: cannot read scenario file '" << scenario_arg << "'\n";
            return kExitUsage;
        }
        try {
            doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            std::cerr << "error: malformed scenario document: " << e.what() << '\n';
            return kExitDomain;
        }
        id = path.stem().string();
    }
    LoadResult result = load_scenario_checked(doc, id);
    for (const Violation& v : result.violations)
        std::cout << v.code << ": " << v.message << '\n';
    if (!result.violations.empty()) return kExitDomain;
    std::cout << "ok: " << result.scenario->hosts.size() << " hosts, "
              << result.scenario->subnets.size() << " subnets, "
              << result.scenario->firewall.size() << " firewall rules\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CVSS-MDP exfiltration-path simulator and planner"};
    app.require_subcommand(1);

    std::string scenario_arg;
    std::vector<std::string> agent_args;
    std::vector<double> scales;
    std::string risk;
    std::vector<std::uint64_t> seeds;
    int episodes = 4000;
    int max_steps = 3000;
    int top_n = 3;
    std::string out_dir = "out";
    int jobs = 1;
    double gamma = 0.99;
    double tolerance = 1e-10;
    bool converge_stop = false;

    auto add_scenario = [&](CLI::App* cmd) {
        cmd->add_option("--scenario", scenario_arg, "Scenario file or 'paper'")->required();
    };

    CLI::App* validate = app.add_subcommand("validate", "Validate a scenario document");
    add_scenario(validate);

    CLI::App* run = app.add_subcommand("run", "Run the sensitivity experiment grid");
    add_scenario(run);
    run->add_option("--agent", agent_args, "Agents: a2c and/or double");
    run->add_option("--scale", scales, "Penalty scale factors");
    run->add_option("--seed", seeds, "Seeds (repeatable)");
    run->add_option("--episodes", episodes, "Training episodes per run");
    run->add_option("--max-steps", max_steps, "Step cap per episode");
    run->add_option("--n", top_n, "Paths per cell");
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--jobs", jobs, "Concurrent grid cells");
    run->add_flag("--converge-stop", converge_stop,
                  "Stop each training run once the trailing window converges");

    CLI::App* top = app.add_subcommand("top-paths", "Discover the top-N exfiltration paths");
    add_scenario(top);
    std::string agent_arg = "double";
    double scale = 1.0;
    std::uint64_t seed = 0;
    top->add_option("--agent", agent_arg, "a2c or double");
    top->add_option("--scale", scale, "Penalty scale factor");
    top->add_option("--risk", risk, "accepting (0.7), neutral (1.0) or averse (1.3)");
    top->add_option("--seed", seed, "Seed");
    top->add_option("--n", top_n, "Number of paths");
    top->add_option("--episodes", episodes, "Training episodes per rank");
    top->add_option("--max-steps", max_steps, "Step cap per episode");
    top->add_flag("--converge-stop", converge_stop,
                  "Stop each training run once the trailing window converges");

    CLI::App* oracle = app.add_subcommand("oracle", "Exact value iteration on small scenarios");
    add_scenario(oracle);
    oracle->add_option("--gamma", gamma, "Discount factor");
    oracle->add_option("--tolerance", tolerance, "Bellman residual tolerance");
    oracle->add_option("--scale", scale, "Penalty scale factor");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    auto risk_scale = [&](double fallback) {
        if (risk.empty()) return fallback;
        if (risk == "accepting") return 0.7;
        if (risk == "neutral") return 1.0;
        if (risk == "averse") return 1.3;
        throw CLI::ValidationError("--risk", "must be accepting, neutral or averse");
    };

    try {
        if (validate->parsed()) return cmd_validate(scenario_arg);

        NetworkScenario scenario = resolve_scenario(scenario_arg);

        if (run->parsed()) {
            ExperimentGrid grid;
            if (!agent_args.empty()) {
                grid.agents.clear();
                for (const std::string& a : agent_args) {
                    auto kind = parse_agent_kind(a);
                    if (!kind) {
                        std::cerr << "error: unknown agent '" << a << "'\n";
                        return kExitUsage;
                    }
                    grid.agents.push_back(*kind);
                }
            }
            if (!scales.empty()) grid.scale_factors = scales;
            if (!seeds.empty()) grid.seeds = seeds;
            grid.top_n = top_n;
            grid.config.episodes = episodes;
            grid.config.max_steps = max_steps;
            grid.config.stop_when_converged = converge_stop;
            GridOutcome outcome = run_grid(scenario, grid, out_dir, jobs);
            for (const CellOutcome& c : outcome.cells)
                std::cout << c.stem << ": " << (c.ok ? "ok" : "failed: " + c.error) << '\n';
            return outcome.all_ok() ? kExitOk : kExitDomain;
        }

        if (top->parsed()) {
            if (top_n < 1) {
                std::cerr << "error: --n must be at least 1\n";
                return kExitUsage;
            }
            if (top_n > static_cast<int>(scenario.exit_hosts.size())) {
                std::cerr << "error: --n exceeds the scenario's " << scenario.exit_hosts.size()
                          << " exit hosts\n";
                return kExitUsage;
            }
            auto kind = parse_agent_kind(agent_arg);
            if (!kind) {
                std::cerr << "error: unknown agent '" << agent_arg << "'\n";
                return kExitUsage;
            }
            AgentConfig config;
            config.episodes = episodes;
            config.max_steps = max_steps;
            config.seed = seed;
            config.stop_when_converged = converge_stop;
            RewardModel rm;
            rm.scale_factor = risk_scale(scale);
            EPRLReport report = discover_top_n(scenario, rm, *kind, config, top_n);
            std::cout << render_report_text(report);
            if (report.failed) {
                std::cerr << "warning: partial result; a rank failed to converge\n";
                return kExitDomain;
            }
            return kExitOk;
        }

        if (oracle->parsed()) {
            RewardModel rm;
            rm.scale_factor = risk_scale(scale);
            try {
                TabularMDP mdp = build_tabular(scenario, rm);
                ValueSolution sol = value_iteration(mdp, gamma, tolerance);
                std::cout << "states: " << mdp.state_count() << '\n';
                std::cout << "iterations: " << sol.iterations
                          << " residual: " << format_double(sol.residual) << '\n';
                std::cout << "V*(s0): " << format_double(sol.values[mdp.initial_state])
                          << '\n';
                if (sol.policy[mdp.initial_state] >= 0)
                    std::cout << "optimal first action: "
                              << to_string(mdp.decode_action(sol.policy[mdp.initial_state]))
                              << '\n';
                if (auto exit = oracle_optimal_exit(mdp, sol))
                    std::cout << "optimal exit: " << to_string(*exit) << '\n';
                std::cout << "\nsimple paths (best-case reward):\n";
                for (const EnumeratedPath& p : enumerate_paths(scenario, rm)) {
                    for (size_t i = 0; i < p.hosts.size(); ++i) {
                        if (i) std::cout << " -> ";
                        std::cout << to_string(p.hosts[i]);
                    }
                    std::cout << "  " << format_double(p.best_case_reward) << '\n';
                }
            } catch (const StateCapExceeded& e) {
                std::cerr << "error: " << e.what()
                          << " (the oracle is intended for small scenarios)\n";
                return kExitDomain;
            }
            return kExitOk;
        }
    } catch (const ValidationError& e) {
        for (const Violation& v : e.violations())
            std::cerr << v.code << ": " << v.message << '\n';
        return kExitDomain;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDomain;
    } catch (const std::system_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDomain;
    }
    return kExitUsage;
}
