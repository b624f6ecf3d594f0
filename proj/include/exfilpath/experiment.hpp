#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "exfilpath/planner.hpp"

namespace exfil {

struct ExperimentGrid {
    std::vector<AgentKind> agents{AgentKind::a2c, AgentKind::double_agent};
    std::vector<double> scale_factors{0.7, 1.0, 1.3};
    std::vector<std::uint64_t> seeds{0};
    int top_n = 3;
    AgentConfig config;
    RewardModel reward_model;  // scale_factor is overridden per cell
};

// Shortest round-trip decimal form; used everywhere output must be
// byte-stable across runs.
std::string format_double(double v);

// Scale factors render with at least one decimal ("1.0", "0.7").
std::string scale_label(double v);

// Header exactly: episode,total_reward,steps,goal_reached
void write_training_csv(const TrainingLog& log, std::ostream& out);

// Trailing moving averages, one row per episode:
// episode,reward_ma,steps_ma,goal_rate
void write_moving_average_csv(const TrainingLog& log, int window, std::ostream& out);

struct CellOutcome {
    AgentKind agent = AgentKind::a2c;
    double scale = 1.0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    std::string stem;  // output file stem
};

struct GridOutcome {
    std::vector<CellOutcome> cells;
    bool all_ok() const;
};

// Runs every grid cell (concurrently up to `jobs`), writing per cell
// <agent>_<scale>_<seed>.csv, _ma.csv and _paths.json plus summary.json.
GridOutcome run_grid(const NetworkScenario& scenario, const ExperimentGrid& grid,
                     const std::filesystem::path& out_dir, int jobs);

}  // namespace exfil
