#include "exfilpath/experiment.hpp"

#include <atomic>
#include <charconv>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace exfil {

using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

std::string scale_label(double v) {
    std::string s = format_double(v);
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
        s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
        s += ".0";
    return s;
}

void write_training_csv(const TrainingLog& log, std::ostream& out) {
    out << "episode,total_reward,steps,goal_reached\n";
    for (const EpisodeLogRow& row : log.rows)
        out << row.episode << ',' << format_double(row.total_reward) << ',' << row.steps << ','
            << (row.goal_reached ? 1 : 0) << '\n';
}

void write_moving_average_csv(const TrainingLog& log, int window, std::ostream& out) {
    out << "episode,reward_ma,steps_ma,goal_rate\n";
    for (size_t i = 0; i < log.rows.size(); ++i) {
        WindowStats ws = window_stats(log, static_cast<int>(i) + 1, window);
        out << log.rows[i].episode << ',' << format_double(ws.mean_reward) << ','
            << format_double(ws.mean_steps) << ',' << format_double(ws.goal_rate) << '\n';
    }
}

bool GridOutcome::all_ok() const {
    for (const CellOutcome& c : cells)
        if (!c.ok) return false;
    return true;
}

namespace {

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out)
            throw std::system_error(errno, std::generic_category(),
                                    "cannot open " + tmp.string());
        out << contents;
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

GridOutcome run_grid(const NetworkScenario& scenario, const ExperimentGrid& grid,
                     const std::filesystem::path& out_dir, int jobs) {
    std::filesystem::create_directories(out_dir);
    struct Cell {
        AgentKind agent;
        double scale;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (AgentKind agent : grid.agents)
        for (double scale : grid.scale_factors)
            for (std::uint64_t seed : grid.seeds) cells.push_back({agent, scale, seed});

    GridOutcome outcome;
    outcome.cells.resize(cells.size());
    std::atomic<size_t> next{0};

    auto worker = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            const Cell& cell = cells[i];
            CellOutcome& co = outcome.cells[i];
            co.agent = cell.agent;
            co.scale = cell.scale;
            co.seed = cell.seed;
            std::ostringstream stem;
            stem << to_string(cell.agent) << '_' << scale_label(cell.scale) << '_'
                 << cell.seed;
            co.stem = stem.str();
            try {
                AgentConfig config = grid.config;
                config.seed = cell.seed;
                RewardModel rm = grid.reward_model;
                rm.scale_factor = cell.scale;
                EPRLReport report =
                    discover_top_n(scenario, rm, cell.agent, config, grid.top_n);

                std::ostringstream csv;
                if (!report.ranks.empty()) write_training_csv(report.ranks[0].log, csv);
                write_file_atomic(out_dir / (co.stem + ".csv"), csv.str());

                std::ostringstream ma;
                if (!report.ranks.empty())
                    write_moving_average_csv(report.ranks[0].log, 100, ma);
                write_file_atomic(out_dir / (co.stem + "_ma.csv"), ma.str());

                write_file_atomic(out_dir / (co.stem + "_paths.json"),
                                  render_report_json(report).dump(2) + "\n");
                co.ok = !report.failed;
                if (report.failed) co.error = "one or more ranks failed to converge";
            } catch (const std::exception& e) {
                co.ok = false;
                co.error = e.what();
            }
        }
    };

    int thread_count = std::max(1, jobs);
    if (thread_count == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < thread_count; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    json summary;
    summary["scenario_id"] = scenario.id;
    summary["top_n"] = grid.top_n;
    summary["episodes"] = grid.config.episodes;
    summary["max_steps"] = grid.config.max_steps;
    summary["cells"] = json::array();
    for (const CellOutcome& co : outcome.cells) {
        summary["cells"].push_back({{"agent", std::string(to_string(co.agent))},
                                    {"scale", co.scale},
                                    {"seed", co.seed},
                                    {"ok", co.ok},
                                    {"error", co.error},
                                    {"stem", co.stem}});
    }
    write_file_atomic(out_dir / "summary.json", summary.dump(2) + "\n");
    return outcome;
}

}  // namespace exfil
