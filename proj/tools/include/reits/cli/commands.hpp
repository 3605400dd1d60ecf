#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "reits/backtest.hpp"
#include "reits/cli/config.hpp"

namespace reits::cli {

/// Command-line overrides applied on top of the config file.
struct Overrides {
    std::optional<llm::Mode> mode;
    std::optional<int> jobs;
    std::vector<std::string> funds;
    std::optional<backtest::Period> period;
    std::optional<std::filesystem::path> out;
};

void apply(RunConfig& cfg, const Overrides& o);

int cmd_ingest(const RunConfig& cfg);
int cmd_indicators(const RunConfig& cfg);
int cmd_label(const RunConfig& cfg);
int cmd_quadrant(const RunConfig& cfg);
int cmd_reward(const RunConfig& cfg);
int cmd_backtest(const RunConfig& cfg);
/// Reads only the artifacts cmd_backtest wrote.
int cmd_report(const RunConfig& cfg);

inline constexpr std::array<std::string_view, 3> strategy_names{"agent_a", "agent_b", "buy_and_hold"};

struct StrategyRun {
    std::string name;
    std::vector<std::string> funds;
    std::vector<backtest::BacktestResult> results;  // parallel to funds
};

/// The three strategy groups over the selected funds. `audit`, when given, observes
/// every data read made by the agent pipelines.
std::vector<StrategyRun> run_backtests(const RunConfig& cfg, const data::MarketStore& store,
                                       data::AccessAudit* audit = nullptr);

void write_backtest_artifacts(const std::filesystem::path& out_dir, std::span<const StrategyRun> runs);

/// Mean / Max / Min of one metric column; Sharpe ignores undefined entries.
struct Summary {
    std::optional<double> mean, max, min;
};
Summary summarize(std::span<const std::optional<double>> values);

/// Parses argv and dispatches; returns the process exit code.
int run(int argc, char** argv);

}  // namespace reits::cli
