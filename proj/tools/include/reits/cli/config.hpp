#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reits/agent_context.hpp"
#include "reits/backtest.hpp"
#include "reits/llm_gateway.hpp"
#include "reits/market_data.hpp"
#include "reits/prediction.hpp"
#include "reits/reward.hpp"
#include "reits/threshold.hpp"

namespace reits::cli {

struct DataPaths {
    std::filesystem::path funds;       // code,listing_date
    std::filesystem::path fund_bars;   // directory of <code>.csv
    std::filesystem::path reits_market;
    std::filesystem::path sse;
    std::filesystem::path dividend;
    std::filesystem::path yields;
    std::optional<std::filesystem::path> announcements;
    std::optional<std::filesystem::path> news;
    std::optional<std::filesystem::path> reports;
    std::optional<std::filesystem::path> release_calendar;
};

struct StrategySettings {
    llm::GatewayConfig gateway;
    double decision_min_prob = 0.55;  // rule used by the stub decision agent
};

struct RunConfig {
    DataPaths data;
    std::vector<std::string> universe;  // empty: every fund eligible at the period start
    backtest::Period period;
    int min_listing_days = 365;
    threshold::ThresholdParams threshold;
    indicators::IndicatorConfig indicators;
    macro::LabelThresholds market_labels;
    agents::AgentConfig agents;
    prediction::ValidationPolicy validation;
    reward::RewardWeights reward;
    int reward_candidates = 1;
    std::optional<std::filesystem::path> reward_candidates_path;  // JSONL {fund_code, date, texts}
    backtest::RiskConfig risk;
    StrategySettings strategy_a;
    StrategySettings strategy_b;
    std::filesystem::path output_dir = "out";
    int jobs = 1;
};

/// Replaces ${NAME} with the environment value. Throws ConfigError naming a missing variable.
std::string interpolate_env(const std::string& text, const std::string& field);

/// Parses and validates. Relative paths resolve against `base_dir`.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

backtest::Period parse_period(const std::string& text);

/// Loads every series and event file referenced by the config.
data::MarketStore load_store(const RunConfig& cfg);

/// Universe restricted to funds listed at least min_listing_days before the period start.
std::vector<std::string> select_funds(const RunConfig& cfg, const data::MarketStore& store);

}  // namespace reits::cli
