#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reits/agent_context.hpp"
#include "reits/backtest.hpp"
#include "reits/llm_gateway.hpp"
#include "reits/macro_state.hpp"
#include "reits/prediction.hpp"

namespace reits::strategy {

struct PipelineConfig {
    threshold::ThresholdParams threshold;
    indicators::IndicatorConfig indicators;
    macro::LabelThresholds market_labels;
    agents::AgentConfig agents;
    prediction::ValidationPolicy validation;
};

/// Builds the four agent reports and the prediction for one fund-date. Every read goes
/// through a PointInTimeView, so `audit` sees the full footprint of a run.
class AgentPipeline {
public:
    AgentPipeline(const data::MarketStore& store, llm::Gateway& gateway, PipelineConfig cfg,
                  data::AccessAudit* audit = nullptr);

    std::vector<agents::AgentReport> contexts(const std::string& fund, Date as_of) const;
    nlohmann::json prediction_input(const std::string& fund, Date as_of) const;

    struct Outcome {
        nlohmann::json input;
        std::string raw_text;
        std::optional<prediction::PredictionSet> prediction;  // empty when the output failed validation
        std::string error;
    };
    Outcome predict(const std::string& fund, Date as_of) const;

    [[nodiscard]] llm::Gateway& gateway() const { return *gateway_; }
    [[nodiscard]] const PipelineConfig& config() const { return cfg_; }

private:
    const macro::MarketSnapshot& market_snapshot(const data::PointInTimeView& view) const;

    const data::MarketStore* store_;
    llm::Gateway* gateway_;
    PipelineConfig cfg_;
    data::AccessAudit* audit_;
    mutable std::mutex cache_mu_;
    mutable std::map<Date, macro::MarketSnapshot> market_cache_;
};

/// Deterministic decision rule on the t5 horizon: increase_20 when up dominates with
/// probability >= min_prob, reduce_20 when down does, hold otherwise.
backtest::ActionSignal rule_decision(const prediction::PredictionSet& pred, double min_prob = 0.55);

/// Stub generator for "decide" requests built by LlmStrategy.
std::string stub_decide(std::string_view decision_input, double min_prob = 0.55);

std::string_view default_decision_prompt();

/// Prediction agent followed by the decision agent, both through the gateway.
class LlmStrategy : public backtest::Strategy {
public:
    /// Registers the rule-based "decide" stub on `decision_gateway`.
    LlmStrategy(const AgentPipeline& pipeline, llm::Gateway& decision_gateway, double stub_min_prob = 0.55);

    backtest::Decision decide(const std::string& fund, Date as_of, const backtest::Account& account,
                              bool in_building_phase) override;

private:
    const AgentPipeline* pipeline_;
    llm::Gateway* gateway_;
};

}  // namespace reits::strategy
