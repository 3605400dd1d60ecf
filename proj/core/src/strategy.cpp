#include "reits/strategy.hpp"

#include <algorithm>
#include <set>

#include <spdlog/spdlog.h>

namespace reits::strategy {

using nlohmann::json;

AgentPipeline::AgentPipeline(const data::MarketStore& store, llm::Gateway& gateway, PipelineConfig cfg,
                             data::AccessAudit* audit)
    : store_(&store), gateway_(&gateway), cfg_(std::move(cfg)), audit_(audit) {
    cfg_.threshold.validate();
    cfg_.validation.validate();
}

const macro::MarketSnapshot& AgentPipeline::market_snapshot(const data::PointInTimeView& view) const {
    {
        std::lock_guard lock(cache_mu_);
        if (const auto it = market_cache_.find(view.as_of()); it != market_cache_.end()) return it->second;
    }
    auto snap = macro::build_market_snapshot(view.reits_market(), view.sse(), view.dividend(), view.yields(),
                                             view.as_of(), cfg_.market_labels);
    std::lock_guard lock(cache_mu_);
    return market_cache_.try_emplace(view.as_of(), std::move(snap)).first->second;
}

namespace {

std::string narrative_prompt(agents::AgentKind k) {
    return "You are the " + std::string(agents::to_string(k)) +
           " analyst for a public REIT fund. Interpret the structured data you are given in at most 200 words. "
           "Do not introduce numbers that are not in the data.";
}

}  // namespace

std::vector<agents::AgentReport> AgentPipeline::contexts(const std::string& fund, Date as_of) const {
    const data::PointInTimeView view(*store_, fund, as_of, audit_);
    const auto bars = view.fund_bars();
    if (bars.empty() || bars.back().date != as_of) throw DataError(fund + ": no bar on " + as_of.iso());
    const auto& tp = cfg_.threshold;
    const auto& ac = cfg_.agents;

    std::vector<agents::AgentReport> out;

    const auto snapshot = indicators::compute_snapshot(bars, as_of, cfg_.indicators);
    const std::size_t theta_bars = std::min(bars.size(), tp.history_needed() + ac.theta_history_days);
    const auto thetas = threshold::theta_history(bars.last(theta_bars), tp);
    if (thetas.empty()) throw DataError(fund + ": not enough history for a threshold on " + as_of.iso());
    const auto theta_tail =
        std::span<const threshold::DatedThreshold>(thetas).last(std::min(thetas.size(), ac.theta_history_days));
    const double theta = thetas.back().value.theta;
    out.push_back(agents::build_momentum_context(fund, as_of, snapshot, theta_tail,
                                                 agents::breach_flags(bars, theta_tail, ac.theta_history_days)));

    const auto announcements = view.announcements();
    const Date window_from = as_of.plus_days(-ac.announcement_window_days);
    std::set<std::string> types;
    for (const auto& a : announcements) {
        if (window_from <= a.published && a.published < as_of) types.insert(a.ann_type);
    }
    std::map<std::string, std::array<agents::AnnouncementImpactStats, 3>> impact;
    for (const auto& t : ac.key_announcement_types) {
        if (types.count(t) != 0) impact[t] = agents::announcement_impact_stats(announcements, bars, t, as_of, tp);
    }
    out.push_back(agents::build_announcement_context(fund, as_of, announcements, impact,
                                                     agents::recent_trend(bars, theta), ac));

    const auto warning = agents::quarterly_warning(as_of, view.release_schedule(), ac.warning_window_days);
    out.push_back(agents::build_event_context(fund, as_of, view.news(), view.reports(), warning, ac.news_window_days));

    out.push_back(agents::build_market_context(fund, market_snapshot(view)));

    if (gateway_->narratives_enabled()) {
        for (auto& r : out) {
            llm::ChatRequest req;
            req.system = narrative_prompt(r.agent);
            req.user = r.payload.dump();
            req.tag = std::string(agents::to_string(r.agent)) + "|" + fund + "|" + as_of.iso();
            r.narrative = gateway_->complete(req);
        }
    }
    return out;
}

json AgentPipeline::prediction_input(const std::string& fund, Date as_of) const {
    const auto reports = contexts(fund, as_of);
    const data::PointInTimeView view(*store_, fund, as_of, audit_);
    const double theta = reports.front().payload.at("threshold").at("theta").get<double>();
    return prediction::assemble_prediction_input(reports, prediction::price_context(view.fund_bars(21), theta));
}

AgentPipeline::Outcome AgentPipeline::predict(const std::string& fund, Date as_of) const {
    Outcome o;
    o.input = prediction_input(fund, as_of);
    o.raw_text = gateway_->complete(prediction::prediction_request(o.input, fund, as_of));
    try {
        o.prediction = prediction::parse_prediction(o.raw_text, cfg_.validation);
    } catch (const prediction::PredictionError& e) {
        o.error = e.what();
    }
    return o;
}

backtest::ActionSignal rule_decision(const prediction::PredictionSet& pred, double min_prob) {
    const auto& h = pred.t5();
    const auto dir = prediction::dominant_direction(h);
    if (dir == threshold::DirectionLabel::up && h.p_up >= min_prob) return backtest::ActionSignal::increase_20;
    if (dir == threshold::DirectionLabel::down && h.p_down >= min_prob) return backtest::ActionSignal::reduce_20;
    return backtest::ActionSignal::hold;
}

std::string stub_decide(std::string_view decision_input, double min_prob) {
    json in;
    prediction::PredictionSet pred;
    try {
        in = json::parse(decision_input);
        pred = prediction::parse_prediction(in.at("prediction").dump());
    } catch (const std::exception& e) {
        throw llm::GatewayError(llm::GatewayErrorCode::stub_unsupported,
                                std::string("stub cannot read decision input: ") + e.what());
    }
    const auto action = rule_decision(pred, min_prob);
    return "<think>\nRule-based stub: t5 dominant " +
           std::string(threshold::to_string(prediction::dominant_direction(pred.t5()))) + " with probability " +
           json(prediction::dominant_probability(pred.t5())).dump() + ".\n</think>\n" +
           json{{"action", backtest::to_string(action)}}.dump();
}

std::string_view default_decision_prompt() {
    return "You are the decision agent for a single public REIT fund. Given the multi-horizon prediction and the "
           "current position, choose exactly one action from allowed_actions. Respect the position-building "
           "phase flag. Reason inside <think></think>, then output only {\"action\": \"<token>\"}.";
}

LlmStrategy::LlmStrategy(const AgentPipeline& pipeline, llm::Gateway& decision_gateway, double stub_min_prob)
    : pipeline_(&pipeline), gateway_(&decision_gateway) {
    gateway_->set_stub("decide", [stub_min_prob](const llm::ChatRequest& r) { return stub_decide(r.user, stub_min_prob); });
}

backtest::Decision LlmStrategy::decide(const std::string& fund, Date as_of, const backtest::Account& account,
                                       bool in_building_phase) {
    const auto outcome = pipeline_->predict(fund, as_of);
    if (!outcome.prediction) return {std::nullopt, "prediction rejected: " + outcome.error};

    const double close = outcome.input.at("price_context").at("closes").back().at("close").get<double>();
    const double nav = account.nav(close);
    json actions = json::array();
    for (auto a : backtest::all_signals) actions.push_back(backtest::to_string(a));
    const json input = {{"fund_code", fund},
                        {"as_of", as_of.iso()},
                        {"prediction", prediction::to_json(*outcome.prediction)},
                        {"position",
                         {{"cash", account.cash},
                          {"shares", account.shares},
                          {"close", close},
                          {"nav", nav},
                          {"position_fraction", nav > 0 ? static_cast<double>(account.shares) * close / nav : 0.0}}},
                        {"building_phase", in_building_phase},
                        {"allowed_actions", actions}};
    llm::ChatRequest req;
    req.system = std::string(default_decision_prompt());
    req.user = input.dump();
    req.tag = "decide|" + fund + "|" + as_of.iso();
    const auto text = gateway_->complete(req);
    try {
        return {backtest::parse_decision(text), {}};
    } catch (const DataError& e) {
        return {std::nullopt, e.what()};
    }
}

}  // namespace reits::strategy
