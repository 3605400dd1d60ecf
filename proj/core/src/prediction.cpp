#include "reits/prediction.hpp"

#include <algorithm>
#include <cmath>

namespace reits::prediction {

using nlohmann::json;
using threshold::DirectionLabel;

void ValidationPolicy::validate() const {
    if (!(sum_tol >= 0.0)) throw ConfigError("validation.sum_tol must be >= 0");
    if (!(p_min > 0.0 && p_min < 1.0 / 3.0)) throw ConfigError("validation.p_min must lie in (0, 1/3)");
    if (!(dominant_lo > 1.0 / 3.0 && dominant_lo <= dominant_hi && dominant_hi <= 1.0)) {
        throw ConfigError("validation.dominant_range must lie within (1/3, 1] with lo <= hi");
    }
}

std::string_view to_string(PredictionErrorCode c) {
    switch (c) {
        case PredictionErrorCode::no_json: return "no_json";
        case PredictionErrorCode::missing_field: return "missing_field";
        case PredictionErrorCode::sum_violation: return "sum_violation";
        case PredictionErrorCode::below_p_min: return "below_p_min";
        case PredictionErrorCode::dominant_out_of_range: return "dominant_out_of_range";
    }
    return "no_json";
}

namespace {

// End of the balanced object starting at text[open], honoring JSON strings.
std::optional<std::size_t> object_end(std::string_view text, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = open; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}' && --depth == 0) return i + 1;
    }
    return std::nullopt;
}

std::optional<json> first_object(std::string_view text) {
    for (std::size_t pos = text.find('{'); pos != std::string_view::npos; pos = text.find('{', pos + 1)) {
        const auto end = object_end(text, pos);
        if (!end) return std::nullopt;
        auto doc = json::parse(text.substr(pos, *end - pos), nullptr, false);
        if (!doc.is_discarded() && doc.is_object()) return doc;
    }
    return std::nullopt;
}

std::optional<double> unit_number(const json& h, std::string_view key) {
    if (!h.is_object()) return std::nullopt;
    const auto it = h.find(key);
    if (it == h.end() || !it->is_number()) return std::nullopt;
    const double v = it->get<double>();
    if (!(v >= 0.0 && v <= 1.0)) return std::nullopt;
    return v;
}

}  // namespace

ExtractedJson extract_json(std::string_view text) {
    ExtractedJson out;
    const auto open = text.find("<think>");
    const auto close = text.find("</think>");
    out.think_tags = open != std::string_view::npos && close != std::string_view::npos && open < close;
    if (out.think_tags) {
        out.doc = first_object(text.substr(close + 8));
    } else {
        out.doc = first_object(text);
        out.fallback = out.doc.has_value();
    }
    return out;
}

int Inspection::numeric_passed() const {
    int n = 0;
    for (std::size_t k = 0; k < 3; ++k) n += sum_ok[k] + p_min_ok[k] + dominant_ok[k];
    return n;
}

Inspection inspect(const json& doc, const ValidationPolicy& policy) {
    Inspection r;
    for (std::size_t k = 0; k < 3; ++k) {
        const json* h = nullptr;
        if (doc.is_object()) {
            const auto it = doc.find(horizon_keys[k]);
            if (it != doc.end()) h = &*it;
        }
        std::array<std::optional<double>, 4> v;
        for (std::size_t f = 0; f < 4; ++f) {
            if (h != nullptr) v[f] = unit_number(*h, field_keys[f]);
            r.fields_present += v[f].has_value();
        }
        if (!(v[0] && v[1] && v[2])) continue;
        r.horizon_complete[k] = v[3].has_value();
        const double up = *v[0], down = *v[1], side = *v[2];
        r.sum_ok[k] = std::abs(up + down + side - 1.0) <= policy.sum_tol;
        r.p_min_ok[k] = std::min({up, down, side}) >= policy.p_min;
        const double dom = std::max({up, down, side});
        r.dominant_ok[k] = dom >= policy.dominant_lo && dom <= policy.dominant_hi;
    }
    return r;
}

PredictionSet parse_prediction(std::string_view text, const ValidationPolicy& policy) {
    const auto ex = extract_json(text);
    if (!ex.doc) throw PredictionError(PredictionErrorCode::no_json, "no parseable JSON object in model output");
    const auto& doc = *ex.doc;
    const auto ins = inspect(doc, policy);
    for (std::size_t k = 0; k < 3; ++k) {
        if (!ins.horizon_complete[k]) {
            throw PredictionError(PredictionErrorCode::missing_field,
                                  std::string(horizon_keys[k]) + " lacks up/down/side/confidence numbers in [0,1]");
        }
    }
    PredictionSet p;
    p.raw_text = std::string(text);
    p.think_tags = ex.think_tags;
    p.json_fallback = ex.fallback;
    for (std::size_t k = 0; k < 3; ++k) {
        const auto& h = doc.at(horizon_keys[k]);
        auto& out = p.horizons[k];
        out = {h.at("up").get<double>(), h.at("down").get<double>(), h.at("side").get<double>(),
               h.at("confidence").get<double>()};
        const std::string name(horizon_keys[k]);
        if (!ins.sum_ok[k]) {
            throw PredictionError(PredictionErrorCode::sum_violation,
                                  name + " probabilities sum to " + json(out.p_up + out.p_down + out.p_side).dump());
        }
        if (!ins.p_min_ok[k]) {
            throw PredictionError(PredictionErrorCode::below_p_min, name + " has a probability below " +
                                                                        json(policy.p_min).dump());
        }
        if (!ins.dominant_ok[k]) {
            throw PredictionError(PredictionErrorCode::dominant_out_of_range,
                                  name + " dominant probability " + json(dominant_probability(out)).dump() +
                                      " outside [" + json(policy.dominant_lo).dump() + ", " +
                                      json(policy.dominant_hi).dump() + "]");
        }
    }
    return p;
}

json to_json(const PredictionSet& p) {
    json j = json::object();
    for (std::size_t k = 0; k < 3; ++k) {
        const auto& h = p.horizons[k];
        j[std::string(horizon_keys[k])] = {
            {"up", h.p_up}, {"down", h.p_down}, {"side", h.p_side}, {"confidence", h.confidence}};
    }
    return j;
}

std::string serialize(const PredictionSet& p, std::string_view reasoning) {
    return "<think>\n" + std::string(reasoning) + "\n</think>\n" + to_json(p).dump();
}

DirectionLabel dominant_direction(const HorizonPrediction& h) {
    if (h.p_up >= h.p_side && h.p_up >= h.p_down) return DirectionLabel::up;
    if (h.p_side >= h.p_down) return DirectionLabel::side;
    return DirectionLabel::down;
}

double dominant_probability(const HorizonPrediction& h) { return std::max({h.p_up, h.p_down, h.p_side}); }

PriceContext price_context(std::span<const data::DailyBar> bars, double theta) {
    if (bars.size() < 21) throw DataError("price context needs 21 bars, have " + std::to_string(bars.size()));
    PriceContext pc;
    for (const auto& b : bars.last(20)) pc.closes.push_back({b.date, b.close});
    const double c = bars.back().close;
    const auto n = bars.size();
    pc.chg_1d = c / bars[n - 2].close - 1.0;
    pc.chg_5d = c / bars[n - 6].close - 1.0;
    pc.chg_20d = c / bars[n - 21].close - 1.0;
    pc.theta = theta;
    // theta can be 0 on a frozen price history; eps then degenerates to 0 as well.
    pc.eps = {theta, std::sqrt(5.0) * theta, std::sqrt(20.0) * theta};
    return pc;
}

json assemble_prediction_input(std::span<const agents::AgentReport> reports, const PriceContext& price) {
    if (reports.empty()) throw DataError("prediction input: no agent reports");
    const auto& fund = reports.front().fund_code;
    const Date as_of = reports.front().as_of;
    json agents_j = json::array();
    for (const auto kind : agents::agent_order) {
        const auto it = std::find_if(reports.begin(), reports.end(),
                                     [kind](const agents::AgentReport& r) { return r.agent == kind; });
        if (it == reports.end()) {
            throw DataError("prediction input: missing " + std::string(agents::to_string(kind)) + " report");
        }
        if (it->fund_code != fund || it->as_of != as_of) {
            throw DataError("prediction input: " + std::string(agents::to_string(kind)) + " report is for " +
                            it->fund_code + "@" + it->as_of.iso() + ", expected " + fund + "@" + as_of.iso());
        }
        json a = {{"agent", agents::to_string(kind)}, {"payload", it->payload}};
        if (it->narrative) a["narrative"] = *it->narrative;
        agents_j.push_back(std::move(a));
    }
    if (!price.closes.empty() && price.closes.back().date != as_of) {
        throw DataError("prediction input: price context ends " + price.closes.back().date.iso() + ", reports are " +
                        as_of.iso());
    }
    json closes = json::array();
    for (const auto& c : price.closes) closes.push_back({{"date", c.date.iso()}, {"close", c.value}});
    return {{"schema_version", "prediction_input/1"},
            {"fund_code", fund},
            {"as_of", as_of.iso()},
            {"agents", agents_j},
            {"price_context",
             {{"closes", closes},
              {"chg_1d", price.chg_1d},
              {"chg_5d", price.chg_5d},
              {"chg_20d", price.chg_20d},
              {"thresholds",
               {{"theta", price.theta}, {"eps1", price.eps.eps1}, {"eps5", price.eps.eps5}, {"eps20", price.eps.eps20}}}}}};
}

std::string_view default_system_prompt() {
    return "You are the prediction agent for a single public REIT fund. Using the four analyst reports and the "
           "price context, estimate the probability that the cumulative return over the next 1, 5 and 20 trading "
           "days is up (at or above +eps_k), down (at or below -eps_k) or side (within eps_k). Reason inside "
           "<think></think>, then output only this JSON: "
           "{\"t1\":{\"up\":p,\"down\":p,\"side\":p,\"confidence\":c},\"t5\":{...},\"t20\":{...}}. "
           "Each horizon's probabilities sum to 1, none is below 0.01, and the largest lies in [0.34, 0.95].";
}

llm::ChatRequest prediction_request(const json& input, std::string_view fund, Date as_of) {
    llm::ChatRequest req;
    req.system = std::string(default_system_prompt());
    req.user = input.dump();
    req.tag = "predict|" + std::string(fund) + "|" + as_of.iso();
    return req;
}

}  // namespace reits::prediction
