#include "reits/reward.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace reits::reward {

using nlohmann::json;
using prediction::HorizonPrediction;

void RewardWeights::validate() const {
    constexpr double tol = 1e-9;
    if (alpha < 0 || beta < 0 || w[0] < 0 || w[1] < 0 || w[2] < 0) {
        throw ConfigError("reward weights must be nonnegative");
    }
    if (std::abs(alpha + beta - 1.0) > tol) throw ConfigError("reward.alpha + reward.beta must equal 1");
    if (std::abs(w[0] + w[1] + w[2] - 1.0) > tol) throw ConfigError("reward.w1 + w5 + w20 must equal 1");
}

namespace {

Correctness weighted(const std::array<std::optional<threshold::DirectionLabel>, 3>& dominant, const Labels& labels,
                     const RewardWeights& weights) {
    Correctness c;
    for (std::size_t k = 0; k < 3; ++k) {
        c.indicators[k] = dominant[k] && *dominant[k] == labels[k] ? 1 : 0;
        c.value += weights.w[k] * c.indicators[k];
    }
    return c;
}

}  // namespace

Correctness correctness(const prediction::PredictionSet& pred, const Labels& labels, const RewardWeights& weights) {
    std::array<std::optional<threshold::DirectionLabel>, 3> dom;
    for (std::size_t k = 0; k < 3; ++k) dom[k] = prediction::dominant_direction(pred.horizons[k]);
    return weighted(dom, labels, weights);
}

FormatComponents format_score(std::string_view raw_text, const prediction::ValidationPolicy& policy) {
    FormatComponents f;
    const auto ex = prediction::extract_json(raw_text);
    f.basic = (ex.think_tags ? 0.5 : 0.0) + (ex.doc ? 0.5 : 0.0);
    if (ex.doc) {
        const auto ins = prediction::inspect(*ex.doc, policy);
        f.fields = ins.fields_present / 12.0;
        f.numeric = ins.numeric_passed() / 9.0;
    }
    f.total = 0.3 * f.basic + 0.3 * f.fields + 0.4 * f.numeric;
    return f;
}

double reward(double correctness_value, double format_total, const RewardWeights& weights) {
    weights.validate();
    return weights.alpha * correctness_value + weights.beta * format_total;
}

RewardBreakdown score(std::string_view text, const Labels& labels, const RewardWeights& weights,
                      const prediction::ValidationPolicy& policy) {
    RewardBreakdown b;
    b.format = format_score(text, policy);
    std::array<std::optional<threshold::DirectionLabel>, 3> dom;
    if (const auto ex = prediction::extract_json(text); ex.doc && ex.doc->is_object()) {
        for (std::size_t k = 0; k < 3; ++k) {
            const auto it = ex.doc->find(prediction::horizon_keys[k]);
            if (it == ex.doc->end() || !it->is_object()) continue;
            const auto num = [&](const char* key) -> std::optional<double> {
                const auto f = it->find(key);
                if (f == it->end() || !f->is_number()) return std::nullopt;
                return f->get<double>();
            };
            const auto up = num("up"), down = num("down"), side = num("side");
            if (up && down && side) dom[k] = prediction::dominant_direction(HorizonPrediction{*up, *down, *side, 0.0});
        }
    }
    b.correctness = weighted(dom, labels, weights);
    b.reward = reward(b.correctness.value, b.format.total, weights);
    return b;
}

std::string_view to_string(RecordKind k) { return k == RecordKind::sft ? "sft" : "gspo_candidate"; }

std::vector<TrainingRecord> emit_records(RecordKind kind, std::span<const RecordSource> sources,
                                         const RewardWeights& weights, const prediction::ValidationPolicy& policy) {
    weights.validate();
    std::vector<const RecordSource*> order;
    for (const auto& s : sources) order.push_back(&s);
    std::stable_sort(order.begin(), order.end(), [](const RecordSource* a, const RecordSource* b) {
        return std::tie(a->sample.fund_code, a->sample.date) < std::tie(b->sample.fund_code, b->sample.date);
    });

    std::vector<TrainingRecord> out;
    for (const auto* s : order) {
        const auto& smp = s->sample;
        const auto where = smp.fund_code + "@" + smp.date.iso();
        if (!smp.complete()) throw DataError("training sample " + where + " has no forward labels");
        const auto& p = s->input_payload;
        if (p.value("fund_code", std::string{}) != smp.fund_code || p.value("as_of", std::string{}) != smp.date.iso()) {
            throw DataError("training sample " + where + " paired with payload for " +
                            p.value("fund_code", std::string{"?"}) + "@" + p.value("as_of", std::string{"?"}));
        }
        if (s->texts.empty()) throw DataError("training sample " + where + " has no " + std::string(to_string(kind)) + " text");
        const Labels labels{*smp.labels[0], *smp.labels[1], *smp.labels[2]};
        for (std::size_t i = 0; i < s->texts.size(); ++i) {
            TrainingRecord r;
            r.kind = kind;
            r.fund_code = smp.fund_code;
            r.date = smp.date;
            r.group_id = where;
            r.candidate_index = i;
            r.input_payload = p;
            r.text = s->texts[i];
            r.labels = labels;
            if (kind == RecordKind::gspo_candidate) r.reward = score(r.text, labels, weights, policy);
            out.push_back(std::move(r));
        }
    }
    return out;
}

json to_json(const TrainingRecord& r) {
    json j = {{"record_kind", to_string(r.kind)},
              {"fund_code", r.fund_code},
              {"date", r.date.iso()},
              {"group_id", r.group_id},
              {"candidate_index", r.candidate_index},
              {"input", r.input_payload},
              {r.kind == RecordKind::sft ? "target" : "candidate", r.text},
              {"labels",
               {{"t1", threshold::to_string(r.labels[0])},
                {"t5", threshold::to_string(r.labels[1])},
                {"t20", threshold::to_string(r.labels[2])}}}};
    if (r.reward) {
        const auto& b = *r.reward;
        j["reward"] = {{"i1", b.correctness.indicators[0]},
                       {"i5", b.correctness.indicators[1]},
                       {"i20", b.correctness.indicators[2]},
                       {"correctness", b.correctness.value},
                       {"format_basic", b.format.basic},
                       {"format_fields", b.format.fields},
                       {"format_numeric", b.format.numeric},
                       {"format_score", b.format.total},
                       {"reward", b.reward}};
    }
    return j;
}

void write_jsonl(std::ostream& out, std::span<const TrainingRecord> records) {
    for (const auto& r : records) out << to_json(r).dump() << '\n';
}

}  // namespace reits::reward
