#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "reits/prediction.hpp"
#include "reits/threshold.hpp"

namespace reits::reward {

using Labels = std::array<threshold::DirectionLabel, 3>;

struct RewardWeights {
    double alpha = 0.8;  // correctness
    double beta = 0.2;   // format
    std::array<double, 3> w{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

    /// Throws ConfigError unless all weights are nonnegative and both groups sum to 1 (1e-9).
    void validate() const;
};

struct FormatComponents {
    double basic = 0.0;    // 0.5 for think tags, 0.5 for a parseable JSON object
    double fields = 0.0;   // share of the 12 required fields present
    double numeric = 0.0;  // share of the 9 numeric checks passed
    double total = 0.0;
};

struct Correctness {
    std::array<int, 3> indicators{};
    double value = 0.0;
};

struct RewardBreakdown {
    Correctness correctness;
    FormatComponents format;
    double reward = 0.0;
};

/// Weighted hit rate of the dominant directions; only the three argmaxes matter.
Correctness correctness(const prediction::PredictionSet& pred, const Labels& labels, const RewardWeights& weights);

/// Total over arbitrary text; never throws.
FormatComponents format_score(std::string_view raw_text, const prediction::ValidationPolicy& policy = {});

double reward(double correctness_value, double format_total, const RewardWeights& weights);

/// Scores one candidate text. A horizon whose three probabilities cannot be read
/// contributes a miss to correctness; the rest of the output still counts.
RewardBreakdown score(std::string_view text, const Labels& labels, const RewardWeights& weights,
                      const prediction::ValidationPolicy& policy = {});

enum class RecordKind { sft, gspo_candidate };
std::string_view to_string(RecordKind k);

struct TrainingRecord {
    RecordKind kind = RecordKind::gspo_candidate;
    std::string fund_code;
    Date date;
    std::string group_id;
    std::size_t candidate_index = 0;
    nlohmann::json input_payload;
    std::string text;
    Labels labels{};
    std::optional<RewardBreakdown> reward;  // gspo only
};

struct RecordSource {
    threshold::LabeledSample sample;
    nlohmann::json input_payload;      // prediction input; its fund_code/as_of must match the sample
    std::vector<std::string> texts;    // teacher output (sft) or candidates (gspo)
};

/// One record per (sample, text), ordered by fund, date, candidate index. Throws DataError
/// when a payload does not belong to its sample or the sample lacks labels.
std::vector<TrainingRecord> emit_records(RecordKind kind, std::span<const RecordSource> sources,
                                         const RewardWeights& weights = {},
                                         const prediction::ValidationPolicy& policy = {});

nlohmann::json to_json(const TrainingRecord& r);
void write_jsonl(std::ostream& out, std::span<const TrainingRecord> records);

}  // namespace reits::reward
