#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "reits/agent_context.hpp"
#include "reits/error.hpp"
#include "reits/llm_gateway.hpp"
#include "reits/threshold.hpp"

namespace reits::prediction {

struct HorizonPrediction {
    double p_up = 0.0;
    double p_down = 0.0;
    double p_side = 0.0;
    double confidence = 0.0;
};

struct PredictionSet {
    std::array<HorizonPrediction, 3> horizons;  // t1, t5, t20
    std::string raw_text;
    bool think_tags = false;   // reasoning block present
    bool json_fallback = false;  // JSON taken from the first object because tags were absent

    [[nodiscard]] const HorizonPrediction& t1() const { return horizons[0]; }
    [[nodiscard]] const HorizonPrediction& t5() const { return horizons[1]; }
    [[nodiscard]] const HorizonPrediction& t20() const { return horizons[2]; }
};

struct ValidationPolicy {
    double sum_tol = 0.01;
    double p_min = 0.01;
    double dominant_lo = 0.34;
    double dominant_hi = 0.95;

    void validate() const;
};

enum class PredictionErrorCode { no_json, missing_field, sum_violation, below_p_min, dominant_out_of_range };
std::string_view to_string(PredictionErrorCode c);

class PredictionError : public Error {
public:
    PredictionError(PredictionErrorCode code, const std::string& what)
        : Error(ErrorCategory::data, std::string(to_string(code)) + ": " + what), code_(code) {}
    [[nodiscard]] PredictionErrorCode code() const noexcept { return code_; }

private:
    PredictionErrorCode code_;
};

inline constexpr std::array<std::string_view, 3> horizon_keys{"t1", "t5", "t20"};
inline constexpr std::array<std::string_view, 4> field_keys{"up", "down", "side", "confidence"};

/// The JSON document a model response carries, if any.
struct ExtractedJson {
    std::optional<nlohmann::json> doc;
    bool think_tags = false;
    bool fallback = false;
};

/// Takes the first JSON object after `</think>`; without tags, the first JSON object in the text.
ExtractedJson extract_json(std::string_view text);

/// Per-constraint outcome of checking a document against the pinned schema.
struct Inspection {
    int fields_present = 0;  // of 12; a field counts when it is a number in [0,1]
    std::array<bool, 3> horizon_complete{};
    std::array<bool, 3> sum_ok{};
    std::array<bool, 3> p_min_ok{};
    std::array<bool, 3> dominant_ok{};

    [[nodiscard]] int numeric_passed() const;
};

Inspection inspect(const nlohmann::json& doc, const ValidationPolicy& policy);

/// Throws PredictionError with the first failing constraint's code.
PredictionSet parse_prediction(std::string_view text, const ValidationPolicy& policy = {});

/// Reasoning block plus pinned JSON; parse_prediction(serialize(p)) reproduces p.
std::string serialize(const PredictionSet& p, std::string_view reasoning = "");
nlohmann::json to_json(const PredictionSet& p);

/// argmax with ties resolved up > side > down.
threshold::DirectionLabel dominant_direction(const HorizonPrediction& h);
double dominant_probability(const HorizonPrediction& h);

struct PriceContext {
    std::vector<data::DatedValue> closes;  // most recent 20, oldest first
    double chg_1d = 0.0;   // fraction
    double chg_5d = 0.0;
    double chg_20d = 0.0;
    double theta = 0.0;
    threshold::HorizonThresholds eps;
};

/// Needs at least 21 bars; `theta` is the threshold on the last bar.
PriceContext price_context(std::span<const data::DailyBar> bars, double theta);

/// Reports in fixed agent order followed by price context. Throws DataError on a missing
/// agent or a fund/date mismatch.
nlohmann::json assemble_prediction_input(std::span<const agents::AgentReport> reports, const PriceContext& price);

/// System prompt stating the required output format.
std::string_view default_system_prompt();

llm::ChatRequest prediction_request(const nlohmann::json& input, std::string_view fund, Date as_of);

}  // namespace reits::prediction
