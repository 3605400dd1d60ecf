#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "reits/indicators.hpp"
#include "reits/macro_state.hpp"
#include "reits/market_data.hpp"
#include "reits/threshold.hpp"

namespace reits::agents {

enum class AgentKind { momentum, announcement, event, market };
std::string_view to_string(AgentKind k);
AgentKind parse_agent_kind(std::string_view s);

/// Fixed merge order of the four analytical agents.
inline constexpr std::array<AgentKind, 4> agent_order{AgentKind::momentum, AgentKind::announcement, AgentKind::event,
                                                      AgentKind::market};

struct AgentReport {
    AgentKind agent = AgentKind::momentum;
    std::string fund_code;
    Date as_of;
    nlohmann::json payload;
    std::optional<std::string> narrative;  // model interpretation; absent in stub mode
};

nlohmann::json to_json(const AgentReport& r);

struct AgentConfig {
    std::vector<std::string> key_announcement_types{"distribution", "quarterly_report", "expansion",
                                                    "unitholder_meeting"};
    int announcement_window_days = 7;
    int news_window_days = 14;
    int warning_window_days = 10;
    std::size_t theta_history_days = 5;
};

// ---------------------------------------------------------------------------
// Momentum agent

/// |r_t| > theta_t for each of the last `n` dated thresholds (oldest first).
std::vector<bool> breach_flags(std::span<const data::DailyBar> bars,
                               std::span<const threshold::DatedThreshold> thetas, std::size_t n = 5);

AgentReport build_momentum_context(std::string_view fund, Date as_of, const indicators::IndicatorSnapshot& snapshot,
                                   std::span<const threshold::DatedThreshold> theta_history,
                                   const std::vector<bool>& breaches);

// ---------------------------------------------------------------------------
// Announcement agent

struct WindowStats {
    std::size_t n = 0;                // announcements with forward bars for this window
    std::optional<double> p_up;       // share with cumulative return > 0
    std::optional<double> avg_chg;    // mean cumulative return (fraction)
    std::optional<double> sig_freq;   // share with |cum return| > eps_k at the announcement date
};

struct AnnouncementImpactStats {
    std::string ann_type;
    data::Sentiment sentiment_group = data::Sentiment::neutral;
    std::size_t n = 0;
    std::array<WindowStats, 3> windows;  // 1, 5, 20 trading days
};

/// Historical reaction profile of `ann_type` announcements published strictly before
/// `as_of`, grouped positive / neutral / negative.
std::array<AnnouncementImpactStats, 3> announcement_impact_stats(std::span<const data::Announcement> history,
                                                                 std::span<const data::DailyBar> bars,
                                                                 std::string_view ann_type, Date as_of,
                                                                 const threshold::ThresholdParams& params);

nlohmann::json to_json(const AnnouncementImpactStats& s);

/// Recent price path and sideways state handed to the announcement agent.
struct RecentTrend {
    double chg_5d = 0.0;   // fraction
    double chg_20d = 0.0;  // fraction
    double theta = 0.0;
    double eps5 = 0.0;
    double eps20 = 0.0;
    bool sideways_5d = false;
    bool sideways_20d = false;
};

RecentTrend recent_trend(std::span<const data::DailyBar> bars, double theta);

AgentReport build_announcement_context(std::string_view fund, Date as_of,
                                       std::span<const data::Announcement> announcements,
                                       const std::map<std::string, std::array<AnnouncementImpactStats, 3>>& impact_stats,
                                       const RecentTrend& trend, const AgentConfig& cfg = {});

// ---------------------------------------------------------------------------
// Event agent

struct QuarterlyWarning {
    bool active = false;
    std::optional<Date> next_release;
    std::optional<int> days_until;
};

/// Active iff the next scheduled release (on or after as_of) is within `window_days`.
QuarterlyWarning quarterly_warning(Date as_of, std::span<const Date> release_calendar, int window_days = 10);

/// Weight of a news item `age_days` old.
inline double recency_weight(int age_days) { return 1.0 / (1.0 + age_days); }

AgentReport build_event_context(std::string_view fund, Date as_of, std::span<const data::NewsItem> news,
                                std::span<const data::OperationalReport> reports, const QuarterlyWarning& warning,
                                int window_days = 14);

// ---------------------------------------------------------------------------
// Market agent

AgentReport build_market_context(std::string_view fund, const macro::MarketSnapshot& snapshot);

}  // namespace reits::agents
