#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "reits/market_data.hpp"

namespace reits::backtest {

enum class ActionSignal { close_position, reduce_40, reduce_20, hold, increase_20, increase_40, increase_to_limit };
std::string_view to_string(ActionSignal s);

inline constexpr std::array<ActionSignal, 7> all_signals{
    ActionSignal::close_position, ActionSignal::reduce_40,   ActionSignal::reduce_20,        ActionSignal::hold,
    ActionSignal::increase_20,    ActionSignal::increase_40, ActionSignal::increase_to_limit};

/// Accepts a bare token or a response whose JSON (after any <think> block) has an "action" field.
/// Throws DataError on anything else.
ActionSignal parse_decision(std::string_view text);

struct RiskConfig {
    double initial_capital = 1'000'000.0;
    double fee_rate = 0.0003;             // per side
    std::int64_t lot_size = 100;
    double step_fraction = 0.20;          // of initial capital per step
    double max_position_fraction = 1.0;   // of current NAV
    int building_phase_days = 10;
    int building_max_daily_steps = 1;
    bool same_day_execution = false;      // sensitivity runs only; default executes at t+1
    std::optional<double> drawdown_stop;  // extension: liquidate and stop once NAV falls this far below its peak
    int max_gap_days = 10;

    void validate() const;
};

enum class Side { buy, sell };

struct Trade {
    Date date;
    Side side = Side::buy;
    std::int64_t shares = 0;
    double price = 0.0;
    double fee = 0.0;
    double cash_after = 0.0;
    std::int64_t shares_after = 0;
};

struct NavPoint {
    Date date;
    double nav = 0.0;
};

struct Account {
    std::string fund_code;
    double cash = 0.0;
    std::int64_t shares = 0;
    std::vector<Trade> trades;
    std::vector<NavPoint> nav_series;

    [[nodiscard]] double nav(double price) const { return cash + static_cast<double>(shares) * price; }
};

Account open_account(std::string fund_code, const RiskConfig& cfg);

std::int64_t floor_to_lot(double shares, std::int64_t lot);

/// Target position after `signal`; total via clamps.
std::int64_t target_shares(ActionSignal signal, const Account& account, double price, const RiskConfig& cfg,
                           bool in_building_phase, int steps_today = 0);

/// Moves the account to `target` shares at `price`. Returns the trade, or nothing when
/// target equals the current position. Throws InvariantError on an unaffordable buy.
std::optional<Trade> execute(Account& account, std::int64_t target, double price, double fee_rate, Date date);

struct Metrics {
    double cr = 0.0;
    std::optional<double> sharpe;  // absent when the return std is zero or undefined
    double mdd = 0.0;
};

/// CR and MDD are measured from `nav0` (the starting capital) when given, else from the
/// first point. Sharpe uses the daily returns of the marked series.
Metrics metrics(std::span<const NavPoint> nav, std::optional<double> nav0 = std::nullopt,
                int trading_days_per_year = 252, double rf_annual = 0.0);

/// min over t of NAV_t / max_{s<=t} NAV_s - 1.
double max_drawdown(std::span<const double> nav);

struct Period {
    Date start;
    Date end;  // inclusive
};

/// A decision for day t. `signal` empty means the strategy's output could not be used.
struct Decision {
    std::optional<ActionSignal> signal;
    std::string note;
};

class Strategy {
public:
    virtual ~Strategy() = default;
    /// Called once per trading day with data visible at `as_of`.
    virtual Decision decide(const std::string& fund, Date as_of, const Account& account, bool in_building_phase) = 0;
};

struct BacktestResult {
    Account account;
    Metrics metrics;
    std::vector<std::pair<Date, ActionSignal>> decisions;
};

/// Daily loop: decide on day t, execute at the close of t+1, mark NAV every day.
BacktestResult run_backtest(const std::string& fund, std::span<const data::DailyBar> bars, const Period& period,
                            Strategy& strategy, const RiskConfig& cfg);

/// Invests all capital at the first close of the period and holds.
BacktestResult buy_and_hold(const std::string& fund, std::span<const data::DailyBar> bars, const Period& period,
                            const RiskConfig& cfg);

/// Per-date sum over accounts, forward-filling an account's last NAV across its missing
/// dates (and back-filling its first NAV before it starts). Throws DataError when the
/// accounts share no date.
std::vector<NavPoint> aggregate_nav(std::span<const Account> accounts);

void write_trades_csv(std::ostream& out, std::span<const Trade> trades);
void write_nav_csv(std::ostream& out, std::span<const NavPoint> nav);
nlohmann::json to_json(const Metrics& m);

}  // namespace reits::backtest
