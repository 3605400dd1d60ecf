#include "reits/backtest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "reits/stats.hpp"

namespace reits::backtest {

using nlohmann::json;

std::string_view to_string(ActionSignal s) {
    switch (s) {
        case ActionSignal::close_position: return "close_position";
        case ActionSignal::reduce_40: return "reduce_40";
        case ActionSignal::reduce_20: return "reduce_20";
        case ActionSignal::hold: return "hold";
        case ActionSignal::increase_20: return "increase_20";
        case ActionSignal::increase_40: return "increase_40";
        case ActionSignal::increase_to_limit: return "increase_to_limit";
    }
    return "hold";
}

namespace {

std::optional<ActionSignal> match_token(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    for (auto a : all_signals) {
        if (to_string(a) == s) return a;
    }
    return std::nullopt;
}

}  // namespace

ActionSignal parse_decision(std::string_view text) {
    std::string_view body = text;
    if (const auto close = text.find("</think>"); close != std::string_view::npos) body = text.substr(close + 8);
    if (auto a = match_token(body)) return *a;
    if (const auto open = body.find('{'); open != std::string_view::npos) {
        const auto close = body.rfind('}');
        if (close != std::string_view::npos && close > open) {
            const auto doc = json::parse(body.substr(open, close - open + 1), nullptr, false);
            if (!doc.is_discarded() && doc.is_object() && doc.contains("action") && doc["action"].is_string()) {
                if (auto a = match_token(doc["action"].get<std::string>())) return *a;
                throw DataError("unrecognized action '" + doc["action"].get<std::string>() + "'");
            }
        }
    }
    const auto shown = body.substr(0, std::min<std::size_t>(body.size(), 40));
    throw DataError("unrecognized action in decision output: '" + std::string(shown) + "'");
}

void RiskConfig::validate() const {
    if (!(initial_capital > 0)) throw ConfigError("risk.initial_capital must be > 0");
    if (!(fee_rate >= 0)) throw ConfigError("risk.fee_rate must be >= 0");
    if (lot_size < 1) throw ConfigError("risk.lot_size must be >= 1");
    if (!(step_fraction > 0 && step_fraction <= 1)) throw ConfigError("risk.step_fraction must lie in (0, 1]");
    if (!(max_position_fraction > 0 && max_position_fraction <= 1)) {
        throw ConfigError("risk.max_position_fraction must lie in (0, 1]");
    }
    if (building_phase_days < 0 || building_max_daily_steps < 0) {
        throw ConfigError("risk.building_phase_days and building_max_daily_steps must be >= 0");
    }
    if (drawdown_stop && !(*drawdown_stop > 0 && *drawdown_stop < 1)) {
        throw ConfigError("risk.drawdown_stop must lie in (0, 1)");
    }
    if (max_gap_days < 1) throw ConfigError("risk.max_gap_days must be >= 1");
}

Account open_account(std::string fund_code, const RiskConfig& cfg) {
    Account a;
    a.fund_code = std::move(fund_code);
    a.cash = cfg.initial_capital;
    return a;
}

std::int64_t floor_to_lot(double shares, std::int64_t lot) {
    if (!(shares > 0)) return 0;
    return static_cast<std::int64_t>(std::floor(shares / static_cast<double>(lot))) * lot;
}

std::int64_t target_shares(ActionSignal signal, const Account& account, double price, const RiskConfig& cfg,
                           bool in_building_phase, int steps_today) {
    if (!(price > 0)) throw InvariantError("target_shares: non-positive price");
    const double step = cfg.step_fraction * cfg.initial_capital;
    const std::int64_t held = account.shares;
    const auto lots = [&](double notional) { return floor_to_lot(notional / price, cfg.lot_size); };

    switch (signal) {
        case ActionSignal::close_position: return 0;
        case ActionSignal::hold: return held;
        case ActionSignal::reduce_20: return std::max<std::int64_t>(0, held - lots(step));
        case ActionSignal::reduce_40: return std::max<std::int64_t>(0, held - lots(2 * step));
        case ActionSignal::increase_20:
        case ActionSignal::increase_40:
        case ActionSignal::increase_to_limit: break;
    }

    const std::int64_t cap = lots(cfg.max_position_fraction * account.nav(price));
    const std::int64_t affordable = held + floor_to_lot(account.cash / (price * (1.0 + cfg.fee_rate)), cfg.lot_size);
    const std::int64_t upper = std::min(cap, affordable);

    int steps = signal == ActionSignal::increase_20 ? 1 : signal == ActionSignal::increase_40 ? 2 : -1;
    if (in_building_phase) {
        const int allowed = std::max(0, cfg.building_max_daily_steps - steps_today);
        steps = steps < 0 ? allowed : std::min(steps, allowed);
    }
    const std::int64_t want = steps < 0 ? upper : held + lots(steps * step);
    return std::max(held, std::min(want, upper));
}

std::optional<Trade> execute(Account& account, std::int64_t target, double price, double fee_rate, Date date) {
    if (target < 0) throw InvariantError("execute: negative target position");
    if (target == account.shares) return std::nullopt;
    Trade t;
    t.date = date;
    t.price = price;
    if (target > account.shares) {
        t.side = Side::buy;
        t.shares = target - account.shares;
        const double notional = static_cast<double>(t.shares) * price;
        t.fee = notional * fee_rate;
        if (notional + t.fee > account.cash + 1e-6) {
            throw InvariantError(fmt::format("execute: buy of {} shares at {} costs {} with cash {}", t.shares, price,
                                             notional + t.fee, account.cash));
        }
        account.cash -= notional + t.fee;
    } else {
        t.side = Side::sell;
        t.shares = account.shares - target;
        const double notional = static_cast<double>(t.shares) * price;
        t.fee = notional * fee_rate;
        account.cash += notional - t.fee;
    }
    account.shares = target;
    t.cash_after = account.cash;
    t.shares_after = account.shares;
    account.trades.push_back(t);
    return t;
}

double max_drawdown(std::span<const double> nav) {
    double peak = -std::numeric_limits<double>::infinity();
    double mdd = 0.0;
    for (double v : nav) {
        peak = std::max(peak, v);
        mdd = std::min(mdd, v / peak - 1.0);
    }
    return mdd;
}

Metrics metrics(std::span<const NavPoint> nav, std::optional<double> nav0, int trading_days_per_year,
                double rf_annual) {
    if (nav.empty()) throw DataError("metrics: empty NAV series");
    if (nav0 && !(*nav0 > 0)) throw InvariantError("metrics: starting NAV must be positive");
    Metrics m;
    std::vector<double> v;
    v.reserve(nav.size() + 1);
    if (nav0) v.push_back(*nav0);
    for (const auto& p : nav) v.push_back(p.nav);
    m.cr = v.back() / v.front() - 1.0;
    m.mdd = max_drawdown(v);
    if (nav0) v.erase(v.begin());
    if (v.size() >= 3) {
        const double rf_daily = rf_annual / trading_days_per_year;
        std::vector<double> ex;
        for (std::size_t i = 1; i < v.size(); ++i) ex.push_back(v[i] / v[i - 1] - 1.0 - rf_daily);
        const double sd = stats::sample_std(ex);
        if (sd > 1e-12) m.sharpe = stats::mean(ex) / sd * std::sqrt(static_cast<double>(trading_days_per_year));
    }
    return m;
}

namespace {

struct PeriodSlice {
    std::size_t first = 0;
    std::size_t last = 0;  // inclusive
};

PeriodSlice slice(const std::string& fund, std::span<const data::DailyBar> bars, const Period& period,
                  const RiskConfig& cfg) {
    if (!(period.start < period.end)) throw ConfigError("backtest period start must precede end");
    const auto lo = std::lower_bound(bars.begin(), bars.end(), period.start,
                                     [](const data::DailyBar& b, Date d) { return b.date < d; });
    const auto hi = std::upper_bound(bars.begin(), bars.end(), period.end,
                                     [](Date d, const data::DailyBar& b) { return d < b.date; });
    if (lo >= hi) {
        throw DataError(fund + ": no bars between " + period.start.iso() + " and " + period.end.iso());
    }
    PeriodSlice s{static_cast<std::size_t>(lo - bars.begin()), static_cast<std::size_t>(hi - bars.begin()) - 1};
    for (std::size_t i = s.first + 1; i <= s.last; ++i) {
        const int gap = bars[i].date.days_since(bars[i - 1].date);
        if (gap > cfg.max_gap_days) {
            throw DataError(fmt::format("{}: data gap of {} days between {} and {}", fund, gap, bars[i - 1].date.iso(),
                                        bars[i].date.iso()));
        }
    }
    return s;
}

}  // namespace

BacktestResult run_backtest(const std::string& fund, std::span<const data::DailyBar> bars, const Period& period,
                            Strategy& strategy, const RiskConfig& cfg) {
    cfg.validate();
    const auto s = slice(fund, bars, period, cfg);
    BacktestResult res;
    auto& acct = res.account;
    acct = open_account(fund, cfg);

    std::optional<ActionSignal> pending;
    bool stopped = false;
    double peak = 0.0;
    for (std::size_t i = s.first; i <= s.last; ++i) {
        const auto& bar = bars[i];
        const auto day = static_cast<int>(i - s.first);
        if (pending) {
            execute(acct, target_shares(*pending, acct, bar.close, cfg, day < cfg.building_phase_days), bar.close,
                    cfg.fee_rate, bar.date);
            pending.reset();
        }
        acct.nav_series.push_back({bar.date, acct.nav(bar.close)});
        peak = std::max(peak, acct.nav_series.back().nav);
        if (cfg.drawdown_stop && acct.nav_series.back().nav / peak - 1.0 <= -*cfg.drawdown_stop) stopped = true;

        if (i == s.last && !cfg.same_day_execution) break;
        const int exec_day = cfg.same_day_execution ? day : day + 1;
        const bool building = exec_day < cfg.building_phase_days;
        ActionSignal signal = ActionSignal::hold;
        if (stopped) {
            signal = acct.shares > 0 ? ActionSignal::close_position : ActionSignal::hold;
        } else {
            const auto d = strategy.decide(fund, bar.date, acct, building);
            if (d.signal) {
                signal = *d.signal;
            } else {
                spdlog::warn("{} {}: unusable strategy output, holding ({})", fund, bar.date.iso(), d.note);
            }
        }
        res.decisions.emplace_back(bar.date, signal);
        if (cfg.same_day_execution) {
            execute(acct, target_shares(signal, acct, bar.close, cfg, building), bar.close, cfg.fee_rate, bar.date);
            acct.nav_series.back().nav = acct.nav(bar.close);
        } else {
            pending = signal;
        }
    }
    res.metrics = metrics(acct.nav_series, cfg.initial_capital);
    return res;
}

BacktestResult buy_and_hold(const std::string& fund, std::span<const data::DailyBar> bars, const Period& period,
                            const RiskConfig& cfg) {
    cfg.validate();
    const auto s = slice(fund, bars, period, cfg);
    BacktestResult res;
    auto& acct = res.account;
    acct = open_account(fund, cfg);
    for (std::size_t i = s.first; i <= s.last; ++i) {
        const auto& bar = bars[i];
        if (i == s.first) {
            execute(acct, target_shares(ActionSignal::increase_to_limit, acct, bar.close, cfg, false), bar.close,
                    cfg.fee_rate, bar.date);
            res.decisions.emplace_back(bar.date, ActionSignal::increase_to_limit);
        }
        acct.nav_series.push_back({bar.date, acct.nav(bar.close)});
    }
    res.metrics = metrics(acct.nav_series, cfg.initial_capital);
    return res;
}

std::vector<NavPoint> aggregate_nav(std::span<const Account> accounts) {
    if (accounts.empty()) return {};
    std::set<Date> all;
    std::set<Date> common;
    for (std::size_t a = 0; a < accounts.size(); ++a) {
        const auto& nav = accounts[a].nav_series;
        if (nav.empty()) throw DataError("aggregate NAV: account " + accounts[a].fund_code + " has no NAV points");
        std::set<Date> mine;
        for (const auto& p : nav) mine.insert(p.date);
        all.insert(mine.begin(), mine.end());
        if (a == 0) {
            common = std::move(mine);
        } else {
            std::set<Date> keep;
            std::set_intersection(common.begin(), common.end(), mine.begin(), mine.end(),
                                  std::inserter(keep, keep.begin()));
            common = std::move(keep);
        }
    }
    if (common.empty()) throw DataError("aggregate NAV: accounts share no trading date");

    std::vector<NavPoint> out;
    out.reserve(all.size());
    std::vector<std::size_t> cursor(accounts.size(), 0);
    for (const Date d : all) {
        double total = 0.0;
        for (std::size_t a = 0; a < accounts.size(); ++a) {
            const auto& nav = accounts[a].nav_series;
            auto& c = cursor[a];
            while (c + 1 < nav.size() && nav[c + 1].date <= d) ++c;
            total += nav[c].nav;
        }
        out.push_back({d, total});
    }
    return out;
}

void write_trades_csv(std::ostream& out, std::span<const Trade> trades) {
    out << "date,side,shares,price,fee,cash_after,shares_after\n";
    for (const auto& t : trades) {
        out << fmt::format("{},{},{},{},{:.6f},{:.6f},{}\n", t.date.iso(), t.side == Side::buy ? "buy" : "sell",
                           t.shares, t.price, t.fee, t.cash_after, t.shares_after);
    }
}

void write_nav_csv(std::ostream& out, std::span<const NavPoint> nav) {
    out << "date,nav\n";
    for (const auto& p : nav) out << fmt::format("{},{:.6f}\n", p.date.iso(), p.nav);
}

json to_json(const Metrics& m) {
    return {{"cr", m.cr}, {"sharpe", m.sharpe ? json(*m.sharpe) : json(nullptr)}, {"mdd", m.mdd}};
}

}  // namespace reits::backtest
