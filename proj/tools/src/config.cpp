#include "reits/cli/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace reits::cli {

using nlohmann::json;
namespace fs = std::filesystem;

std::string interpolate_env(const std::string& text, const std::string& field) {
    std::string out;
    std::size_t pos = 0;
    while (true) {
        const auto open = text.find("${", pos);
        if (open == std::string::npos) break;
        const auto close = text.find('}', open + 2);
        if (close == std::string::npos) throw ConfigError(field + ": unterminated ${ in value");
        const auto name = text.substr(open + 2, close - open - 2);
        const char* value = std::getenv(name.c_str());
        if (value == nullptr) throw ConfigError(field + ": environment variable " + name + " is not set");
        out += text.substr(pos, open - pos);
        out += value;
        pos = close + 1;
    }
    out += text.substr(pos);
    return out;
}

namespace {

// Typed, exhaustive access to one JSON object; unknown keys are errors.
class Fields {
public:
    Fields(const json& obj, std::string prefix, fs::path base) : obj_(obj), prefix_(std::move(prefix)), base_(std::move(base)) {
        if (!obj_.is_object()) throw ConfigError(where() + ": expected an object");
    }

    [[nodiscard]] bool has(const std::string& key) const { return obj_.contains(key); }
    [[nodiscard]] std::string field(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

    void num(const std::string& key, double& out) {
        if (const auto* v = take(key)) {
            if (!v->is_number()) throw ConfigError(field(key) + ": expected a number");
            out = v->get<double>();
        }
    }
    void integer(const std::string& key, int& out) {
        if (const auto* v = take(key)) {
            if (!v->is_number_integer()) throw ConfigError(field(key) + ": expected an integer");
            out = v->get<int>();
        }
    }
    void integer(const std::string& key, std::size_t& out) {
        int v = static_cast<int>(out);
        integer(key, v);
        if (v < 0) throw ConfigError(field(key) + ": must be >= 0");
        out = static_cast<std::size_t>(v);
    }
    void integer(const std::string& key, std::int64_t& out) {
        if (const auto* v = take(key)) {
            if (!v->is_number_integer()) throw ConfigError(field(key) + ": expected an integer");
            out = v->get<std::int64_t>();
        }
    }
    void boolean(const std::string& key, bool& out) {
        if (const auto* v = take(key)) {
            if (!v->is_boolean()) throw ConfigError(field(key) + ": expected true or false");
            out = v->get<bool>();
        }
    }
    void str(const std::string& key, std::string& out) {
        if (const auto* v = take(key)) {
            if (!v->is_string()) throw ConfigError(field(key) + ": expected a string");
            out = interpolate_env(v->get<std::string>(), field(key));
        }
    }
    void strings(const std::string& key, std::vector<std::string>& out) {
        if (const auto* v = take(key)) {
            if (!v->is_array()) throw ConfigError(field(key) + ": expected an array of strings");
            out.clear();
            for (const auto& e : *v) {
                if (!e.is_string()) throw ConfigError(field(key) + ": expected an array of strings");
                out.push_back(interpolate_env(e.get<std::string>(), field(key)));
            }
        }
    }
    void path(const std::string& key, fs::path& out, bool must_exist) {
        std::string s;
        if (!has(key)) return;
        str(key, s);
        out = resolve(s);
        if (must_exist && !fs::exists(out)) throw ConfigError(field(key) + ": path does not exist: " + out.string());
    }
    void path(const std::string& key, std::optional<fs::path>& out, bool must_exist) {
        if (!has(key)) return;
        fs::path p;
        path(key, p, must_exist);
        out = p;
    }
    void required_path(const std::string& key, fs::path& out) {
        if (!has(key)) throw ConfigError(field(key) + ": required");
        path(key, out, true);
    }
    const json* object(const std::string& key) {
        const auto* v = take(key);
        if (v != nullptr && !v->is_object()) throw ConfigError(field(key) + ": expected an object");
        return v;
    }
    [[nodiscard]] fs::path resolve(const std::string& s) const {
        const fs::path p(s);
        return p.is_absolute() ? p : base_ / p;
    }
    [[nodiscard]] const fs::path& base() const { return base_; }

    void finish() const {
        for (const auto& [k, v] : obj_.items()) {
            if (seen_.count(k) == 0) throw ConfigError(field(k) + ": unknown setting");
        }
    }

private:
    [[nodiscard]] std::string where() const { return prefix_.empty() ? "config" : prefix_; }
    const json* take(const std::string& key) {
        seen_.insert(key);
        const auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    const json& obj_;
    std::string prefix_;
    fs::path base_;
    std::set<std::string> seen_;
};

void read_gateway(const json& j, const std::string& prefix, const fs::path& base, llm::GatewayConfig& g) {
    Fields f(j, prefix, base);
    f.str("base_url", g.base_url);
    f.str("endpoint_path", g.endpoint_path);
    f.str("model", g.model_name);
    f.str("api_key_env", g.api_key_env);
    f.num("timeout_s", g.timeout_s);
    f.integer("max_retries", g.max_retries);
    f.num("backoff_base_s", g.backoff_base_s);
    if (f.has("mode")) {
        std::string m;
        f.str("mode", m);
        try {
            g.mode = llm::parse_mode(m);
        } catch (const Error&) {
            throw ConfigError(f.field("mode") + ": expected live, replay, record or stub");
        }
    }
    f.path("cassette_path", g.cassette_path, false);
    f.integer("max_in_flight", g.max_in_flight);
    f.finish();
}

}  // namespace

backtest::Period parse_period(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ConfigError("period: expected START:END, got '" + text + "'");
    backtest::Period p;
    try {
        p.start = Date::parse(text.substr(0, colon));
        p.end = Date::parse(text.substr(colon + 1));
    } catch (const DataError& e) {
        throw ConfigError(std::string("period: ") + e.what());
    }
    if (!(p.start < p.end)) throw ConfigError("period: start must precede end");
    return p;
}

RunConfig parse_config(const json& doc, const fs::path& base_dir) {
    RunConfig c;
    Fields root(doc, "", base_dir);

    const auto* data = root.object("data");
    if (data == nullptr) throw ConfigError("data: required");
    {
        Fields f(*data, "data", base_dir);
        f.required_path("funds", c.data.funds);
        f.required_path("fund_bars", c.data.fund_bars);
        f.required_path("reits_market", c.data.reits_market);
        f.required_path("sse", c.data.sse);
        f.required_path("dividend", c.data.dividend);
        f.required_path("yields", c.data.yields);
        f.path("announcements", c.data.announcements, true);
        f.path("news", c.data.news, true);
        f.path("reports", c.data.reports, true);
        f.path("release_calendar", c.data.release_calendar, true);
        f.finish();
        if (!fs::is_directory(c.data.fund_bars)) throw ConfigError("data.fund_bars: expected a directory");
    }

    root.strings("universe", c.universe);
    if (!root.has("period")) throw ConfigError("period: required");
    {
        std::string p;
        root.str("period", p);
        c.period = parse_period(p);
    }
    root.integer("min_listing_days", c.min_listing_days);

    if (const auto* j = root.object("threshold")) {
        Fields f(*j, "threshold", base_dir);
        auto& t = c.threshold;
        f.integer("n_v", t.n_v);
        f.integer("n_short", t.n_short);
        f.integer("n_long", t.n_long);
        f.integer("n_b", t.n_b);
        f.num("q_lo", t.q_lo_pct);
        f.num("q_hi", t.q_hi_pct);
        f.num("tau_high", t.tau_high);
        f.num("tau_low", t.tau_low);
        f.num("m0", t.m0);
        f.num("a_high", t.a_high);
        f.num("a_low", t.a_low);
        f.finish();
    }
    if (const auto* j = root.object("indicators")) {
        Fields f(*j, "indicators", base_dir);
        auto& i = c.indicators;
        f.num("rsi_overbought", i.rsi_overbought);
        f.num("rsi_oversold", i.rsi_oversold);
        f.num("boll_biased_up", i.boll_biased_up);
        f.num("boll_biased_down", i.boll_biased_down);
        f.num("cluster_pct", i.cluster_pct);
        f.finish();
    }
    if (const auto* j = root.object("market_labels")) {
        Fields f(*j, "market_labels", base_dir);
        auto& m = c.market_labels;
        f.num("quantile_high", m.quantile_high);
        f.num("quantile_low", m.quantile_low);
        f.num("up_ratio_strong", m.up_ratio_strong);
        f.num("up_ratio_weak", m.up_ratio_weak);
        f.num("turnover_sluggish_quantile", m.turnover_sluggish_quantile);
        f.num("rel_strength_pp", m.rel_strength_pp);
        f.finish();
    }
    if (const auto* j = root.object("agents")) {
        Fields f(*j, "agents", base_dir);
        auto& a = c.agents;
        f.strings("key_announcement_types", a.key_announcement_types);
        f.integer("announcement_window_days", a.announcement_window_days);
        f.integer("news_window_days", a.news_window_days);
        f.integer("warning_window_days", a.warning_window_days);
        f.integer("theta_history_days", a.theta_history_days);
        f.finish();
    }
    if (const auto* j = root.object("validation")) {
        Fields f(*j, "validation", base_dir);
        auto& v = c.validation;
        f.num("sum_tol", v.sum_tol);
        f.num("p_min", v.p_min);
        f.num("dominant_lo", v.dominant_lo);
        f.num("dominant_hi", v.dominant_hi);
        f.finish();
    }
    if (const auto* j = root.object("reward")) {
        Fields f(*j, "reward", base_dir);
        auto& r = c.reward;
        f.num("alpha", r.alpha);
        f.num("beta", r.beta);
        f.num("w1", r.w[0]);
        f.num("w5", r.w[1]);
        f.num("w20", r.w[2]);
        f.integer("candidates", c.reward_candidates);
        f.path("candidates_path", c.reward_candidates_path, true);
        f.finish();
    }
    if (const auto* j = root.object("risk")) {
        Fields f(*j, "risk", base_dir);
        auto& r = c.risk;
        f.num("initial_capital", r.initial_capital);
        f.num("fee_rate", r.fee_rate);
        f.integer("lot_size", r.lot_size);
        f.num("step_fraction", r.step_fraction);
        f.num("max_position_fraction", r.max_position_fraction);
        f.integer("building_phase_days", r.building_phase_days);
        f.integer("building_max_daily_steps", r.building_max_daily_steps);
        f.boolean("same_day_execution", r.same_day_execution);
        if (f.has("drawdown_stop")) {
            double d = 0;
            f.num("drawdown_stop", d);
            r.drawdown_stop = d;
        }
        f.integer("max_gap_days", r.max_gap_days);
        f.finish();
    }
    if (const auto* j = root.object("gateway")) read_gateway(*j, "gateway", base_dir, c.strategy_a.gateway);
    root.num("decision_min_prob", c.strategy_a.decision_min_prob);
    c.strategy_b = c.strategy_a;
    if (const auto* j = root.object("strategy_b")) {
        Fields f(*j, "strategy_b", base_dir);
        if (const auto* g = f.object("gateway")) read_gateway(*g, "strategy_b.gateway", base_dir, c.strategy_b.gateway);
        f.num("decision_min_prob", c.strategy_b.decision_min_prob);
        f.finish();
    }
    if (root.has("output_dir")) root.path("output_dir", c.output_dir, false);
    else c.output_dir = base_dir / "out";
    root.integer("jobs", c.jobs);
    root.finish();

    c.threshold.validate();
    c.validation.validate();
    c.reward.validate();
    c.risk.validate();
    c.strategy_a.gateway.validate();
    c.strategy_b.gateway.validate();
    if (c.reward_candidates < 1) throw ConfigError("reward.candidates: must be >= 1");
    if (c.jobs < 1) throw ConfigError("jobs: must be >= 1");
    return c;
}

RunConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    const auto doc = json::parse(in, nullptr, false, true);
    if (doc.is_discarded()) throw ConfigError("config: " + path.string() + " is not valid JSON");
    return parse_config(doc, fs::absolute(path).parent_path());
}

data::MarketStore load_store(const RunConfig& cfg) {
    data::MarketStore s;
    s.funds = data::load_fund_meta(cfg.data.funds);
    for (const auto& f : s.funds) {
        const auto p = cfg.data.fund_bars / (f.code + ".csv");
        if (!fs::exists(p)) throw DataError("missing bar file for fund " + f.code + ": " + p.string());
        auto bars = data::load_series<data::DailyBar>(p);
        if (bars.size() > 0 && !(f.listing_date <= bars.all().front().date)) {
            throw DataError(f.code + ": listing date " + f.listing_date.iso() + " is after its first bar " +
                            bars.all().front().date.iso());
        }
        s.fund_bars.emplace(f.code, std::move(bars));
    }
    s.reits_market = data::load_series<data::DailyBar>(cfg.data.reits_market);
    s.sse = data::load_series<data::IndexBar>(cfg.data.sse);
    s.dividend = data::load_series<data::IndexBar>(cfg.data.dividend);
    s.yields = data::load_series<data::YieldPoint>(cfg.data.yields);
    if (cfg.data.announcements) s.add_announcements(data::load_announcements(*cfg.data.announcements));
    if (cfg.data.news) s.add_news(data::load_news(*cfg.data.news));
    if (cfg.data.reports) s.add_reports(data::load_reports(*cfg.data.reports));
    if (cfg.data.release_calendar) s.release_calendar = data::load_release_calendar(*cfg.data.release_calendar);
    return s;
}

std::vector<std::string> select_funds(const RunConfig& cfg, const data::MarketStore& store) {
    std::vector<std::string> out;
    const auto eligible = data::eligible_funds(store.funds, cfg.period.start, cfg.min_listing_days);
    for (const auto& f : eligible) {
        if (cfg.universe.empty() ||
            std::find(cfg.universe.begin(), cfg.universe.end(), f.code) != cfg.universe.end()) {
            out.push_back(f.code);
        }
    }
    for (const auto& code : cfg.universe) {
        if (std::none_of(store.funds.begin(), store.funds.end(), [&](const data::FundMeta& f) { return f.code == code; })) {
            throw ConfigError("universe: unknown fund " + code);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace reits::cli
