#include "reits/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "reits/strategy.hpp"

namespace reits::cli {

using nlohmann::json;
namespace fs = std::filesystem;

void apply(RunConfig& cfg, const Overrides& o) {
    if (o.mode) {
        cfg.strategy_a.gateway.mode = *o.mode;
        cfg.strategy_b.gateway.mode = *o.mode;
        cfg.strategy_a.gateway.validate();
        cfg.strategy_b.gateway.validate();
    }
    if (o.jobs) {
        if (*o.jobs < 1) throw ConfigError("--jobs: must be >= 1");
        cfg.jobs = *o.jobs;
    }
    if (!o.funds.empty()) cfg.universe = o.funds;
    if (o.period) cfg.period = *o.period;
    if (o.out) cfg.output_dir = *o.out;
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << content;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the failure with the lowest index.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), std::max<std::size_t>(n, 1));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::vector<Date> period_dates(std::span<const data::DailyBar> bars, const backtest::Period& p) {
    std::vector<Date> out;
    for (const auto& b : bars) {
        if (p.start <= b.date && b.date <= p.end) out.push_back(b.date);
    }
    return out;
}

strategy::PipelineConfig pipeline_config(const RunConfig& cfg) {
    return {cfg.threshold, cfg.indicators, cfg.market_labels, cfg.agents, cfg.validation};
}

std::string fmt_opt(const std::optional<double>& v, const char* spec = "{:.6f}") {
    return v ? fmt::format(fmt::runtime(spec), *v) : std::string();
}

std::string pct(const std::optional<double>& v) { return v ? fmt::format("{:.2f}%", *v * 100.0) : "n/a"; }
std::string num2(const std::optional<double>& v) { return v ? fmt::format("{:.2f}", *v) : "n/a"; }

}  // namespace

int cmd_ingest(const RunConfig& cfg) {
    const auto store = load_store(cfg);
    json funds = json::array();
    for (const auto& f : store.funds) {
        const auto& bars = store.bars_of(f.code).all();
        funds.push_back({{"code", f.code},
                         {"listing_date", f.listing_date.iso()},
                         {"bars", bars.size()},
                         {"first", bars.empty() ? json(nullptr) : json(bars.front().date.iso())},
                         {"last", bars.empty() ? json(nullptr) : json(bars.back().date.iso())}});
    }
    std::size_t n_ann = 0, n_rep = 0;
    for (const auto& [k, v] : store.announcements) n_ann += v.size();
    for (const auto& [k, v] : store.reports) n_rep += v.size();
    const auto selected = select_funds(cfg, store);
    const json summary = {{"funds", funds},
                          {"eligible_at_period_start", selected},
                          {"reits_market_bars", store.reits_market.size()},
                          {"sse_bars", store.sse.size()},
                          {"dividend_bars", store.dividend.size()},
                          {"yield_points", store.yields.size()},
                          {"announcements", n_ann},
                          {"news", store.news.size()},
                          {"reports", n_rep},
                          {"calendar_days", store.calendar().dates().size()}};
    write_file(cfg.output_dir / "ingest_summary.json", summary.dump(2) + "\n");
    std::cout << fmt::format("ingested {} funds ({} eligible), {} market days\n", store.funds.size(), selected.size(),
                             store.reits_market.size());
    return 0;
}

int cmd_indicators(const RunConfig& cfg) {
    const auto store = load_store(cfg);
    const auto funds = select_funds(cfg, store);
    std::vector<std::string> outputs(funds.size());
    parallel_for(funds.size(), cfg.jobs, [&](std::size_t i) {
        std::string text;
        const auto& all = store.bars_of(funds[i]).all();
        for (const Date d : period_dates(all, cfg.period)) {
            const data::PointInTimeView view(store, funds[i], d);
            json j = indicators::to_json(indicators::compute_snapshot(view.fund_bars(), d, cfg.indicators));
            j["fund_code"] = funds[i];
            text += j.dump() + "\n";
        }
        outputs[i] = std::move(text);
    });
    for (std::size_t i = 0; i < funds.size(); ++i) {
        write_file(cfg.output_dir / "indicators" / (funds[i] + ".jsonl"), outputs[i]);
    }
    std::cout << fmt::format("wrote indicator snapshots for {} funds\n", funds.size());
    return 0;
}

int cmd_label(const RunConfig& cfg) {
    const auto store = load_store(cfg);
    const auto funds = select_funds(cfg, store);
    std::size_t total = 0;
    for (const auto& f : funds) {
        std::string text;
        for (const auto& s : threshold::annotate(store.bars_of(f).all(), cfg.threshold, f)) {
            if (s.date < cfg.period.start || cfg.period.end < s.date) continue;
            text += threshold::to_json(s).dump() + "\n";
            ++total;
        }
        write_file(cfg.output_dir / "labels" / (f + ".jsonl"), text);
    }
    std::cout << fmt::format("wrote {} labeled samples for {} funds\n", total, funds.size());
    return 0;
}

int cmd_quadrant(const RunConfig& cfg) {
    const auto store = load_store(cfg);
    std::string csv = "date,quadrant,rate_trend,equity_state,rationale\n";
    std::optional<macro::MarketSnapshot> last;
    for (const Date d : period_dates(store.reits_market.all(), cfg.period)) {
        const data::PointInTimeView view(store, {}, d);
        auto s = macro::build_market_snapshot(view.reits_market(), view.sse(), view.dividend(), view.yields(), d,
                                              cfg.market_labels);
        csv += fmt::format("{},{},{},{},\"{}\"\n", d.iso(), macro::to_string(s.quadrant.value),
                           macro::to_string(s.rate_trend), macro::to_string(s.equity_state), s.quadrant.rationale);
        last = std::move(s);
    }
    if (!last) throw DataError("no REITs market observations inside the period");
    write_file(cfg.output_dir / "quadrant.csv", csv);
    write_file(cfg.output_dir / "market_snapshot.json", macro::to_json(*last).dump(2) + "\n");
    std::cout << fmt::format("{} {}: {}\n", last->as_of.iso(), macro::to_string(last->quadrant.value),
                             last->quadrant.rationale);
    return 0;
}

int cmd_reward(const RunConfig& cfg) {
    const auto store = load_store(cfg);
    const auto funds = select_funds(cfg, store);
    llm::Gateway gateway(cfg.strategy_a.gateway);
    const strategy::AgentPipeline pipeline(store, gateway, pipeline_config(cfg));

    std::map<std::string, std::vector<std::string>> supplied;
    if (cfg.reward_candidates_path) {
        std::istringstream lines(read_file(*cfg.reward_candidates_path));
        std::string line;
        for (int n = 1; std::getline(lines, line); ++n) {
            if (line.empty()) continue;
            const auto j = json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.contains("fund_code") || !j.contains("date") || !j.contains("texts")) {
                throw DataError(fmt::format("{}:{}: expected {{fund_code, date, texts}}",
                                            cfg.reward_candidates_path->string(), n));
            }
            supplied[j["fund_code"].get<std::string>() + "@" + j["date"].get<std::string>()] =
                j["texts"].get<std::vector<std::string>>();
        }
    }

    std::vector<threshold::LabeledSample> samples;
    for (const auto& f : funds) {
        for (auto& s : threshold::annotate(store.bars_of(f).all(), cfg.threshold, f)) {
            if (s.complete() && cfg.period.start <= s.date && s.date <= cfg.period.end) samples.push_back(std::move(s));
        }
    }
    std::vector<reward::RecordSource> sources(samples.size());
    parallel_for(samples.size(), cfg.jobs, [&](std::size_t i) {
        const auto& s = samples[i];
        auto& src = sources[i];
        src.sample = s;
        src.input_payload = pipeline.prediction_input(s.fund_code, s.date);
        if (const auto it = supplied.find(s.fund_code + "@" + s.date.iso()); it != supplied.end()) {
            src.texts = it->second;
        } else {
            const auto req = prediction::prediction_request(src.input_payload, s.fund_code, s.date);
            for (int c = 0; c < cfg.reward_candidates; ++c) src.texts.push_back(gateway.complete(req));
        }
    });
    const auto gspo = reward::emit_records(reward::RecordKind::gspo_candidate, sources, cfg.reward, cfg.validation);
    std::vector<reward::RecordSource> teacher = sources;
    for (auto& t : teacher) t.texts.resize(1);
    const auto sft = reward::emit_records(reward::RecordKind::sft, teacher, cfg.reward, cfg.validation);

    std::ostringstream g, s;
    reward::write_jsonl(g, gspo);
    reward::write_jsonl(s, sft);
    write_file(cfg.output_dir / "training" / "gspo.jsonl", g.str());
    write_file(cfg.output_dir / "training" / "sft.jsonl", s.str());
    double mean = 0.0;
    for (const auto& r : gspo) mean += r.reward->reward;
    if (!gspo.empty()) mean /= static_cast<double>(gspo.size());
    std::cout << fmt::format("wrote {} gspo and {} sft records, mean reward {:.4f}\n", gspo.size(), sft.size(), mean);
    return 0;
}

std::vector<StrategyRun> run_backtests(const RunConfig& cfg, const data::MarketStore& store, data::AccessAudit* audit) {
    const auto funds = select_funds(cfg, store);
    if (funds.empty()) throw DataError("no eligible funds for the period starting " + cfg.period.start.iso());
    if (cfg.strategy_a.gateway.mode == llm::Mode::record && cfg.strategy_b.gateway.mode == llm::Mode::record &&
        cfg.strategy_a.gateway.cassette_path == cfg.strategy_b.gateway.cassette_path) {
        throw ConfigError("strategy_b.gateway.cassette_path: must differ from gateway.cassette_path when recording");
    }

    llm::Gateway gw_a(cfg.strategy_a.gateway);
    llm::Gateway gw_b(cfg.strategy_b.gateway);
    const strategy::AgentPipeline pipe_a(store, gw_a, pipeline_config(cfg), audit);
    const strategy::AgentPipeline pipe_b(store, gw_b, pipeline_config(cfg), audit);
    strategy::LlmStrategy strat_a(pipe_a, gw_a, cfg.strategy_a.decision_min_prob);
    strategy::LlmStrategy strat_b(pipe_b, gw_b, cfg.strategy_b.decision_min_prob);

    std::vector<StrategyRun> runs(3);
    for (std::size_t s = 0; s < 3; ++s) {
        runs[s].name = std::string(strategy_names[s]);
        runs[s].funds = funds;
        runs[s].results.resize(funds.size());
    }
    parallel_for(funds.size() * 3, cfg.jobs, [&](std::size_t k) {
        const std::size_t s = k % 3, i = k / 3;
        const auto& bars = store.bars_of(funds[i]).all();
        auto& out = runs[s].results[i];
        if (s == 0) out = backtest::run_backtest(funds[i], bars, cfg.period, strat_a, cfg.risk);
        else if (s == 1) out = backtest::run_backtest(funds[i], bars, cfg.period, strat_b, cfg.risk);
        else out = backtest::buy_and_hold(funds[i], bars, cfg.period, cfg.risk);
    });
    return runs;
}

void write_backtest_artifacts(const fs::path& out_dir, std::span<const StrategyRun> runs) {
    for (const auto& run : runs) {
        const auto dir = out_dir / "backtest" / run.name;
        json metrics = json::object();
        for (std::size_t i = 0; i < run.funds.size(); ++i) {
            const auto& r = run.results[i];
            const auto& fund = run.funds[i];
            std::ostringstream trades, nav;
            backtest::write_trades_csv(trades, r.account.trades);
            backtest::write_nav_csv(nav, r.account.nav_series);
            write_file(dir / (fund + "_trades.csv"), trades.str());
            write_file(dir / (fund + "_nav.csv"), nav.str());
            std::string decisions = "date,action\n";
            for (const auto& [d, a] : r.decisions) decisions += d.iso() + "," + std::string(backtest::to_string(a)) + "\n";
            write_file(dir / (fund + "_decisions.csv"), decisions);
            metrics[fund] = backtest::to_json(r.metrics);
        }
        write_file(dir / "metrics.json", metrics.dump(2) + "\n");
    }
}

int cmd_backtest(const RunConfig& cfg) {
    const auto store = load_store(cfg);
    const auto runs = run_backtests(cfg, store);
    write_backtest_artifacts(cfg.output_dir, runs);
    for (const auto& r : runs) {
        std::vector<std::optional<double>> cr;
        for (const auto& x : r.results) cr.emplace_back(x.metrics.cr);
        std::cout << fmt::format("{}: {} funds, mean CR {}\n", r.name, r.funds.size(), pct(summarize(cr).mean));
    }
    return 0;
}

Summary summarize(std::span<const std::optional<double>> values) {
    Summary s;
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& v : values) {
        if (!v) continue;
        sum += *v;
        ++n;
        s.max = s.max ? std::max(*s.max, *v) : *v;
        s.min = s.min ? std::min(*s.min, *v) : *v;
    }
    if (n > 0) s.mean = sum / static_cast<double>(n);
    return s;
}

namespace {

std::vector<backtest::NavPoint> read_nav_csv(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::string line;
    std::getline(in, line);
    if (line != "date,nav") throw DataError(path.string() + ": expected header date,nav");
    std::vector<backtest::NavPoint> out;
    for (int n = 2; std::getline(in, line); ++n) {
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw DataError(fmt::format("{}:{}: malformed row", path.string(), n));
        try {
            out.push_back({Date::parse(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
        } catch (const std::exception& e) {
            throw DataError(fmt::format("{}:{}: {}", path.string(), n, e.what()));
        }
    }
    return out;
}

std::optional<double> metric(const json& m, const char* key) {
    const auto& v = m.at(key);
    return v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
}

}  // namespace

int cmd_report(const RunConfig& cfg) {
    const auto in_dir = cfg.output_dir / "backtest";
    std::vector<std::string> present;
    std::map<std::string, json> metrics;
    for (auto name : strategy_names) {
        const auto p = in_dir / std::string(name) / "metrics.json";
        if (!fs::exists(p)) continue;
        present.emplace_back(name);
        metrics[std::string(name)] = json::parse(read_file(p));
    }
    if (present.empty()) throw DataError("no backtest artifacts under " + in_dir.string() + "; run backtest first");

    std::vector<std::string> funds;
    for (const auto& [fund, m] : metrics[present.front()].items()) funds.push_back(fund);
    std::sort(funds.begin(), funds.end());

    // Per-fund rows, CR/Sharpe/MDD for each strategy.
    std::string t2 = "fund";
    for (const auto& s : present) t2 += "," + s + "_cr," + s + "_sharpe," + s + "_mdd";
    t2 += "\n";
    std::string t2_text = fmt::format("{:<12}", "Fund");
    for (const auto& s : present) t2_text += fmt::format(" | {:>12} {:>7} {:>8}", s + " CR", "Sharpe", "MDD");
    t2_text += "\n";
    for (const auto& f : funds) {
        t2 += f;
        t2_text += fmt::format("{:<12}", f);
        for (const auto& s : present) {
            const auto& m = metrics[s].at(f);
            t2 += "," + fmt_opt(metric(m, "cr")) + "," + fmt_opt(metric(m, "sharpe")) + "," + fmt_opt(metric(m, "mdd"));
            t2_text += fmt::format(" | {:>12} {:>7} {:>8}", pct(metric(m, "cr")), num2(metric(m, "sharpe")),
                                   pct(metric(m, "mdd")));
        }
        t2 += "\n";
        t2_text += "\n";
    }

    // Mean / Max / Min per strategy and metric.
    std::string t1 = "strategy,statistic,cr,sharpe,mdd\n";
    std::string t1_text = fmt::format("{:<14} {:<5} {:>9} {:>7} {:>9}\n", "Strategy", "Stat", "CR", "Sharpe", "MDD");
    for (const auto& s : present) {
        std::array<std::vector<std::optional<double>>, 3> cols;
        for (const auto& f : funds) {
            const auto& m = metrics[s].at(f);
            cols[0].push_back(metric(m, "cr"));
            cols[1].push_back(metric(m, "sharpe"));
            cols[2].push_back(metric(m, "mdd"));
        }
        const std::array<Summary, 3> sum{summarize(cols[0]), summarize(cols[1]), summarize(cols[2])};
        const std::array<std::pair<const char*, std::optional<double> Summary::*>, 3> stats{
            {{"Mean", &Summary::mean}, {"Max", &Summary::max}, {"Min", &Summary::min}}};
        for (const auto& [label, member] : stats) {
            t1 += fmt::format("{},{},{},{},{}\n", s, label, fmt_opt(sum[0].*member), fmt_opt(sum[1].*member),
                              fmt_opt(sum[2].*member));
            t1_text += fmt::format("{:<14} {:<5} {:>9} {:>7} {:>9}\n", s, label, pct(sum[0].*member),
                                   num2(sum[1].*member), pct(sum[2].*member));
        }
    }

    // Aggregate NAV across single-fund accounts, one column per strategy.
    std::map<Date, std::vector<std::optional<double>>> agg;
    for (std::size_t k = 0; k < present.size(); ++k) {
        std::vector<backtest::Account> accounts;
        for (const auto& f : funds) {
            backtest::Account a;
            a.fund_code = f;
            a.nav_series = read_nav_csv(in_dir / present[k] / (f + "_nav.csv"));
            accounts.push_back(std::move(a));
        }
        for (const auto& p : backtest::aggregate_nav(accounts)) {
            auto& row = agg[p.date];
            row.resize(present.size());
            row[k] = p.nav;
        }
    }
    std::string nav_csv = "date";
    for (const auto& s : present) nav_csv += "," + s;
    nav_csv += "\n";
    for (auto& [d, row] : agg) {
        row.resize(present.size());
        nav_csv += d.iso();
        for (const auto& v : row) nav_csv += "," + fmt_opt(v);
        nav_csv += "\n";
    }

    const auto out = cfg.output_dir / "report";
    write_file(out / "table1.csv", t1);
    write_file(out / "table2.csv", t2);
    write_file(out / "aggregate_nav.csv", nav_csv);
    const std::string text = "Summary of overall strategy performance\n\n" + t1_text + "\nPer-fund performance\n\n" + t2_text;
    write_file(out / "report.txt", text);
    std::cout << text;
    return 0;
}

}  // namespace reits::cli
