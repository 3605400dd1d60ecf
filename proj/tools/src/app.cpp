#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "reits/cli/commands.hpp"

namespace reits::cli {

namespace {

std::vector<std::string> split_codes(const std::string& s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const auto comma = s.find(',', pos);
        const auto item = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"Multi-agent REITs research and backtest pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string mode, funds, period, out, log_level = "warn";
    int jobs = 0;
    app.add_option("--config", config_path, "Run configuration (JSON)")->required();
    app.add_option("--mode", mode, "Gateway mode")->check(CLI::IsMember({"live", "replay", "record", "stub"}));
    app.add_option("--jobs", jobs, "Parallel funds")->check(CLI::PositiveNumber);
    app.add_option("--funds", funds, "Comma-separated fund codes");
    app.add_option("--period", period, "START:END (YYYY-MM-DD)");
    app.add_option("--out", out, "Output directory");
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off");

    using Cmd = int (*)(const RunConfig&);
    const std::vector<std::tuple<const char*, const char*, Cmd>> commands = {
        {"ingest", "Validate inputs and write an ingest summary", cmd_ingest},
        {"indicators", "Technical indicator snapshots per fund-day", cmd_indicators},
        {"label", "Threshold labels per fund-day", cmd_label},
        {"quadrant", "Macro quadrant per market day", cmd_quadrant},
        {"reward", "Scored SFT and GSPO training records", cmd_reward},
        {"backtest", "Agent strategies A and B plus buy-and-hold", cmd_backtest},
        {"report", "Summary and per-fund tables from backtest artifacts", cmd_report},
    };
    Cmd selected = nullptr;
    for (const auto& [name, help, fn] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->callback([&selected, f = fn] { selected = f; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ErrorCategory::config);
    }

    spdlog::set_level(spdlog::level::from_str(log_level));
    try {
        auto cfg = load_config(config_path);
        Overrides o;
        if (!mode.empty()) o.mode = llm::parse_mode(mode);
        if (jobs > 0) o.jobs = jobs;
        o.funds = split_codes(funds);
        if (!period.empty()) o.period = parse_period(period);
        if (!out.empty()) o.out = std::filesystem::path(out);
        apply(cfg, o);
        return selected(cfg);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.category());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return static_cast<int>(ErrorCategory::invariant);
    }
}

}  // namespace reits::cli
