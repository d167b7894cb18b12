// Command-line front end over the C API: scenario runs, budget sweeps,
// one-shot market clearing, and the two auction demonstrations.
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bwmarket.h"
#include "json.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumeric = 2;

int exit_code_for(bwm_status status) {
    switch (status) {
        case BWM_OK: return kExitOk;
        case BWM_ERR_INVALID_ARGUMENT:
        case BWM_ERR_DOMAIN: return kExitConfig;
        default: return kExitNumeric;
    }
}

[[nodiscard]] int report_failure(bwm_status status, const std::string& context) {
    std::fprintf(stderr, "error (%s): %s: %s\n", bwm_status_name(status), context.c_str(),
                 bwm_last_error());
    return exit_code_for(status);
}

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) return false;
    out << content;
    return static_cast<bool>(out);
}

// Adopts a C string from the library and frees it.
std::string take_string(char* s) {
    std::string out = s ? s : "";
    bwm_string_free(s);
    return out;
}

std::string fnv_hash_hex(const std::string& text) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        hash ^= ch;
        hash *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

struct ScenarioHandle {
    bwm_scenario* ptr = nullptr;
    ~ScenarioHandle() { bwm_scenario_free(ptr); }
};

struct ReportHandle {
    bwm_report* ptr = nullptr;
    ~ReportHandle() { bwm_report_free(ptr); }
};

// Shared options for simulate/baseline/figure1.
struct ScenarioArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> epochs;
    std::optional<double> budget;
};

int load_scenario(const ScenarioArgs& args, ScenarioHandle& handle) {
    bwm_status status = BWM_OK;
    if (args.config_path.empty()) {
        status = bwm_scenario_default(&handle.ptr);
        if (status != BWM_OK) return report_failure(status, "default scenario");
    } else {
        const auto text = read_file(args.config_path);
        if (!text) {
            std::fprintf(stderr, "error: cannot read config file: %s\n", args.config_path.c_str());
            return kExitConfig;
        }
        status = bwm_scenario_parse(text->c_str(), &handle.ptr);
        if (status != BWM_OK) return report_failure(status, args.config_path);
    }
    if (args.seed) {
        status = bwm_scenario_override_u64(handle.ptr, "seed", *args.seed);
        if (status != BWM_OK) return report_failure(status, "--seed");
    }
    if (args.epochs) {
        status = bwm_scenario_override_u64(handle.ptr, "epochs", *args.epochs);
        if (status != BWM_OK) return report_failure(status, "--epochs");
    }
    if (args.budget) {
        status = bwm_scenario_override_f64(handle.ptr, "initial_budget", *args.budget);
        if (status != BWM_OK) return report_failure(status, "--budget");
    }
    return kExitOk;
}

int run_simulate(const ScenarioArgs& args, bool baseline, const std::string& out_path,
                 const std::string& summary_path, const std::string& format) {
    ScenarioHandle scenario;
    if (int rc = load_scenario(args, scenario); rc != kExitOk) return rc;

    ReportHandle report;
    bwm_status status = bwm_run_simulation(scenario.ptr, baseline ? 1 : 0, &report.ptr);
    if (status != BWM_OK) return report_failure(status, "simulation");

    char* text = nullptr;
    status = format == "json" ? bwm_report_summary_json(report.ptr, &text)
                              : bwm_report_csv(report.ptr, &text);
    if (status != BWM_OK) return report_failure(status, "report");
    const std::string body = take_string(text);

    if (out_path.empty()) {
        std::fputs(body.c_str(), stdout);
    } else if (!write_file(out_path, body)) {
        std::fprintf(stderr, "error: cannot write: %s\n", out_path.c_str());
        return kExitConfig;
    }

    if (!summary_path.empty()) {
        status = bwm_report_summary_json(report.ptr, &text);
        if (status != BWM_OK) return report_failure(status, "summary");
        if (!write_file(summary_path, take_string(text))) {
            std::fprintf(stderr, "error: cannot write: %s\n", summary_path.c_str());
            return kExitConfig;
        }
    }

    double total = 0.0;
    bwm_report_cumulative_data(report.ptr, &total);
    std::fprintf(stderr, "%s run complete: total data %.6g\n",
                 baseline ? "baseline" : "market", total);
    return kExitOk;
}

std::string medians_path_for(const std::string& rows_path) {
    std::filesystem::path p(rows_path);
    const std::string ext = p.extension().string();
    p.replace_extension();
    p += "_medians";
    p += ext.empty() ? ".csv" : ext;
    return p.string();
}

int run_figure1(const ScenarioArgs& args, std::vector<double> budgets,
                std::vector<std::uint64_t> epoch_counts, std::vector<std::uint64_t> seeds,
                unsigned n_seeds, int jobs, const std::string& out_path) {
    ScenarioArgs base_args = args;
    base_args.epochs.reset();
    base_args.budget.reset();
    ScenarioHandle scenario;
    if (int rc = load_scenario(base_args, scenario); rc != kExitOk) return rc;

    if (seeds.empty()) {
        // default seed list: base, base+1, ...
        std::uint64_t base_seed = args.seed.value_or(1);
        for (unsigned i = 0; i < n_seeds; ++i) seeds.push_back(base_seed + i);
    }

    char* rows = nullptr;
    char* medians = nullptr;
    bwm_status status = bwm_figure1(scenario.ptr, budgets.data(), budgets.size(),
                                    epoch_counts.data(), epoch_counts.size(),
                                    seeds.data(), seeds.size(), jobs, &rows, &medians);
    if (status != BWM_OK) return report_failure(status, "figure1 sweep");

    const std::string rows_csv = take_string(rows);
    const std::string medians_csv = take_string(medians);
    if (out_path.empty()) {
        std::fputs(rows_csv.c_str(), stdout);
        std::fputs(medians_csv.c_str(), stdout);
        return kExitOk;
    }
    if (!write_file(out_path, rows_csv)) {
        std::fprintf(stderr, "error: cannot write: %s\n", out_path.c_str());
        return kExitConfig;
    }
    const std::string med_path = medians_path_for(out_path);
    if (!write_file(med_path, medians_csv)) {
        std::fprintf(stderr, "error: cannot write: %s\n", med_path.c_str());
        return kExitConfig;
    }
    std::fprintf(stderr, "figure1 sweep written: %s, %s\n", out_path.c_str(), med_path.c_str());
    return kExitOk;
}

int run_market(const std::vector<double>& bids, const std::vector<double>& conservations,
               const std::string& out_path, const std::string& format) {
    double price = 0.0;
    int held = 0;
    std::vector<double> purchases(bids.size(), 0.0);
    std::vector<double> supplies(conservations.size(), 0.0);
    const bwm_status status =
        bwm_market_clear(bids.data(), bids.size(), conservations.data(), conservations.size(),
                         &price, &held, purchases.data(), supplies.data());
    if (status != BWM_OK) return report_failure(status, "market clearing");

    nlohmann::json manifest;
    manifest["bids"] = bids;
    manifest["conservations"] = conservations;
    const std::string hash = fnv_hash_hex(manifest.dump());

    std::string body;
    if (format == "csv") {
        body += "# seed=0\n# config_hash=" + hash + "\n# version=" + bwm_version() + "\n";
        body += "section,index,input,result\n";
        body += "price,0,," + nlohmann::json(price).dump() + "\n";
        for (std::size_t i = 0; i < bids.size(); ++i) {
            body += "buyer," + std::to_string(i) + ',' + nlohmann::json(bids[i]).dump() + ',' +
                    nlohmann::json(purchases[i]).dump() + "\n";
        }
        for (std::size_t j = 0; j < conservations.size(); ++j) {
            body += "seller," + std::to_string(j) + ',' +
                    nlohmann::json(conservations[j]).dump() + ',' +
                    nlohmann::json(supplies[j]).dump() + "\n";
        }
    } else {
        nlohmann::json doc;
        doc["version"] = bwm_version();
        doc["seed"] = 0;
        doc["config_hash"] = hash;
        doc["market_held"] = held != 0;
        doc["price"] = price;
        doc["purchases"] = purchases;
        doc["supplies"] = supplies;
        double demand = 0.0, supply = 0.0;
        for (double v : purchases) demand += v;
        for (double v : supplies) supply += v;
        doc["total_demand"] = demand;
        doc["total_supply"] = supply;
        body = doc.dump(2) + "\n";
    }

    if (out_path.empty()) {
        std::fputs(body.c_str(), stdout);
    } else if (!write_file(out_path, body)) {
        std::fprintf(stderr, "error: cannot write: %s\n", out_path.c_str());
        return kExitConfig;
    }
    return kExitOk;
}

int run_penalty(const std::string& instance_path, const std::string& out_path,
                const std::string& trace_path) {
    const auto text = read_file(instance_path);
    if (!text) {
        std::fprintf(stderr, "error: cannot read instance file: %s\n", instance_path.c_str());
        return kExitConfig;
    }
    char* result = nullptr;
    char* trace = nullptr;
    const bwm_status status = bwm_penalty_auction(
        text->c_str(), &result, trace_path.empty() ? nullptr : &trace);
    if (status != BWM_OK) return report_failure(status, instance_path);

    const std::string result_json = take_string(result);
    if (out_path.empty()) {
        std::fputs(result_json.c_str(), stdout);
    } else if (!write_file(out_path, result_json)) {
        std::fprintf(stderr, "error: cannot write: %s\n", out_path.c_str());
        return kExitConfig;
    }
    if (!trace_path.empty()) {
        if (!write_file(trace_path, take_string(trace))) {
            std::fprintf(stderr, "error: cannot write: %s\n", trace_path.c_str());
            return kExitConfig;
        }
    }
    return kExitOk;
}

int run_flawed(const std::string& instance_path, int inits, std::uint64_t seed,
               const std::string& out_path, const std::string& trace_dir) {
    const auto text = read_file(instance_path);
    if (!text) {
        std::fprintf(stderr, "error: cannot read instance file: %s\n", instance_path.c_str());
        return kExitConfig;
    }
    char* report = nullptr;
    bwm_status status = bwm_flawed_demo(text->c_str(), inits, seed, &report);
    if (status != BWM_OK) return report_failure(status, instance_path);
    const std::string report_json = take_string(report);

    if (out_path.empty()) {
        std::fputs(report_json.c_str(), stdout);
    } else if (!write_file(out_path, report_json)) {
        std::fprintf(stderr, "error: cannot write: %s\n", out_path.c_str());
        return kExitConfig;
    }

    if (!trace_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(trace_dir, ec);
        const auto doc = nlohmann::json::parse(report_json);
        const std::size_t n_samples = doc.at("samples").size();
        for (std::size_t i = 0; i < n_samples; ++i) {
            char* trace = nullptr;
            status = bwm_flawed_trace(text->c_str(), inits, seed, i, &trace);
            if (status != BWM_OK) {
                // a sample that broke down mid-run has no complete trajectory
                std::fprintf(stderr, "note: no trace for sample %zu: %s\n", i, bwm_last_error());
                continue;
            }
            const std::string path =
                (std::filesystem::path(trace_dir) / ("trace_" + std::to_string(i) + ".csv"))
                    .string();
            if (!write_file(path, take_string(trace))) {
                std::fprintf(stderr, "error: cannot write: %s\n", path.c_str());
                return kExitConfig;
            }
        }
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bwmarket: market-based short-term bandwidth allocation toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(bwm_version()));

    // simulate / baseline
    ScenarioArgs sim_args;
    std::string sim_out, sim_summary, sim_format = "csv";
    auto add_scenario_flags = [&](CLI::App* cmd) {
        cmd->add_option("--config", sim_args.config_path, "Scenario config JSON path");
        cmd->add_option("--seed", sim_args.seed, "Override the RNG seed");
        cmd->add_option("--epochs", sim_args.epochs, "Override the epoch count");
        cmd->add_option("--budget", sim_args.budget, "Override the initial budget per UE");
        cmd->add_option("--out", sim_out, "Output path (stdout when omitted)");
        cmd->add_option("--summary", sim_summary, "Also write a JSON summary here");
        cmd->add_option("--format", sim_format, "Output format: csv (per-epoch) or json (summary)")
            ->check(CLI::IsMember({"csv", "json"}));
    };
    CLI::App* simulate = app.add_subcommand("simulate", "Run the market simulation");
    add_scenario_flags(simulate);
    CLI::App* baseline = app.add_subcommand("baseline", "Run the fixed-allocation baseline");
    add_scenario_flags(baseline);

    // figure1
    ScenarioArgs fig_args;
    std::vector<double> fig_budgets{100, 500, 1000, 5000};
    std::vector<std::uint64_t> fig_epochs{100, 1000};
    std::vector<std::uint64_t> fig_seeds;
    unsigned fig_n_seeds = 20;
    int fig_jobs = 1;
    std::string fig_out;
    CLI::App* figure1 = app.add_subcommand(
        "figure1", "Budget sweep with paired baseline runs (plot-ready CSV)");
    figure1->add_option("--config", fig_args.config_path, "Scenario config JSON path");
    figure1->add_option("--seed", fig_args.seed, "Base seed for the default seed list");
    figure1->add_option("--budgets", fig_budgets, "Budget sweep values")->delimiter(',');
    figure1->add_option("--epochs", fig_epochs, "Epoch-count sweep values")->delimiter(',');
    figure1->add_option("--seeds", fig_seeds, "Explicit seed list")->delimiter(',');
    figure1->add_option("--n-seeds", fig_n_seeds, "Number of derived seeds when --seeds is absent");
    figure1->add_option("--jobs", fig_jobs, "Parallel sweep cells");
    figure1->add_option("--out", fig_out, "Rows CSV path; medians land next to it");

    // market
    std::vector<double> mkt_bids, mkt_cons;
    std::string mkt_out, mkt_format = "json";
    CLI::App* market = app.add_subcommand("market", "One-shot clearing from explicit bids");
    market->add_option("--bids", mkt_bids, "Buyer bids (wealth*need each)")
        ->delimiter(',')->required();
    market->add_option("--conservations", mkt_cons, "Seller conservation values")
        ->delimiter(',')->required();
    market->add_option("--out", mkt_out, "Output path (stdout when omitted)");
    market->add_option("--format", mkt_format, "Output format")
        ->check(CLI::IsMember({"csv", "json"}));

    // penalty-auction
    std::string pen_instance, pen_out, pen_trace;
    CLI::App* penalty = app.add_subcommand(
        "penalty-auction", "Proportional share with penalty: solve to the welfare optimum");
    penalty->add_option("--instance", pen_instance, "Instance JSON path")->required();
    penalty->add_option("--out", pen_out, "Result JSON path (stdout when omitted)");
    penalty->add_option("--trace", pen_trace, "Iteration trace CSV path");

    // flawed-demo
    std::string flw_instance, flw_out, flw_trace_dir;
    int flw_inits = 0;
    std::uint64_t flw_seed = 1;
    CLI::App* flawed = app.add_subcommand(
        "flawed-demo", "Transcribed iterative auction: initialization-dependence report");
    flawed->add_option("--instance", flw_instance, "Instance JSON path")->required();
    flawed->add_option("--inits", flw_inits, "Generate this many random initial allocations");
    flawed->add_option("--seed", flw_seed, "Seed for generated initial allocations");
    flawed->add_option("--out", flw_out, "Report JSON path (stdout when omitted)");
    flawed->add_option("--dump-traces", flw_trace_dir, "Write per-sample trajectory CSVs here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    if (simulate->parsed()) return run_simulate(sim_args, false, sim_out, sim_summary, sim_format);
    if (baseline->parsed()) return run_simulate(sim_args, true, sim_out, sim_summary, sim_format);
    if (figure1->parsed()) {
        return run_figure1(fig_args, fig_budgets, fig_epochs, fig_seeds, fig_n_seeds, fig_jobs,
                           fig_out);
    }
    if (market->parsed()) return run_market(mkt_bids, mkt_cons, mkt_out, mkt_format);
    if (penalty->parsed()) return run_penalty(pen_instance, pen_out, pen_trace);
    if (flawed->parsed()) return run_flawed(flw_instance, flw_inits, flw_seed, flw_out, flw_trace_dir);
    return kExitConfig;
}
