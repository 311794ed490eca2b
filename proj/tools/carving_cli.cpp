// Command-line front end; talks to the engine through the C API only.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "carving/carving.h"

namespace {

using nlohmann::json;

int status_to_exit(carve_status st) {
    switch (st) {
        case CARVE_OK: return 0;
        case CARVE_ERR_VALIDATION: return 2;
        default: return 3;
    }
}

int die(carve_status st) {
    std::cerr << "error: " << carve_last_error() << "\n";
    return status_to_exit(st);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) {
        std::cerr << "error: cannot write " << path << "\n";
        std::exit(2);
    }
    out << text;
}

struct CommonFlags {
    std::string x_path, y_path;
    std::string family = "gaussian";
    long B = 1;
    double fraction = 0.9;
    std::optional<double> gamma;
    std::optional<double> gamma_min;
    std::string view = "selected";
    double alpha = 0.05;
    std::string sigma = "global-cv";
    std::string selector = "cv_1se";
    std::uint64_t seed = 1;
    int threads = 1;
    long chain_samples = 0;
    bool no_early_abort = false;
    std::string out = "carving_report";

    void add(CLI::App* cmd, bool needs_data = true) {
        if (needs_data) {
            cmd->add_option("--x", x_path, "design matrix CSV (rows = observations)")->required();
            cmd->add_option("--y", y_path, "response CSV (one column)")->required();
            cmd->add_option("--family", family, "gaussian | binomial")
                ->check(CLI::IsMember({"gaussian", "binomial"}));
        }
        cmd->add_option("--B", B, "number of random splits");
        cmd->add_option("--frac", fraction, "fraction of data used for selection");
        auto* g = cmd->add_option("--gamma", gamma, "fixed aggregation quantile");
        cmd->add_option("--gamma-min", gamma_min, "optimized aggregation lower quantile")
            ->excludes(g);
        cmd->add_option("--view", view, "selected | saturated")
            ->check(CLI::IsMember({"selected", "saturated"}));
        cmd->add_option("--alpha", alpha, "rejection level");
        cmd->add_option("--sigma", sigma, "known:<v> | global-cv | per-split");
        cmd->add_option("--selector", selector, "cv_1se | cv_min | fixed:<k> | lambda:<l>");
        cmd->add_option("--seed", seed, "master seed");
        cmd->add_option("--threads", threads, "worker threads");
        cmd->add_option("--chain-samples", chain_samples, "override MCMC chain length");
        cmd->add_flag("--no-early-abort", no_early_abort, "always run chains to full length");
        cmd->add_option("--out", out, "output path prefix");
    }

    json to_json() const {
        json cfg;
        cfg["B"] = B;
        cfg["fraction"] = fraction;
        if (gamma) {
            cfg["gamma"] = *gamma;
        } else {
            cfg["gamma_min"] = gamma_min.value_or(0.05);
        }
        cfg["alpha"] = alpha;
        cfg["view"] = view;
        if (sigma == "global-cv" || sigma == "per-split") {
            cfg["sigma"] = sigma;
        } else if (sigma.rfind("known:", 0) == 0) {
            cfg["sigma"] = std::stod(sigma.substr(6));
        } else {
            cfg["sigma"] = std::stod(sigma);  // bare number = known sigma
        }
        cfg["selector"] = selector;
        cfg["seed"] = seed;
        cfg["threads"] = threads;
        cfg["chain_samples"] = chain_samples;
        cfg["early_abort"] = !no_early_abort;
        return cfg;
    }
};

struct DatasetHandle {
    carve_dataset* ds = nullptr;
    ~DatasetHandle() { carve_dataset_free(ds); }
};

struct ReportHandle {
    carve_report* rep = nullptr;
    ~ReportHandle() { carve_report_free(rep); }
};

struct MetricsHandle {
    carve_metrics* m = nullptr;
    ~MetricsHandle() { carve_metrics_free(m); }
};

int write_report(const ReportHandle& rep, const std::string& out, bool quiet = false) {
    write_file(out + ".json", carve_report_json(rep.rep));
    write_file(out + ".csv", carve_report_csv(rep.rep));
    if (!quiet) {
        // Short console summary: rejected variables from the JSON.
        const json j = json::parse(std::string(carve_report_json(rep.rep)));
        std::cout << "wrote " << out << ".json and " << out << ".csv\n";
        std::cout << "rejections:";
        for (const auto& v : j["rejections"]) std::cout << ' ' << v.get<long>();
        if (j["rejections"].empty()) std::cout << " (none)";
        std::cout << "\n";
    }
    return 0;
}

std::vector<std::vector<long>> read_group_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("--groups", "cannot open " + path);
    std::vector<std::vector<long>> groups;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<long> g;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            const auto dash = tok.find('-');
            if (dash == std::string::npos) {
                g.push_back(std::stol(tok));
            } else {
                const long a = std::stol(tok.substr(0, dash));
                const long b = std::stol(tok.substr(dash + 1));
                for (long v = a; v <= b; ++v) g.push_back(v);
            }
        }
        if (!g.empty()) groups.push_back(std::move(g));
    }
    if (groups.empty()) throw CLI::ValidationError("--groups", "no groups in " + path);
    return groups;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"carving: post-selection inference by data carving and multicarving"};
    app.require_subcommand(1);

    CommonFlags run_flags, ci_flags, group_flags;
    std::string groups_file, group_correction = "none";

    auto* run_cmd = app.add_subcommand("run", "multicarving tests from CSV data");
    run_flags.add(run_cmd);

    auto* ci_cmd = app.add_subcommand("ci", "multicarving confidence intervals");
    ci_flags.sigma = "per-split";
    ci_flags.view = "saturated";
    ci_flags.add(ci_cmd);

    auto* group_cmd = app.add_subcommand("group", "carving group tests");
    group_flags.add(group_cmd);
    group_cmd->add_option("--groups", groups_file, "group spec file (1-based indices/ranges)")
        ->required();
    group_cmd->add_option("--group-correction", group_correction,
                          "none | p-over-g | support-ratio")
        ->check(CLI::IsMember({"none", "p-over-g", "support-ratio"}));

    std::string sim_config_path, sim_out = "carving_sim", replay_path;
    int sim_threads = 0;
    auto* sim_cmd = app.add_subcommand("simulate", "run a simulation experiment");
    sim_cmd->add_option("config", sim_config_path, "experiment config file")->required();
    sim_cmd->add_option("--out", sim_out, "output path prefix");
    sim_cmd->add_option("--threads", sim_threads, "worker threads");
    sim_cmd->add_option("--replay", replay_path, "recompute metrics from a runs archive");

    bool selftest_verbose = false;
    auto* self_cmd = app.add_subcommand("selftest", "run built-in oracle checks");
    self_cmd->add_flag("--verbose", selftest_verbose, "print one line per check");

    CLI11_PARSE(app, argc, argv);

    if (run_cmd->parsed() || ci_cmd->parsed() || group_cmd->parsed()) {
        const bool is_ci = ci_cmd->parsed();
        const bool is_group = group_cmd->parsed();
        CommonFlags& fl = is_ci ? ci_flags : (is_group ? group_flags : run_flags);

        DatasetHandle ds;
        carve_status st =
            carve_dataset_from_csv(fl.x_path.c_str(), fl.y_path.c_str(), fl.family.c_str(), &ds.ds);
        if (st != CARVE_OK) return die(st);

        if (is_group) {
            const auto groups = read_group_file(groups_file);
            std::ostringstream csv;
            csv << "group,aggregated_p,reject\n";
            for (std::size_t gi = 0; gi < groups.size(); ++gi) {
                json cfg = fl.to_json();
                cfg["group"] = groups[gi];
                cfg["group_correction"] = group_correction;
                ReportHandle rep;
                st = carve_run(ds.ds, cfg.dump().c_str(), &rep.rep);
                if (st != CARVE_OK) return die(st);
                const json j = json::parse(std::string(carve_report_json(rep.rep)));
                const double p = j["group"]["aggregated"].get<double>();
                csv << (gi + 1) << ',' << p << ',' << (p <= fl.alpha ? 1 : 0) << '\n';
                write_file(fl.out + ".group" + std::to_string(gi + 1) + ".json",
                           carve_report_json(rep.rep));
                std::cout << "group " << (gi + 1) << ": aggregated p = " << p << "\n";
            }
            write_file(fl.out + ".csv", csv.str());
            return 0;
        }

        ReportHandle rep;
        const std::string cfg = fl.to_json().dump();
        st = is_ci ? carve_confidence_intervals(ds.ds, cfg.c_str(), &rep.rep)
                   : carve_run(ds.ds, cfg.c_str(), &rep.rep);
        if (st != CARVE_OK) return die(st);
        return write_report(rep, fl.out);
    }

    if (sim_cmd->parsed()) {
        std::string config_text, replay_text;
        try {
            config_text = read_file(sim_config_path);
            if (!replay_path.empty()) replay_text = read_file(replay_path);
        } catch (const CLI::Error& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 2;
        }
        MetricsHandle metrics;
        const carve_status st =
            carve_simulate(config_text.c_str(), sim_threads,
                           replay_path.empty() ? nullptr : replay_text.c_str(), &metrics.m);
        if (st != CARVE_OK) return die(st);
        write_file(sim_out + ".metrics.csv", carve_metrics_csv(metrics.m));
        write_file(sim_out + ".metrics.json", carve_metrics_json(metrics.m));
        if (replay_path.empty()) {
            write_file(sim_out + ".runs.jsonl", carve_metrics_runs_jsonl(metrics.m));
        }
        std::cout << carve_metrics_csv(metrics.m);
        return 0;
    }

    if (self_cmd->parsed()) {
        const carve_status st = carve_selftest(selftest_verbose ? 1 : 0);
        if (st != CARVE_OK) return die(st);
        std::cout << "selftest ok\n";
        return 0;
    }
    return 0;
}
