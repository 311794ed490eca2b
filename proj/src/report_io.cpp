#include "carving/report_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "carving/csv.hpp"

namespace carving {

namespace {

using nlohmann::json;

json double_or_string(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

double json_to_double(const json& j) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
        return std::stod(s);
    }
    return j.get<double>();
}

const char* view_name(View v) { return v == View::selected ? "selected" : "saturated"; }

const char* selector_name(SelectorRule s) {
    switch (s) {
        case SelectorRule::cv_min: return "cv_min";
        case SelectorRule::cv_1se: return "cv_1se";
        case SelectorRule::fixed_size: return "fixed_size";
        case SelectorRule::fixed_lambda: return "fixed_lambda";
    }
    return "?";
}

const char* sigma_mode_name(SigmaMode m) {
    switch (m) {
        case SigmaMode::known: return "known";
        case SigmaMode::global_cv: return "global_cv";
        case SigmaMode::per_split: return "per_split";
    }
    return "?";
}

json vector_to_json(const Vector& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json one_based(const IndexList& idx) {
    json arr = json::array();
    for (const auto j : idx) arr.push_back(j + 1);
    return arr;
}

}  // namespace

std::string report_to_json(const InferenceReport& rep, const MulticarveConfig& cfg) {
    json j;
    j["schema"] = "carving-report/v1";
    j["n"] = rep.n;
    j["p"] = rep.p;

    json c;
    c["B"] = cfg.B;
    c["fraction"] = cfg.fraction;
    if (cfg.gamma) c["gamma"] = *cfg.gamma;
    if (cfg.gamma_min) c["gamma_min"] = *cfg.gamma_min;
    c["alpha"] = cfg.alpha;
    c["view"] = view_name(cfg.view);
    c["family"] = family_name(cfg.family);
    c["sigma_mode"] = sigma_mode_name(cfg.sigma_mode);
    if (cfg.sigma_mode == SigmaMode::known) c["sigma"] = cfg.sigma_known;
    c["selector"] = selector_name(cfg.selector);
    if (cfg.selector == SelectorRule::fixed_size) c["target_size"] = cfg.target_size;
    if (cfg.selector == SelectorRule::fixed_lambda) c["lambda"] = cfg.lambda;
    c["seed"] = cfg.master_seed;
    c["standardize"] = cfg.standardize;
    c["early_abort"] = cfg.early_abort;
    if (cfg.group) c["group"] = one_based(*cfg.group);
    j["config"] = std::move(c);

    j["sigma_global"] = rep.sigma_global;
    j["splits"] = json::array();
    for (const auto& t : rep.splits) {
        json s;
        s["seed"] = t.split_seed;
        s["n1"] = t.n1;
        s["lambda"] = t.lambda;
        s["sigma_hat"] = t.sigma_hat;
        s["support"] = one_based(t.support);
        s["signs"] = vector_to_json(t.signs);
        s["skipped"] = t.skipped;
        if (t.skipped) s["skip_reason"] = t.skip_reason;
        s["chain_samples"] = t.chain_samples;
        s["chains_aborted"] = t.chains_aborted;
        j["splits"].push_back(std::move(s));
    }
    j["p_raw"] = matrix_to_json(rep.p_raw);
    j["p_adjusted"] = matrix_to_json(rep.p_adjusted);
    j["aggregated"] = vector_to_json(rep.aggregated);
    j["rejections"] = one_based(rep.rejections);
    if (rep.group_p) {
        json g;
        g["aggregated"] = *rep.group_p;
        g["p_raw"] = vector_to_json(rep.group_p_raw);
        if (cfg.group) g["indices"] = one_based(*cfg.group);
        j["group"] = std::move(g);
    }
    if (!rep.cis.empty()) {
        json arr = json::array();
        for (std::size_t v = 0; v < rep.cis.size(); ++v) {
            const auto& ci = rep.cis[v];
            json e;
            e["variable"] = v + 1;
            e["lower"] = double_or_string(ci.lower);
            e["upper"] = double_or_string(ci.upper);
            e["selected_count"] = ci.selected_count;
            e["flagged"] = ci.flagged;
            arr.push_back(std::move(e));
        }
        j["ci"] = std::move(arr);
    }
    j["warnings"] = rep.warnings;
    return j.dump(2) + "\n";
}

std::string report_to_csv(const InferenceReport& rep) {
    std::ostringstream os;
    os << "variable,aggregated_p,reject,ci_lower,ci_upper,selected_count\n";
    std::vector<long> counts(static_cast<std::size_t>(rep.p), 0);
    for (const auto& t : rep.splits) {
        for (const auto j : t.support) ++counts[static_cast<std::size_t>(j)];
    }
    for (Eigen::Index j = 0; j < rep.p; ++j) {
        const double agg = rep.aggregated.size() > j ? rep.aggregated[j] : 1.0;
        const bool reject =
            std::find(rep.rejections.begin(), rep.rejections.end(), j) != rep.rejections.end();
        os << (j + 1) << ',' << format_double(agg) << ',' << (reject ? 1 : 0) << ',';
        if (!rep.cis.empty()) {
            const auto& ci = rep.cis[static_cast<std::size_t>(j)];
            os << format_double(ci.lower) << ',' << format_double(ci.upper) << ','
               << ci.selected_count;
        } else {
            os << ",," << counts[static_cast<std::size_t>(j)];
        }
        os << '\n';
    }
    return os.str();
}

std::string metrics_to_csv(const MetricsTable& table) {
    std::ostringstream os;
    os << "design,family,B,f,gamma_mode,view,metric,value,mc_se,runs\n";
    for (const auto& r : table.rows) {
        os << r.design << ',' << r.family << ',' << r.B << ',' << format_double(r.fraction) << ','
           << r.gamma_mode << ',' << r.view << ',' << r.metric << ',' << format_double(r.value)
           << ',' << format_double(r.mc_se) << ',' << r.runs << '\n';
    }
    return os.str();
}

std::string metrics_to_json(const MetricsTable& table) {
    json arr = json::array();
    for (const auto& r : table.rows) {
        json e;
        e["design"] = r.design;
        e["family"] = r.family;
        e["B"] = r.B;
        e["f"] = r.fraction;
        e["gamma_mode"] = r.gamma_mode;
        e["view"] = r.view;
        e["metric"] = r.metric;
        e["value"] = double_or_string(r.value);
        e["mc_se"] = r.mc_se;
        e["runs"] = r.runs;
        arr.push_back(std::move(e));
    }
    return arr.dump(2) + "\n";
}

std::string records_to_jsonl(const std::vector<std::vector<RunMethodResult>>& records) {
    std::ostringstream os;
    os << R"({"schema":"carving-runs/v1","runs":)" << records.size() << ",\"methods\":"
       << (records.empty() ? 0 : records[0].size()) << "}\n";
    for (std::size_t r = 0; r < records.size(); ++r) {
        for (std::size_t m = 0; m < records[r].size(); ++m) {
            const auto& rec = records[r][m];
            json e;
            e["run"] = r;
            e["method"] = m;
            e["failed"] = rec.failed;
            if (rec.failed) {
                e["reason"] = rec.fail_reason;
            } else {
                e["aggregated"] = vector_to_json(rec.aggregated);
                if (rec.group_p) e["group_p"] = *rec.group_p;
                if (!rec.cis.empty()) {
                    json arr = json::array();
                    for (const auto& ci : rec.cis) {
                        arr.push_back(json::array({double_or_string(ci.lower),
                                                   double_or_string(ci.upper), ci.selected_count,
                                                   ci.flagged}));
                    }
                    e["cis"] = std::move(arr);
                    json sup = json::array();
                    for (const auto& s : rec.split_supports) sup.push_back(one_based(s));
                    e["split_supports"] = std::move(sup);
                }
            }
            os << e.dump() << '\n';
        }
    }
    return os.str();
}

std::vector<std::vector<RunMethodResult>> records_from_jsonl(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("runs archive: empty file");
    json header = json::parse(line);
    if (header.value("schema", "") != "carving-runs/v1") {
        throw ValidationError("runs archive: unknown schema");
    }
    const auto runs = header.at("runs").get<std::size_t>();
    const auto methods = header.at("methods").get<std::size_t>();
    std::vector<std::vector<RunMethodResult>> records(runs,
                                                      std::vector<RunMethodResult>(methods));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json e = json::parse(line);
        const auto r = e.at("run").get<std::size_t>();
        const auto m = e.at("method").get<std::size_t>();
        if (r >= runs || m >= methods) throw ValidationError("runs archive: index out of range");
        RunMethodResult& rec = records[r][m];
        rec.failed = e.value("failed", false);
        if (rec.failed) {
            rec.fail_reason = e.value("reason", "");
            continue;
        }
        const auto& agg = e.at("aggregated");
        rec.aggregated.resize(static_cast<Eigen::Index>(agg.size()));
        for (std::size_t i = 0; i < agg.size(); ++i) {
            rec.aggregated[static_cast<Eigen::Index>(i)] = json_to_double(agg[i]);
        }
        if (e.contains("group_p")) rec.group_p = json_to_double(e["group_p"]);
        if (e.contains("cis")) {
            for (const auto& c : e["cis"]) {
                ConfidenceInterval ci;
                ci.lower = json_to_double(c[0]);
                ci.upper = json_to_double(c[1]);
                ci.selected_count = c[2].get<long>();
                ci.flagged = c[3].get<bool>();
                rec.cis.push_back(ci);
            }
            for (const auto& s : e["split_supports"]) {
                IndexList sup;
                for (const auto& v : s) sup.push_back(v.get<Eigen::Index>() - 1);
                rec.split_supports.push_back(std::move(sup));
            }
        }
    }
    return records;
}

void dump_chain(const std::string& path_prefix, const Matrix& samples,
                const ChainDiagnostics& diag) {
    write_csv_matrix(path_prefix + ".samples.csv", samples);
    json j;
    j["steps"] = diag.steps;
    j["stuck_steps"] = diag.stuck_steps;
    j["samples"] = diag.samples;
    j["aborted"] = diag.aborted;
    j["seed"] = diag.seed;
    std::ofstream out(path_prefix + ".diagnostics.json");
    out << j.dump(2) << '\n';
}

}  // namespace carving
