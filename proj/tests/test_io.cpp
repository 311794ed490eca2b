#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "carving/csv.hpp"
#include "carving/report_io.hpp"
#include "oracles.hpp"

using namespace carving;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/carving_test_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
    void write(const std::string& text) const {
        std::ofstream out(path);
        out << text;
    }
};

}  // namespace

TEST_CASE("csv round trip") {
    RngStream rng(1);
    const Matrix m = oracles::random_matrix(7, 3, rng);
    TempFile f("roundtrip.csv");
    write_csv_matrix(f.path, m);
    const Matrix back = read_csv_matrix(f.path);
    CHECK(back == m);  // exact shortest round-trip formatting
}

TEST_CASE("csv accepts a single header row") {
    TempFile f("header.csv");
    f.write("a,b,c\n1,2,3\n4,5,6\n");
    const Matrix m = read_csv_matrix(f.path);
    CHECK(m.rows() == 2);
    CHECK(m(1, 2) == 6.0);
}

TEST_CASE("csv errors name the offending cell") {
    TempFile f("bad.csv");
    f.write("1,2,3\n4,oops,6\n");
    try {
        read_csv_matrix(f.path);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 2") != std::string::npos);
        CHECK(msg.find("column 2") != std::string::npos);
    }

    TempFile g("ragged.csv");
    g.write("1,2,3\n4,5\n");
    try {
        read_csv_matrix(g.path);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("ragged row 2") != std::string::npos);
    }
}

TEST_CASE("csv vector orientation") {
    TempFile f("vec.csv");
    f.write("1\n2\n3\n");
    const Vector v = read_csv_vector(f.path);
    CHECK(v.size() == 3);
    CHECK(v[2] == 3.0);
    TempFile g("mat.csv");
    g.write("1,2\n3,4\n");
    CHECK_THROWS_AS(read_csv_vector(g.path), ValidationError);
}

TEST_CASE("double formatting") {
    CHECK(format_double(kInf) == "inf");
    CHECK(format_double(-kInf) == "-inf");
    CHECK(format_double(0.5) == "0.5");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("report serialization") {
    InferenceReport rep;
    rep.n = 10;
    rep.p = 3;
    rep.p_raw = Matrix::Ones(2, 3);
    rep.p_adjusted = Matrix::Ones(2, 3);
    rep.p_raw(0, 1) = 0.01;
    rep.p_adjusted(0, 1) = 0.02;
    rep.aggregated = Vector::Ones(3);
    rep.aggregated[1] = 0.02;
    rep.rejections = {1};
    SplitTrace t;
    t.support = {1};
    t.signs = Vector::Ones(1);
    t.lambda = 0.5;
    t.sigma_hat = 1.1;
    rep.splits = {t, t};
    rep.sigma_global = 1.1;

    MulticarveConfig cfg;
    cfg.B = 2;
    cfg.gamma_min = 0.3;

    const std::string json_text = report_to_json(rep, cfg);
    CHECK(json_text.find("\"carving-report/v1\"") != std::string::npos);
    CHECK(json_text.find("\"rejections\": [\n    2\n  ]") != std::string::npos);  // 1-based

    const std::string csv = report_to_csv(rep);
    CHECK(csv.rfind("variable,aggregated_p,reject,ci_lower,ci_upper,selected_count\n", 0) == 0);
    CHECK(csv.find("2,0.02,1,,,2") != std::string::npos);
}

TEST_CASE("metrics serialization") {
    MetricsTable table;
    MetricRow row;
    row.design = "toeplitz(0.6)";
    row.family = "gaussian";
    row.gamma_mode = "gamma_min=0.3";
    row.view = "selected";
    row.metric = "fwer";
    row.B = 25;
    row.fraction = 0.9;
    row.value = 0.04;
    row.mc_se = 0.0139;
    row.runs = 200;
    table.rows.push_back(row);
    const std::string csv = metrics_to_csv(table);
    CHECK(csv.rfind("design,family,B,f,gamma_mode,view,metric,value,mc_se,runs\n", 0) == 0);
    CHECK(csv.find("toeplitz(0.6),gaussian,25,0.9,gamma_min=0.3,selected,fwer,0.04,") !=
          std::string::npos);
    CHECK(metrics_to_json(table).find("\"fwer\"") != std::string::npos);
}

TEST_CASE("run archive round trip") {
    std::vector<std::vector<RunMethodResult>> records(2, std::vector<RunMethodResult>(2));
    records[0][0].aggregated = Vector::Ones(3) * 0.5;
    records[0][1].failed = true;
    records[0][1].fail_reason = "boom";
    records[1][0].aggregated = Vector::Ones(3);
    records[1][0].group_p = 0.07;
    records[1][1].aggregated = Vector::Zero(3);
    ConfidenceInterval ci;
    ci.lower = -kInf;
    ci.upper = 2.5;
    ci.selected_count = 4;
    records[1][1].cis = {ci, ci, ci};
    records[1][1].split_supports = {{0, 2}, {1}};

    const std::string text = records_to_jsonl(records);
    const auto back = records_from_jsonl(text);
    REQUIRE(back.size() == 2);
    CHECK(back[0][0].aggregated == records[0][0].aggregated);
    CHECK(back[0][1].failed);
    CHECK(back[1][0].group_p == 0.07);
    CHECK(back[1][1].cis[0].lower == -kInf);
    CHECK(back[1][1].cis[0].upper == 2.5);
    CHECK(back[1][1].split_supports == records[1][1].split_supports);
    // Replays serialize identically.
    CHECK(records_to_jsonl(back) == text);
}

TEST_CASE("chain dump writes samples and diagnostics") {
    Matrix samples = Matrix::Random(5, 2);
    ChainDiagnostics diag;
    diag.steps = 50;
    diag.samples = 5;
    diag.seed = 9;
    dump_chain("/tmp/carving_test_chain", samples, diag);
    const Matrix back = read_csv_matrix("/tmp/carving_test_chain.samples.csv");
    CHECK(back == samples);
    std::ifstream in("/tmp/carving_test_chain.diagnostics.json");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.find("\"steps\": 50") != std::string::npos);
    std::remove("/tmp/carving_test_chain.samples.csv");
    std::remove("/tmp/carving_test_chain.diagnostics.json");
}
