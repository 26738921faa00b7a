#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "amp/experiments.hpp"

using namespace amp;
using nlohmann::json;

namespace {
std::string col(const ExperimentReport& r, const std::vector<std::string>& row, const std::string& name) {
    for (std::size_t i = 0; i < r.columns.size(); ++i)
        if (r.columns[i] == name) return row[i];
    FAIL("missing column " << name);
    return {};
}
std::vector<std::vector<std::string>> panel(const ExperimentReport& r, const std::string& name) {
    std::vector<std::vector<std::string>> out;
    for (const auto& row : r.rows)
        if (col(r, row, "panel") == name) out.push_back(row);
    return out;
}
double num(const std::string& s) { return std::stod(s); }
}  // namespace

TEST_CASE("default configurations") {
    for (const std::string& name : experiment_names()) {
        const json c = default_config(name);
        CHECK(c.at("schema_version") == 1);
        CHECK(c.at("seed") == 20240601);
        CHECK(c.contains("quick_overrides"));
    }
    CHECK(default_config("se-only") == default_config("se"));
}

TEST_CASE("quick runs are reproducible and pass") {
    for (const std::string& name : experiment_names()) {
        CAPTURE(name);
        const ExperimentReport a = run_experiment(name, {{"quick", true}}, 77);
        const ExperimentReport b = run_experiment(name, {{"quick", true}, {"threads", 1}}, 77);
        CHECK(a.exit_code == 0);
        CHECK(a.csv() == b.csv());
        CHECK(a.summary.at("checks") == b.summary.at("checks"));
        CHECK(a.summary.at("config").at("seed") == 77);
    }
}

TEST_CASE("seed precedence") {
    const ExperimentReport a = run_experiment("se", {{"quick", true}, {"seed", 5}});
    CHECK(a.summary.at("config").at("seed") == 5);
    const ExperimentReport b = run_experiment("se", {{"quick", true}, {"seed", 5}}, 9);
    CHECK(b.summary.at("config").at("seed") == 9);
}

TEST_CASE("configuration errors exit with code 4") {
    CHECK(run_experiment("spiked", {{"no_such_key", 1}}).exit_code == 4);
    CHECK(run_experiment("nope", json::object()).exit_code == 4);
    CHECK(run_experiment("lasso", {{"delta", "half"}}).exit_code == 4);
    CHECK(run_experiment("lasso", {{"schema_version", 2}}).exit_code == 4);
    const ExperimentReport r = run_experiment("mest", {{"delta", -1.0}});
    CHECK(r.exit_code == 4);
    CHECK(r.summary.at("error").at("kind") == "config");
    CHECK(r.columns == std::vector<std::string>{"panel", "status", "message"});
}

TEST_CASE("square-loss M-estimation reports the closed form") {
    const ExperimentReport r =
        run_experiment("mest", {{"quick", true}, {"loss", {{"kind", "square"}}}, {"delta", 2.0}}, 3);
    CHECK(r.exit_code == 0);
    const auto rows = panel(r, "closed_form");
    REQUIRE(rows.size() == 1);
    CHECK(num(col(r, rows[0], "tau2_solver")) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(num(col(r, rows[0], "tau2_formula")) == 1.0);
}

TEST_CASE("rho trajectories of the se experiment") {
    SUBCASE("centred prior from zero stays at zero") {
        const ExperimentReport r = run_experiment("se", {{"quick", true}, {"prior", {{"kind", "rademacher"}}}}, 1);
        REQUIRE(r.exit_code == 0);
        for (const auto& row : panel(r, "trajectory")) CHECK(num(col(r, row, "rho")) == 0.0);
    }
    SUBCASE("non-centred prior grows from the intercept") {
        const json prior = {{"kind", "discrete"}, {"atoms", json::array({json::array({0.0, 0.75}), json::array({2.0, 0.25})})}};
        const ExperimentReport r = run_experiment("se", {{"quick", true}, {"prior", prior}}, 1);
        REQUIRE(r.exit_code == 0);
        const auto rows = panel(r, "trajectory");
        REQUIRE(rows.size() > 2);
        CHECK(num(col(r, rows[1], "rho")) == doctest::Approx(1.7 * 1.7 * 0.25));
        for (std::size_t k = 1; k < rows.size(); ++k)
            CHECK(num(col(r, rows[k], "rho")) >= num(col(r, rows[k - 1], "rho")));
    }
}

TEST_CASE("logistic regression without an MLE fixed point") {
    const ExperimentReport r = run_experiment("logistic", {{"quick", true}, {"kappa2", 5.0}, {"delta", 2.0}}, 1);
    CHECK(r.exit_code == 3);
    const auto rows = panel(r, "fixed_point");
    REQUIRE(rows.size() == 1);
    CHECK(col(r, rows[0], "status") == "not_found");
}

TEST_CASE("reports are written to disk") {
    const auto dir = std::filesystem::temp_directory_path() / "amp_report_test";
    std::filesystem::remove_all(dir);
    const ExperimentReport r = run_experiment("se", {{"quick", true}}, 1);
    write_report(r, dir);
    std::ifstream js(dir / "report.json"), csv(dir / "metrics.csv");
    REQUIRE(js.good());
    REQUIRE(csv.good());
    CHECK(json::parse(js).at("exit_code") == 0);
    std::stringstream ss;
    ss << csv.rdbuf();
    CHECK(ss.str() == r.csv());
    std::filesystem::remove_all(dir);
}
