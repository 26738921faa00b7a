#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace amp {

// Replicate-aggregated comparison of empirical quantities with their predictions.
struct ExperimentReport {
    std::string experiment;
    nlohmann::json summary;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    int exit_code = 0;  // 0 pass, 2 tolerance failure, 3 solver/precondition error, 4 config error

    std::string csv() const;
};

std::string fmt17(double x);

// Experiments: spiked, bbp, lasso, mest, logistic, se, abstract-sym.
ExperimentReport run_experiment(const std::string& name, nlohmann::json config,
                                std::optional<std::uint64_t> seed = std::nullopt);
void write_report(const ExperimentReport& rep, const std::filesystem::path& out_dir);

std::vector<std::string> experiment_names();
nlohmann::json default_config(const std::string& name);

}  // namespace amp
