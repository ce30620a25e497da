#pragma once
// The ten acceptance criteria as one runnable suite.
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace lerexp {

struct CriterionResult {
    int id = 0;
    std::string title;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct AcceptanceOptions {
    std::uint64_t seed = 2024;  // randomized cases of criterion 2
};

/// runs every criterion in order; `report` is called as each one finishes
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt = {},
                                            const std::function<void(const CriterionResult&)>& report = {});

/// "PASS  7  title: detail (1.2 s)"
std::string format_result(const CriterionResult& r);

}  // namespace lerexp
