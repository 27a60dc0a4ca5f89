// Pass/fail records shared by the verification routines and the CLI.
#pragma once

#include <string>
#include <vector>

namespace combdrive {

/// One verified property with its measured value and the bound it was held to.
struct Check {
    std::string name;
    bool passed = false;
    double measured = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct Report {
    std::vector<Check> checks;

    bool passed() const {
        for (const auto &c : checks) {
            if (!c.passed) return false;
        }
        return !checks.empty();
    }

    std::size_t failures() const {
        std::size_t n = 0;
        for (const auto &c : checks) n += c.passed ? 0 : 1;
        return n;
    }

    Check &add(std::string name, bool passed, double measured, double threshold,
               std::string detail = {}) {
        checks.push_back({std::move(name), passed, measured, threshold, std::move(detail)});
        return checks.back();
    }

    void append(const Report &other) {
        checks.insert(checks.end(), other.checks.begin(), other.checks.end());
    }
};

} // namespace combdrive
