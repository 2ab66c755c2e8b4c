#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace finsler {

struct CriterionResult {
    int id = 0;
    std::string label;
    bool pass = false;
    double seconds = 0.0;
    std::string detail;
};

/// Runs the full reproduction suite, printing one PASS/FAIL line per
/// criterion.  Returns true iff every criterion passed.
bool run_paper_suite(std::ostream& os, int threads = 1);

std::vector<CriterionResult> paper_suite_results(int threads = 1);

} // namespace finsler
