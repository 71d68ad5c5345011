#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "hullcub/hhs.hpp"
#include "hullcub/model.hpp"

namespace hullcub {

/// One verification suite run: pass/fail plus the measured constants.
struct SuiteResult {
    std::string name;
    bool pass = false;
    double seconds = 0;
    std::vector<std::pair<std::string, std::string>> measurements;
    std::vector<std::string> failures;

    void measure(const std::string& key, double value);
    void measure(const std::string& key, const std::string& value);
    void fail(const std::string& why);
};

using SuiteFn = std::function<SuiteResult(std::uint64_t seed, int jobs)>;

/// Every suite named in the acceptance criteria, invocable by name.
const std::map<std::string, SuiteFn>& suite_registry();

SuiteResult run_suite(const std::string& name, std::uint64_t seed, int jobs = 1);

// --- instance generators shared by the suites and the CLI ---

MetricGraph random_tree_graph(Rng& rng, int n, int min_diameter = 0);
HHSInstance make_g1(Rng& rng, int n);
HHSInstance make_g2(Rng& rng, int n1, int n2);
HHSInstance make_g3(Rng& rng, int parent_len, int flats, int flat_len);

}  // namespace hullcub
