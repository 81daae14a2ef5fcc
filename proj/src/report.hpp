#ifndef SHIFTLAB_REPORT_HPP
#define SHIFTLAB_REPORT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "sim.hpp"

namespace shiftlab::report {

/// Shift diagnostics, effective ranks and a condition-number check on one
/// sampled design, as a JSON object. Non-finite values serialize as "inf".
std::string diagnose_json(const sim::ScenarioConfig& config, std::size_t n, std::uint64_t seed);

/// Bound-term report (rate expressions only; constants omitted).
std::string theory_json(const sim::ScenarioConfig& config, std::size_t n, double delta_prob,
                        double sigma);

std::string slope_json(const std::vector<sim::RiskRecord>& records, const std::string& estimator);

std::string instance_json(std::size_t n, std::size_t k, double c1, double c2);

}  // namespace shiftlab::report

#endif
