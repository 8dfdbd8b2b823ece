#pragma once

#include <iosfwd>
#include <json.hpp>
#include <span>
#include <string>

#include "sbmsel/experiments.hpp"

namespace sbmsel::report {

using Json = nlohmann::ordered_json;

// Shortest text that reads back as the same double.
std::string format_double(double x);

Json infer_result(const Multigraph& g, const MapResult& map, ModelClass cls, std::uint64_t seed);

Json t_test(const std::optional<TTestResult>& t);
Json consistency(const ConsistencyReport& report, double f, int replicates, std::uint64_t seed);
Json leave_one_out(std::span<const LeaveOneOutPoint> points, const LeaveOneOutConfig& config, std::uint64_t seed);
Json groups_sweep(std::span<const GroupsSweepPoint> points, const GroupsSweepConfig& config, std::uint64_t seed);
Json averaging(std::span<const AveragingRecord> records, const AveragingConfig& config, std::uint64_t seed);

void write_run_records(std::ostream& out, std::span<const RunRecord> records);
void write_sweep_points(std::ostream& out, std::span<const GroupsSweepPoint> points);
void write_averaging_records(std::ostream& out, std::span<const AveragingRecord> records);

}  // namespace sbmsel::report
