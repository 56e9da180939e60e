#pragma once

// Plain-text artifacts: emission matrices and dispatch tables as CSV, hourly
// distribution summaries and their SVG rendering. All writers go through
// write_atomic.

#include "dlme/scheduler.hpp"

#include <string>
#include <vector>

namespace dlme {

/// Writes to a temporary file next to `path`, then renames it over `path`.
void write_atomic(const std::string& path, const std::string& content);

/// %.6g formatting used in every CSV.
std::string fmt6(double v);

/// Rows = buses (by id), columns h1..hT.
std::string matrix_csv(const Eigen::MatrixXd& m, const NetworkCase& c);

/// Long format: quantity,entity,h1..hT for every dispatched quantity.
std::string dispatch_csv(const DispatchSolution& sol, const NetworkCase& c);

struct HourSummary {
    std::vector<double> min, q1, median, q3, max;  ///< per hour over buses
};

/// Quantiles with linear interpolation between order statistics.
HourSummary summarize(const Eigen::MatrixXd& m);

/// Box-and-whisker chart of the hourly summary.
std::string summary_svg(const HourSummary& s, const std::string& title, const std::string& unit);

}  // namespace dlme
