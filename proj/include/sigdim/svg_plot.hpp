#pragma once

#include <string>

#include "sigdim/evaluation.hpp"

namespace sigdim {

/// Self-contained SVG line chart of a sweep report: one polyline per
/// estimator, y in [0, 1], labeled axes and a legend. Output is a pure
/// function of the report, so identical inputs give identical bytes.
std::string render_report_svg(const EvalReport& report);

}  // namespace sigdim
