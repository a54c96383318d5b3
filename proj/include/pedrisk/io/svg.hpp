// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "pedrisk/dataset.hpp"

namespace pedrisk::io {

// Standalone SVG bar chart of a histogram.
std::string histogram_svg(const Histogram& h, const std::string& title, const std::string& x_label);

}  // namespace pedrisk::io
