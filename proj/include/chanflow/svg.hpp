#pragma once

#include "chanflow/fields.hpp"

#include <string>

namespace chanflow {

struct QuiverStyle {
    double width = 640.0;
    double height = 640.0;
    double margin = 60.0;
    std::string title;
};

std::string emit_quiver_svg(const ScalarField& U, const ScalarField& V, const QuiverStyle& style = {});
std::string emit_quiver_svg(const FlowState& state, const QuiverStyle& style = {});
std::string emit_quiver_svg(const DeviationState& dev, const QuiverStyle& style = {});

} // namespace chanflow
