#pragma once

#include <string>

#include "clickstorm/clickgen.hpp"
#include "clickstorm/metrics.hpp"
#include "json.hpp"

namespace clickstorm {

// {"kind", "clicks":[{"x","y","polarity","radius"}], "iou_curve", "biou_curve",
//  "diagnostics":[[{"iteration","x","y","loss","iou","ill","accepted"}]]}
nlohmann::json to_json(const Trajectory& trajectory);
Trajectory trajectory_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RobustnessReport& report);

}  // namespace clickstorm
