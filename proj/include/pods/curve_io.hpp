#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"
#include "pods/costmodel.hpp"
#include "pods/selection.hpp"

namespace pods {

/// Shortest decimal that round-trips the double.
std::string format_real(double x);

/// Header row: sim_seconds,accuracy,mean_len,mean_reward,iter
void write_curve_csv(std::ostream& out, const TrainingCurve& curve);
nlohmann::json to_json(const TrainingCurve& curve);
TrainingCurve curve_from_json(const nlohmann::json& j);

/// {"indices": [...], "m": ..., "variance": ...}, indices 0-based.
nlohmann::json to_json(const SelectionResult& result);

}  // namespace pods
