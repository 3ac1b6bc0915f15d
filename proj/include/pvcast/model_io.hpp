#pragma once

#include <string>

#include <json.hpp>

#include "pvcast/baselines.hpp"
#include "pvcast/ngboost.hpp"
#include "pvcast/tree.hpp"

namespace pvcast {

/// Tree serialization: nodes as an array of {feature, threshold, left, right,
/// cover, value}; leaves carry feature -1 and children -1.
nlohmann::json tree_to_json(const RegressionTree& tree);
RegressionTree tree_from_json(const nlohmann::json& j);

void save_ngb_model(const NgbModel& model, const std::string& path);
NgbModel load_ngb_model(const std::string& path);

void save_gp_model(const GpModel& model, const std::string& path);
GpModel load_gp_model(const std::string& path);  // refactorizes on load

void save_lube_model(const LubeNet& net, const std::string& path);
LubeNet load_lube_model(const std::string& path);

/// Reads the "kind" tag of a model file: "ngboost", "gp", or "lube".
std::string model_kind(const std::string& path);

}  // namespace pvcast
