#pragma once

#include <string>

#include "smpm/problems.hpp"

namespace smpm {

// JSON container for a ProblemInstance. Matrices are stored row-major as
// {"rows", "cols", "data"}; doubles round-trip exactly (17 significant digits).
std::string instance_to_json(const ProblemInstance& instance);
ProblemInstance instance_from_json(const std::string& text);

void save_instance(const ProblemInstance& instance, const std::string& path);
ProblemInstance load_instance(const std::string& path);

}  // namespace smpm
