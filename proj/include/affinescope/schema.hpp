#pragma once

#include "json.hpp"

#include <string>
#include <vector>

namespace afs {

/// Validates against the subset of JSON Schema used by the shipped schemas: type, enum, const,
/// properties, required, additionalProperties, items, minItems, maxItems, minimum, maximum,
/// exclusiveMinimum, exclusiveMaximum, anyOf, oneOf and local "#/$defs/..." references.
/// Returns one message per violation, each prefixed with its JSON pointer.
std::vector<std::string> schema_errors(const nlohmann::json& instance, const nlohmann::json& schema);

/// The named schema compiled into the binary ("config.schema" or "report.schema").
const nlohmann::json& shipped_schema(const std::string& name);

/// Throws ValidationError listing the violations, if any.
void require_valid(const nlohmann::json& instance, const std::string& schema_name);

}  // namespace afs
