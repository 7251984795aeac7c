#include "affinescope/schema.hpp"

#include "affinescope/core.hpp"
#include "affinescope/embedded_schemas.hpp"

#include <map>
#include <mutex>

namespace afs {

namespace {

using Json = nlohmann::json;

bool has_type(const Json& v, const std::string& type) {
    if (type == "object") return v.is_object();
    if (type == "array") return v.is_array();
    if (type == "string") return v.is_string();
    if (type == "boolean") return v.is_boolean();
    if (type == "null") return v.is_null();
    if (type == "number") return v.is_number();
    if (type == "integer") {
        if (v.is_number_integer()) return true;
        return v.is_number_float() && std::floor(v.get<double>()) == v.get<double>();
    }
    return false;
}

class Validator {
public:
    explicit Validator(const Json& root) : root_(root) {}

    void check(const Json& v, const Json& schema, const std::string& where, std::vector<std::string>& errors) const {
        if (schema.is_boolean()) {
            if (!schema.get<bool>()) errors.push_back(where + ": no value is allowed here");
            return;
        }
        if (schema.contains("$ref")) {
            check(v, resolve(schema.at("$ref").get<std::string>()), where, errors);
            return;
        }
        if (schema.contains("type")) {
            const Json& t = schema.at("type");
            bool ok = false;
            if (t.is_string())
                ok = has_type(v, t.get<std::string>());
            else
                for (const Json& option : t) ok = ok || has_type(v, option.get<std::string>());
            if (!ok) {
                errors.push_back(where + ": expected type " + t.dump() + ", found " + v.type_name());
                return;
            }
        }
        if (schema.contains("const") && v != schema.at("const"))
            errors.push_back(where + ": must equal " + schema.at("const").dump());
        if (schema.contains("enum")) {
            bool found = false;
            for (const Json& option : schema.at("enum")) found = found || option == v;
            if (!found) errors.push_back(where + ": " + v.dump() + " is not one of " + schema.at("enum").dump());
        }
        if (v.is_number()) {
            const double x = v.get<double>();
            if (schema.contains("minimum") && x < schema.at("minimum").get<double>())
                errors.push_back(where + ": below minimum " + schema.at("minimum").dump());
            if (schema.contains("maximum") && x > schema.at("maximum").get<double>())
                errors.push_back(where + ": above maximum " + schema.at("maximum").dump());
            if (schema.contains("exclusiveMinimum") && x <= schema.at("exclusiveMinimum").get<double>())
                errors.push_back(where + ": must exceed " + schema.at("exclusiveMinimum").dump());
            if (schema.contains("exclusiveMaximum") && x >= schema.at("exclusiveMaximum").get<double>())
                errors.push_back(where + ": must be below " + schema.at("exclusiveMaximum").dump());
        }
        if (v.is_object()) check_object(v, schema, where, errors);
        if (v.is_array()) {
            if (schema.contains("minItems") && v.size() < schema.at("minItems").get<std::size_t>())
                errors.push_back(where + ": fewer than " + schema.at("minItems").dump() + " items");
            if (schema.contains("maxItems") && v.size() > schema.at("maxItems").get<std::size_t>())
                errors.push_back(where + ": more than " + schema.at("maxItems").dump() + " items");
            if (schema.contains("items"))
                for (std::size_t i = 0; i < v.size(); ++i) check(v[i], schema.at("items"), where + "/" + std::to_string(i), errors);
        }
        if (schema.contains("anyOf")) {
            bool any = false;
            for (const Json& option : schema.at("anyOf")) any = any || passes(v, option, where);
            if (!any) errors.push_back(where + ": matches none of the anyOf alternatives");
        }
        if (schema.contains("oneOf")) {
            int count = 0;
            for (const Json& option : schema.at("oneOf")) count += passes(v, option, where) ? 1 : 0;
            if (count != 1)
                errors.push_back(where + ": matches " + std::to_string(count) + " oneOf alternatives instead of exactly one");
        }
    }

private:
    bool passes(const Json& v, const Json& schema, const std::string& where) const {
        std::vector<std::string> scratch;
        check(v, schema, where, scratch);
        return scratch.empty();
    }

    void check_object(const Json& v, const Json& schema, const std::string& where, std::vector<std::string>& errors) const {
        if (schema.contains("required"))
            for (const Json& key : schema.at("required"))
                if (!v.contains(key.get<std::string>())) errors.push_back(where + ": missing required field " + key.dump());
        const Json* properties = schema.contains("properties") ? &schema.at("properties") : nullptr;
        for (auto it = v.begin(); it != v.end(); ++it) {
            const std::string path = where + "/" + it.key();
            if (properties && properties->contains(it.key())) {
                check(it.value(), properties->at(it.key()), path, errors);
            } else if (schema.contains("additionalProperties")) {
                const Json& extra = schema.at("additionalProperties");
                if (extra.is_boolean() && !extra.get<bool>())
                    errors.push_back(where + ": unknown field \"" + it.key() + "\"");
                else if (extra.is_object())
                    check(it.value(), extra, path, errors);
            }
        }
    }

    const Json& resolve(const std::string& ref) const {
        const std::string prefix = "#/$defs/";
        require(ref.rfind(prefix, 0) == 0, "schema: only local #/$defs references are supported, got " + ref);
        const std::string name = ref.substr(prefix.size());
        require(root_.contains("$defs") && root_.at("$defs").contains(name), "schema: unresolved reference " + ref);
        return root_.at("$defs").at(name);
    }

    const Json& root_;
};

}  // namespace

std::vector<std::string> schema_errors(const Json& instance, const Json& schema) {
    std::vector<std::string> errors;
    Validator(schema).check(instance, schema, "", errors);
    for (std::string& e : errors)
        if (e.empty() || e[0] == ':') e = "(root)" + e;
    return errors;
}

const Json& shipped_schema(const std::string& name) {
    static std::mutex mutex;
    static std::map<std::string, Json> parsed;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = parsed.find(name);
    if (it != parsed.end()) return it->second;
    const auto& sources = embedded_schemas();
    auto src = sources.find(name);
    require(src != sources.end(), "no shipped schema named '" + name + "'");
    return parsed.emplace(name, Json::parse(src->second)).first->second;
}

void require_valid(const Json& instance, const std::string& schema_name) {
    const std::vector<std::string> errors = schema_errors(instance, shipped_schema(schema_name));
    if (errors.empty()) return;
    std::string message = schema_name + " violation";
    for (const std::string& e : errors) message += "\n  " + e;
    throw ValidationError(message);
}

}  // namespace afs
