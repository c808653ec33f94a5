#pragma once

// YAML parsing helpers shared by model class files and scenario configs.
// Every error is a ConfigError prefixed with the offending line.

#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "kllab/mixture.hpp"

namespace kllab::yaml {

std::string where(const YAML::Node& node);

template <class T>
T as(const YAML::Node& node) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where(node) + "value '" + (node.IsScalar() ? node.Scalar() : "?") +
                      "' has the wrong type");
  }
}

YAML::Node required_node(const YAML::Node& parent, const std::string& key);

template <class T>
T required(const YAML::Node& parent, const std::string& key) {
  return as<T>(required_node(parent, key));
}

template <class T>
T optional(const YAML::Node& parent, const std::string& key, T fallback) {
  if (!parent.IsMap() || !parent[key]) return fallback;
  return as<T>(parent[key]);
}

Distribution row(const YAML::Node& node, int alphabet);
std::vector<Distribution> rows(const YAML::Node& node, int alphabet);
ModelSpec model_spec(const YAML::Node& node, const toylang::Language& lang);
std::vector<ModelSpec> model_specs(const YAML::Node& node, const toylang::Language& lang);

}  // namespace kllab::yaml
