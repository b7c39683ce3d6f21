#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "choicerm/instance.hpp"

namespace choicerm {

inline constexpr int kInstanceSchemaVersion = 1;

class SchemaError : public InstanceError {
 public:
  using InstanceError::InstanceError;
};

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& doc, const char* field) {
  auto it = doc.find(field);
  if (it == doc.end()) throw SchemaError(std::string("schema: missing field '") + field + "'");
  return *it;
}

inline double number_field(const nlohmann::json& doc, const char* field) {
  const auto& v = require(doc, field);
  if (!v.is_number()) throw SchemaError(std::string("schema: field '") + field + "' must be a number");
  return v.get<double>();
}

inline std::size_t count_field(const nlohmann::json& doc, const char* field) {
  const auto& v = require(doc, field);
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    throw SchemaError(std::string("schema: field '") + field + "' must be a nonnegative integer");
  return v.get<std::size_t>();
}

inline std::vector<double> vector_field(const nlohmann::json& doc, const char* field,
                                        std::size_t expected) {
  const auto& v = require(doc, field);
  if (!v.is_array()) throw SchemaError(std::string("schema: field '") + field + "' must be an array");
  if (v.size() != expected)
    throw SchemaError(std::string("schema: field '") + field + "' has " + std::to_string(v.size()) +
                      " entries, expected " + std::to_string(expected));
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!v[k].is_number())
      throw SchemaError(std::string("schema: ") + field + "[" + std::to_string(k) +
                        "] must be a number");
    out.push_back(v[k].get<double>());
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace detail

inline nlohmann::json to_json(const Instance& inst) {
  nlohmann::json doc;
  doc["schema_version"] = kInstanceSchemaVersion;
  doc["n"] = inst.n();
  doc["m"] = inst.m;
  doc["p"] = inst.p();
  doc["T"] = inst.T;
  doc["lambda"] = inst.lambda;
  doc["a"] = inst.mnl.a;
  doc["b"] = inst.mnl.b;
  doc["l"] = inst.l;
  doc["u"] = inst.u;
  doc["A"] = inst.A;
  doc["c"] = inst.c;
  doc["B"] = inst.B;
  doc["d"] = inst.d;
  return doc;
}

/// Parses and validates; every failure names the offending field.
inline Instance instance_from_json(const nlohmann::json& doc) {
  using namespace detail;
  if (!doc.is_object()) throw SchemaError("schema: document must be an object");
  const auto version = count_field(doc, "schema_version");
  if (version != static_cast<std::size_t>(kInstanceSchemaVersion))
    throw SchemaError("schema: unsupported schema_version " + std::to_string(version));
  Instance inst;
  const auto n = count_field(doc, "n");
  inst.m = count_field(doc, "m");
  inst.T = count_field(doc, "T");
  inst.lambda = number_field(doc, "lambda");
  inst.mnl.a = vector_field(doc, "a", n);
  inst.mnl.b = vector_field(doc, "b", n);
  inst.l = vector_field(doc, "l", n);
  inst.u = vector_field(doc, "u", n);
  inst.A = vector_field(doc, "A", inst.m * n);
  inst.c = vector_field(doc, "c", inst.m);
  const auto& d = require(doc, "d");
  const std::size_t p = d.is_array() ? d.size() : 0;
  if (doc.contains("p") && count_field(doc, "p") != p)
    throw SchemaError("schema: field 'p' disagrees with the length of 'd'");
  inst.d = vector_field(doc, "d", p);
  inst.B = vector_field(doc, "B", p * n);
  try {
    inst.validate();
  } catch (const InstanceError& e) {
    throw SchemaError(std::string("schema: ") + e.what());
  }
  return inst;
}

/// FNV-1a over the canonical JSON text; ties derived artifacts to an instance.
inline std::uint64_t instance_hash(const Instance& inst) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : to_json(inst).dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

inline void save(const Instance& inst, const std::string& path) {
  detail::write_file(path, to_json(inst).dump(2) + "\n");
}

inline Instance load(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("schema: not valid JSON: ") + e.what());
  }
  return instance_from_json(doc);
}

}  // namespace choicerm
