#pragma once

#include <string>
#include <string_view>

#include "json.hpp"
#include "nbt/errors.hpp"

namespace nbt::detail {

using ordered_json = nlohmann::ordered_json;

// Parses JSON text, translating syntax errors into ParseError carrying the
// 1-based line and column of the failure.
inline ordered_json parse_json(std::string_view text, const std::string& module,
                               std::string_view source) {
  try {
    return ordered_json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t byte = e.byte == 0 ? 0 : e.byte - 1;
    if (byte > text.size()) byte = text.size();
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(module,
                     std::string(source) + ":" + std::to_string(line) + ":" +
                         std::to_string(col) + ": malformed JSON",
                     line, col);
  }
}

inline const ordered_json& require(const ordered_json& obj, const char* key,
                                   const std::string& module, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ValidationError(module, where + ": missing field '" + key + "'");
  }
  return obj.at(key);
}

inline std::string require_string(const ordered_json& v, const std::string& module,
                                  const std::string& where) {
  if (!v.is_string()) throw ValidationError(module, where + ": expected a string");
  return v.get<std::string>();
}

}  // namespace nbt::detail
