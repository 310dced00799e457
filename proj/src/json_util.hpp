#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

namespace deckard::detail {

// Parses JSON, translating the byte offset of a syntax error to line/column.
nlohmann::json parse_json_or_throw(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace deckard::detail
