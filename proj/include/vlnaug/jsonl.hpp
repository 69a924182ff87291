#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace vlnaug {

using Json = nlohmann::json;
/// Output documents keep insertion order so emitted files follow the schema layout.
using OrderedJson = nlohmann::ordered_json;

/// Calls visit(record, line_number) for every non-blank line. Throws ParseError
/// naming the line on malformed JSON, and Error(kIo) if the file cannot be read.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const Json&, std::size_t)>& visit);

Json read_json_file(const std::filesystem::path& path);

/// Plain-text list, one entry per line; blank lines and '#' comments skipped.
std::vector<std::string> read_lines(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& contents);

/// Serializes one record per line with a trailing newline.
std::string to_jsonl(const std::vector<OrderedJson>& records);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace vlnaug
