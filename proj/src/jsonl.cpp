#include "vlnaug/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "vlnaug/error.hpp"

namespace vlnaug {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
    return in;
}

bool is_blank(const std::string& line) {
    return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const Json&, std::size_t)>& visit) {
    auto in = open_input(path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) continue;
        Json record;
        try {
            record = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw ParseError(path.string(), line_no, e.what());
        }
        try {
            visit(record, line_no);
        } catch (const Json::exception& e) {
            // Type or missing-field errors surfaced while reading the record.
            throw ParseError(path.string(), line_no, e.what());
        }
    }
}

Json read_json_file(const std::filesystem::path& path) {
    auto in = open_input(path);
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ParseError(path.string(), 0, e.what());
    }
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto last = line.find_last_not_of(" \t");
        out.push_back(line.substr(first, last - first + 1));
    }
    return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
    out << contents;
    if (!out) fail(ErrorKind::kIo, "write failed for " + path.string());
}

std::string to_jsonl(const std::vector<OrderedJson>& records) {
    std::string out;
    for (const auto& r : records) {
        out += r.dump();
        out += '\n';
    }
    return out;
}

std::string read_text_file(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace vlnaug
