#include "vlnaug/scorers.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include <spdlog/spdlog.h>

#include "vlnaug/error.hpp"
#include "vlnaug/rng.hpp"

namespace vlnaug {

std::optional<double> parse_loss_line(std::string_view line) {
    std::string s(line);
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return std::nullopt;
    s.erase(0, first);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE || !std::isfinite(v)) return std::nullopt;
    return v;
}

ScoreFileScorer::ScoreFileScorer(const std::filesystem::path& path) : source_(path.filename().string()) {
    for_each_jsonl(path, [&](const Json& rec, std::size_t) {
        std::optional<double> loss;
        const auto& l = rec.at("loss");
        if (l.is_number()) {
            loss = l.get<double>();
        } else if (l.is_string()) {
            loss = parse_loss_line(l.get<std::string>());
        }
        losses_[{rec.at("template_id").get<std::string>(), rec.at("probe").get<std::string>()}] = loss;
    });
}

std::vector<std::optional<double>> ScoreFileScorer::score(std::span<const ProbeRequest> requests) {
    std::vector<std::optional<double>> out;
    out.reserve(requests.size());
    for (const auto& r : requests) {
        const auto it = losses_.find({r.template_id, r.probe});
        out.push_back(it == losses_.end() ? std::nullopt : it->second);
    }
    return out;
}

std::vector<std::optional<double>> CommandScorer::score(std::span<const ProbeRequest> requests) {
    std::vector<std::optional<double>> out(requests.size());
    if (requests.empty()) return out;

    std::string input;
    for (const auto& r : requests) {
        input += r.sentence;
        input += '\n';
    }
    const auto tmp = std::filesystem::temp_directory_path() /
                     ("vlnaug-probes-" + std::to_string(fnv1a64(input + command_)) + "-" +
                      std::to_string(reinterpret_cast<std::uintptr_t>(this)) + ".txt");
    write_text_file(tmp, input);

    const std::string cmd = command_ + " < '" + tmp.string() + "'";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) {
        std::filesystem::remove(tmp);
        fail(ErrorKind::kIo, "cannot start scorer command: " + command_);
    }
    std::string line;
    std::size_t i = 0;
    int ch;
    while ((ch = std::fgetc(pipe)) != EOF) {
        if (ch == '\n') {
            if (i < out.size()) out[i] = parse_loss_line(line);
            ++i;
            line.clear();
        } else {
            line += static_cast<char>(ch);
        }
    }
    if (!line.empty()) {
        if (i < out.size()) out[i] = parse_loss_line(line);
        ++i;
    }
    const int status = ::pclose(pipe);
    std::filesystem::remove(tmp);
    if (status != 0) spdlog::warn("scorer command exited with status {}", status);
    if (i != requests.size()) {
        spdlog::warn("scorer returned {} lines for {} sentences", i, requests.size());
    }
    return out;
}

std::vector<std::optional<double>> FunctionScorer::score(std::span<const ProbeRequest> requests) {
    std::vector<std::optional<double>> out;
    out.reserve(requests.size());
    for (const auto& r : requests) {
        try {
            out.push_back(fn_(r));
        } catch (const std::exception& e) {
            spdlog::warn("scorer failed on '{}': {}", r.sentence, e.what());
            out.emplace_back(std::nullopt);
        }
    }
    return out;
}

}  // namespace vlnaug
