#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>

#include "vlnaug/template_engine.hpp"

namespace vlnaug {

/// Losses precomputed into JSONL {template_id, probe, loss}. A null, "NaN" or
/// absent entry counts as a scorer failure for that template.
class ScoreFileScorer final : public TemplateScorer {
public:
    explicit ScoreFileScorer(const std::filesystem::path& path);

    std::vector<std::optional<double>> score(std::span<const ProbeRequest> requests) override;
    [[nodiscard]] std::string describe() const override { return "score-file:" + source_; }

private:
    std::string source_;
    std::map<std::pair<std::string, std::string>, std::optional<double>> losses_;
};

/// Line protocol: every probe sentence is written to the command's stdin, one
/// per line, and one decimal loss per line is read back in the same order.
/// Unparsable lines (including "NaN") and missing lines are failures.
class CommandScorer final : public TemplateScorer {
public:
    explicit CommandScorer(std::string command) : command_(std::move(command)) {}

    std::vector<std::optional<double>> score(std::span<const ProbeRequest> requests) override;
    [[nodiscard]] std::string describe() const override { return "command:" + command_; }

private:
    std::string command_;
};

/// Adapter for in-process scoring functions (tests, stubs).
class FunctionScorer final : public TemplateScorer {
public:
    using Fn = std::function<std::optional<double>(const ProbeRequest&)>;

    FunctionScorer(Fn fn, std::string name) : fn_(std::move(fn)), name_(std::move(name)) {}

    std::vector<std::optional<double>> score(std::span<const ProbeRequest> requests) override;
    [[nodiscard]] std::string describe() const override { return name_; }

private:
    Fn fn_;
    std::string name_;
};

/// Parses one loss line; nullopt unless it is a finite decimal.
std::optional<double> parse_loss_line(std::string_view line);

}  // namespace vlnaug
