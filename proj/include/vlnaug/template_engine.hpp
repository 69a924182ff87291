#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vlnaug/jsonl.hpp"
#include "vlnaug/rng.hpp"
#include "vlnaug/turn_label.hpp"

namespace vlnaug {

inline constexpr std::string_view kObjectSlot = "<OBJECT>";

enum class TemplateCategory { kTurnLeft = 0, kTurnRight = 1, kForward = 2, kStop = 3 };
inline constexpr std::array kAllCategories = {TemplateCategory::kTurnLeft, TemplateCategory::kTurnRight,
                                              TemplateCategory::kForward, TemplateCategory::kStop};

std::string_view to_string(TemplateCategory category) noexcept;
std::optional<TemplateCategory> parse_category(std::string_view text) noexcept;

/// TURN_LEFT for LEFT, TURN_RIGHT for RIGHT, FORWARD and STOP map directly.
TemplateCategory category_for(TurnLabel action) noexcept;

enum class SpanKind { kNounPhrase, kDirectionWord };

/// Token span [start, end).
struct ChunkSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    SpanKind kind = SpanKind::kNounPhrase;
};

/// Chunker output for one sentence.
struct ChunkAnnotation {
    std::string sentence_id;
    std::vector<std::string> tokens;
    std::vector<ChunkSpan> spans;

    /// Spans must be non-empty, inside the token range, sorted and
    /// non-overlapping. Throws Error(kInvalidArgument).
    void validate() const;
};

struct Template {
    std::string id;
    std::vector<std::string> tokens;
    TemplateCategory category = TemplateCategory::kForward;
    std::string source_sentence_id;

    [[nodiscard]] std::size_t slot_count() const;
    [[nodiscard]] bool has_slot() const { return slot_count() > 0; }
    /// Tokens joined by single spaces.
    [[nodiscard]] std::string text() const;
};

struct ScoredTemplate {
    Template tmpl;
    double lm_loss = 0.0;
};

struct BankMetadata {
    std::string corpus_id;
    double keep_fraction = 1.0;
    std::vector<std::string> probe_objects;
    std::string scorer;
    std::array<std::size_t, 4> candidate_counts{};
    std::size_t dropped_by_scorer = 0;
};

/// Filtered templates per category, kept in corpus order.
class TemplateBank {
public:
    TemplateBank() = default;

    /// Adds a template; duplicates by text within a category are rejected
    /// (returns false).
    bool add(ScoredTemplate entry);

    [[nodiscard]] const std::vector<ScoredTemplate>& category(TemplateCategory c) const {
        return by_category_[static_cast<std::size_t>(c)];
    }
    [[nodiscard]] std::size_t size() const;
    [[nodiscard]] const ScoredTemplate* find(std::string_view template_id) const;

    BankMetadata metadata;

    [[nodiscard]] OrderedJson to_json() const;
    static TemplateBank from_json(const Json& doc);
    static TemplateBank load(const std::filesystem::path& path);

private:
    std::array<std::vector<ScoredTemplate>, 4> by_category_;
};

/// Lowercased token with surrounding punctuation stripped.
std::string normalize_keyword(std::string_view token);

/// Category from the distinct direction keywords {left, right, forward, stop}
/// in the tokens: exactly one keyword gives its category, none or several
/// give nullopt.
std::optional<TemplateCategory> categorize(std::span<const std::string> tokens);

/// Why a sentence produced no template.
enum class RejectReason { kNone, kMultipleObjects, kNoDirection, kMultipleDirections };

struct TemplateCandidate {
    std::optional<Template> tmpl;
    RejectReason reason = RejectReason::kNone;
};

/// Masks every noun-phrase span with one <OBJECT> token (leading determiners
/// such as "the" stay in the text), then drops the result
/// if it has two or more slots, no direction keyword, or two or more distinct
/// direction keywords. `sentence` must match the annotation's tokens.
TemplateCandidate sentence_to_template(std::span<const std::string> sentence, const ChunkAnnotation& annotation);
TemplateCandidate sentence_to_template(const ChunkAnnotation& annotation);

/// Replaces the slot with object_name and joins tokens with single spaces.
/// Throws Error(kInvalidArgument) if the template has a slot and no object.
std::string fill_template(const Template& tmpl, std::optional<std::string_view> object_name);

// ---- corpus ingestion ----------------------------------------------------

/// Splits on whitespace and separates the punctuation marks . , ! ? ; : from words.
std::vector<std::string> tokenize(std::string_view text);

/// Breaks a token stream after each sentence-final mark (. ! ?).
std::vector<std::vector<std::string>> split_sentences(std::span<const std::string> tokens);

struct CorpusSentence {
    std::string sentence_id;  // "<instruction id>#<sentence index>"
    std::vector<std::string> tokens;
};

/// Corpus JSONL {id, text}; one entry per sentence, corpus order.
std::vector<CorpusSentence> load_corpus(const std::filesystem::path& path);

ChunkAnnotation annotation_from_json(const Json& record);

/// Annotation JSONL {sentence_id, tokens[], spans[]}; spans are either
/// {start, end, kind} objects or [start, end, kind] triples, end exclusive.
std::map<std::string, ChunkAnnotation> load_annotations(const std::filesystem::path& path);

struct ExtractionStats {
    std::size_t sentences = 0;
    std::size_t missing_annotation = 0;
    std::size_t multiple_objects = 0;
    std::size_t no_direction = 0;
    std::size_t multiple_directions = 0;
    std::size_t duplicates = 0;
    std::size_t token_mismatch = 0;
};

/// Template candidates in corpus order, deduplicated by text per category.
std::vector<Template> extract_candidates(std::span<const CorpusSentence> corpus,
                                         const std::map<std::string, ChunkAnnotation>& annotations,
                                         ExtractionStats* stats = nullptr);

// ---- language-model filtering --------------------------------------------

struct ProbeRequest {
    std::string template_id;
    std::string probe;
    std::string sentence;
};

/// Pluggable sentence-loss source. Returns one entry per request, nullopt
/// when the loss is unavailable.
class TemplateScorer {
public:
    virtual ~TemplateScorer() = default;
    virtual std::vector<std::optional<double>> score(std::span<const ProbeRequest> requests) = 0;
    [[nodiscard]] virtual std::string describe() const = 0;
};

struct LmFilterConfig {
    std::vector<std::string> probe_objects{"signboard", "traffic light", "awning", "telephone pole"};
    double keep_fraction = 0.5;
    std::string corpus_id;

    void validate() const;
};

/// Number kept out of n: ceil(keep_fraction * n).
std::size_t keep_count(std::size_t n, double keep_fraction);

/// Scores each template as the mean loss over its probe fillings and keeps the
/// lowest-loss keep_count(n) templates of each category, ties broken by
/// corpus order. Templates with any missing, non-finite or negative probe
/// loss are dropped with a warning.
TemplateBank lm_filter(std::span<const Template> candidates, TemplateScorer& scorer,
                       const LmFilterConfig& cfg);

// ---- sampling --------------------------------------------------------------

/// One generation episode: uniform draws without replacement per category,
/// refilling a category's pool once it is exhausted.
class TemplateSampler {
public:
    explicit TemplateSampler(const TemplateBank& bank) : bank_(&bank) {}

    /// Throws Error(kMissingTemplate) naming the category when it is empty.
    const ScoredTemplate& draw(TemplateCategory category, Rng& rng);

private:
    const TemplateBank* bank_;
    std::array<std::vector<std::size_t>, 4> remaining_;
};

const ScoredTemplate& sample_template(const TemplateBank& bank, TemplateCategory category, Rng& rng);

/// Reference extraction totals: turn (left + right), forward, stop.
struct ReferenceComparison {
    std::string group;
    std::size_t ours = 0;
    std::size_t reference = 0;
    double relative_deviation = 0.0;
    bool flagged = false;
};

/// Flags groups deviating by more than 25% from the reference counts.
std::vector<ReferenceComparison> compare_with_reference_counts(const TemplateBank& bank);

}  // namespace vlnaug
