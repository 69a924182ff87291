#include "vlnaug/template_engine.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "vlnaug/error.hpp"

namespace vlnaug {

std::string_view to_string(TemplateCategory category) noexcept {
    switch (category) {
        case TemplateCategory::kTurnLeft: return "TURN_LEFT";
        case TemplateCategory::kTurnRight: return "TURN_RIGHT";
        case TemplateCategory::kForward: return "FORWARD";
        case TemplateCategory::kStop: return "STOP";
    }
    return "?";
}

std::optional<TemplateCategory> parse_category(std::string_view text) noexcept {
    for (auto c : kAllCategories) {
        if (to_string(c) == text) return c;
    }
    return std::nullopt;
}

TemplateCategory category_for(TurnLabel action) noexcept {
    switch (action) {
        case TurnLabel::kLeft: return TemplateCategory::kTurnLeft;
        case TurnLabel::kRight: return TemplateCategory::kTurnRight;
        case TurnLabel::kStop: return TemplateCategory::kStop;
        case TurnLabel::kForward: break;
    }
    return TemplateCategory::kForward;
}

void ChunkAnnotation::validate() const {
    std::size_t prev_end = 0;
    for (const auto& s : spans) {
        if (s.start >= s.end || s.end > tokens.size()) {
            fail(ErrorKind::kInvalidArgument,
                 "annotation " + sentence_id + ": span [" + std::to_string(s.start) + ", " +
                     std::to_string(s.end) + ") outside " + std::to_string(tokens.size()) + " tokens");
        }
        if (s.start < prev_end) {
            fail(ErrorKind::kInvalidArgument, "annotation " + sentence_id + ": spans overlap or are unsorted");
        }
        prev_end = s.end;
    }
}

std::size_t Template::slot_count() const {
    return static_cast<std::size_t>(std::count(tokens.begin(), tokens.end(), kObjectSlot));
}

namespace {

std::string join(std::span<const std::string> tokens) {
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

std::vector<std::string> split_spaces(std::string_view text) {
    std::vector<std::string> out;
    std::istringstream in{std::string(text)};
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

constexpr std::array<std::pair<std::string_view, TemplateCategory>, 4> kKeywords{{
    {"left", TemplateCategory::kTurnLeft},
    {"right", TemplateCategory::kTurnRight},
    {"forward", TemplateCategory::kForward},
    {"stop", TemplateCategory::kStop},
}};

std::set<TemplateCategory> keywords_in(std::span<const std::string> tokens) {
    std::set<TemplateCategory> found;
    for (const auto& t : tokens) {
        const auto norm = normalize_keyword(t);
        for (const auto& [word, cat] : kKeywords) {
            if (norm == word) found.insert(cat);
        }
    }
    return found;
}

}  // namespace

std::string Template::text() const { return join(tokens); }

bool TemplateBank::add(ScoredTemplate entry) {
    auto& list = by_category_[static_cast<std::size_t>(entry.tmpl.category)];
    const auto text = entry.tmpl.text();
    const bool dup = std::any_of(list.begin(), list.end(), [&](const ScoredTemplate& s) { return s.tmpl.text() == text; });
    if (dup) return false;
    list.push_back(std::move(entry));
    return true;
}

std::size_t TemplateBank::size() const {
    std::size_t n = 0;
    for (const auto& l : by_category_) n += l.size();
    return n;
}

const ScoredTemplate* TemplateBank::find(std::string_view template_id) const {
    for (const auto& l : by_category_) {
        for (const auto& s : l) {
            if (s.tmpl.id == template_id) return &s;
        }
    }
    return nullptr;
}

OrderedJson TemplateBank::to_json() const {
    OrderedJson meta;
    meta["corpus_id"] = metadata.corpus_id;
    meta["keep_fraction"] = metadata.keep_fraction;
    meta["probe_objects"] = metadata.probe_objects;
    meta["scorer"] = metadata.scorer;
    OrderedJson cand = OrderedJson::object();
    for (auto c : kAllCategories) cand[std::string(to_string(c))] = metadata.candidate_counts[static_cast<std::size_t>(c)];
    meta["candidate_counts"] = cand;
    meta["dropped_by_scorer"] = metadata.dropped_by_scorer;

    OrderedJson cats = OrderedJson::object();
    for (auto c : kAllCategories) {
        OrderedJson arr = OrderedJson::array();
        for (const auto& s : category(c)) {
            OrderedJson t;
            t["id"] = s.tmpl.id;
            t["text"] = s.tmpl.text();
            t["lm_loss"] = s.lm_loss;
            t["source_sentence_id"] = s.tmpl.source_sentence_id;
            arr.push_back(std::move(t));
        }
        cats[std::string(to_string(c))] = std::move(arr);
    }
    OrderedJson doc;
    doc["metadata"] = std::move(meta);
    doc["categories"] = std::move(cats);
    return doc;
}

TemplateBank TemplateBank::from_json(const Json& doc) {
    TemplateBank bank;
    try {
        if (doc.contains("metadata")) {
            const auto& m = doc.at("metadata");
            bank.metadata.corpus_id = m.value("corpus_id", "");
            bank.metadata.keep_fraction = m.value("keep_fraction", 1.0);
            bank.metadata.probe_objects = m.value("probe_objects", std::vector<std::string>{});
            bank.metadata.scorer = m.value("scorer", "");
            bank.metadata.dropped_by_scorer = m.value("dropped_by_scorer", std::size_t{0});
            if (m.contains("candidate_counts")) {
                for (auto c : kAllCategories) {
                    bank.metadata.candidate_counts[static_cast<std::size_t>(c)] =
                        m.at("candidate_counts").value(std::string(to_string(c)), std::size_t{0});
                }
            }
        }
        for (const auto& [name, arr] : doc.at("categories").items()) {
            const auto cat = parse_category(name);
            if (!cat) fail(ErrorKind::kParse, "unknown template category " + name);
            for (const auto& t : arr) {
                ScoredTemplate s;
                s.tmpl.id = t.at("id").get<std::string>();
                s.tmpl.tokens = split_spaces(t.at("text").get<std::string>());
                s.tmpl.category = *cat;
                s.tmpl.source_sentence_id = t.value("source_sentence_id", s.tmpl.id);
                s.lm_loss = t.value("lm_loss", 0.0);
                if (s.tmpl.slot_count() > 1) fail(ErrorKind::kParse, "template " + s.tmpl.id + " has multiple slots");
                if (categorize(s.tmpl.tokens) != cat) {
                    fail(ErrorKind::kParse, "template " + s.tmpl.id + " does not match category " + name);
                }
                bank.add(std::move(s));
            }
        }
    } catch (const Json::exception& e) {
        fail(ErrorKind::kParse, std::string("malformed template bank: ") + e.what());
    }
    return bank;
}

TemplateBank TemplateBank::load(const std::filesystem::path& path) {
    return from_json(read_json_file(path));
}

std::string normalize_keyword(std::string_view token) {
    std::string out;
    for (char ch : token) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || c == '\'' || c == '-') out += static_cast<char>(std::tolower(c));
    }
    return out;
}

std::optional<TemplateCategory> categorize(std::span<const std::string> tokens) {
    const auto found = keywords_in(tokens);
    if (found.size() != 1) return std::nullopt;
    return *found.begin();
}

namespace {

bool is_determiner(const std::string& token) {
    static const std::set<std::string, std::less<>> kDeterminers = {
        "a", "an", "the", "this", "that", "these", "those", "another", "your", "its"};
    return kDeterminers.count(normalize_keyword(token)) != 0;
}

}  // namespace

TemplateCandidate sentence_to_template(std::span<const std::string> sentence, const ChunkAnnotation& annotation) {
    annotation.validate();
    if (!std::equal(sentence.begin(), sentence.end(), annotation.tokens.begin(), annotation.tokens.end())) {
        fail(ErrorKind::kInvalidArgument, "annotation " + annotation.sentence_id + " does not match the sentence tokens");
    }

    Template t;
    t.id = annotation.sentence_id;
    t.source_sentence_id = annotation.sentence_id;
    std::size_t pos = 0;
    for (const auto& span : annotation.spans) {
        if (span.kind != SpanKind::kNounPhrase) continue;
        // "the intersection" becomes "the <OBJECT>": the article stays with the
        // template so fills read naturally.
        std::size_t head = span.start;
        while (head + 1 < span.end && is_determiner(sentence[head])) ++head;
        t.tokens.insert(t.tokens.end(), sentence.begin() + static_cast<std::ptrdiff_t>(pos),
                        sentence.begin() + static_cast<std::ptrdiff_t>(head));
        t.tokens.emplace_back(kObjectSlot);
        pos = span.end;
    }
    t.tokens.insert(t.tokens.end(), sentence.begin() + static_cast<std::ptrdiff_t>(pos), sentence.end());

    if (t.slot_count() >= 2) return {std::nullopt, RejectReason::kMultipleObjects};
    const auto found = keywords_in(t.tokens);
    if (found.empty()) return {std::nullopt, RejectReason::kNoDirection};
    if (found.size() >= 2) return {std::nullopt, RejectReason::kMultipleDirections};
    t.category = *found.begin();
    return {std::move(t), RejectReason::kNone};
}

TemplateCandidate sentence_to_template(const ChunkAnnotation& annotation) {
    return sentence_to_template(annotation.tokens, annotation);
}

std::string fill_template(const Template& tmpl, std::optional<std::string_view> object_name) {
    std::string out;
    for (const auto& tok : tmpl.tokens) {
        if (!out.empty()) out += ' ';
        if (tok == kObjectSlot) {
            if (!object_name) {
                fail(ErrorKind::kInvalidArgument, "template " + tmpl.id + " has an object slot but no object was given");
            }
            out += *object_name;
        } else {
            out += tok;
        }
    }
    return out;
}

std::vector<std::string> tokenize(std::string_view text) {
    static constexpr std::string_view kPunct = ".,!?;:";
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) out.push_back(std::move(cur));
        cur.clear();
    };
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            flush();
        } else if (kPunct.find(ch) != std::string_view::npos) {
            flush();
            out.emplace_back(1, ch);
        } else {
            cur += ch;
        }
    }
    flush();
    return out;
}

std::vector<std::vector<std::string>> split_sentences(std::span<const std::string> tokens) {
    std::vector<std::vector<std::string>> out;
    std::vector<std::string> cur;
    for (const auto& t : tokens) {
        cur.push_back(t);
        if (t == "." || t == "!" || t == "?") {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<CorpusSentence> load_corpus(const std::filesystem::path& path) {
    std::vector<CorpusSentence> out;
    for_each_jsonl(path, [&](const Json& rec, std::size_t) {
        const auto id = rec.at("id").is_string() ? rec.at("id").get<std::string>() : rec.at("id").dump();
        const auto tokens = tokenize(rec.at("text").get<std::string>());
        const auto sentences = split_sentences(tokens);
        for (std::size_t k = 0; k < sentences.size(); ++k) {
            out.push_back({id + "#" + std::to_string(k), sentences[k]});
        }
    });
    return out;
}

namespace {

SpanKind parse_span_kind(const std::string& s) {
    if (s == "NOUN_PHRASE" || s == "NP") return SpanKind::kNounPhrase;
    if (s == "DIRECTION_WORD" || s == "DIR") return SpanKind::kDirectionWord;
    fail(ErrorKind::kInvalidArgument, "unknown span kind " + s);
}

}  // namespace

ChunkAnnotation annotation_from_json(const Json& rec) {
    ChunkAnnotation a;
    a.sentence_id = rec.at("sentence_id").get<std::string>();
    a.tokens = rec.at("tokens").get<std::vector<std::string>>();
    for (const auto& s : rec.at("spans")) {
        ChunkSpan span;
        if (s.is_array()) {
            span.start = s.at(0).get<std::size_t>();
            span.end = s.at(1).get<std::size_t>();
            span.kind = parse_span_kind(s.at(2).get<std::string>());
        } else {
            span.start = s.at("start").get<std::size_t>();
            span.end = s.at("end").get<std::size_t>();
            span.kind = parse_span_kind(s.at("kind").get<std::string>());
        }
        a.spans.push_back(span);
    }
    return a;
}

std::map<std::string, ChunkAnnotation> load_annotations(const std::filesystem::path& path) {
    std::map<std::string, ChunkAnnotation> out;
    for_each_jsonl(path, [&](const Json& rec, std::size_t line) {
        ChunkAnnotation a;
        try {
            a = annotation_from_json(rec);
            a.validate();
        } catch (const Error& e) {
            throw ParseError(path.string(), line, e.what());
        }
        auto id = a.sentence_id;
        if (!out.emplace(id, std::move(a)).second) {
            throw ParseError(path.string(), line, "duplicate sentence_id " + id);
        }
    });
    return out;
}

std::vector<Template> extract_candidates(std::span<const CorpusSentence> corpus,
                                         const std::map<std::string, ChunkAnnotation>& annotations,
                                         ExtractionStats* stats) {
    ExtractionStats local;
    std::vector<Template> out;
    std::array<std::set<std::string>, 4> seen;
    for (const auto& sentence : corpus) {
        ++local.sentences;
        const auto it = annotations.find(sentence.sentence_id);
        if (it == annotations.end()) {
            ++local.missing_annotation;
            continue;
        }
        const auto& ann = it->second;
        if (ann.tokens != sentence.tokens) {
            // The chunker's tokenization is authoritative.
            ++local.token_mismatch;
            spdlog::debug("sentence {}: annotation tokens differ from corpus tokenization", sentence.sentence_id);
        }
        auto cand = sentence_to_template(ann);
        switch (cand.reason) {
            case RejectReason::kMultipleObjects: ++local.multiple_objects; continue;
            case RejectReason::kNoDirection: ++local.no_direction; continue;
            case RejectReason::kMultipleDirections: ++local.multiple_directions; continue;
            case RejectReason::kNone: break;
        }
        auto& t = *cand.tmpl;
        if (!seen[static_cast<std::size_t>(t.category)].insert(t.text()).second) {
            ++local.duplicates;
            continue;
        }
        out.push_back(std::move(t));
    }
    if (stats) *stats = local;
    return out;
}

void LmFilterConfig::validate() const {
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
        fail(ErrorKind::kInvalidArgument, "keep_fraction must be in (0, 1]");
    }
    if (probe_objects.empty()) fail(ErrorKind::kInvalidArgument, "at least one probe object is required");
}

std::size_t keep_count(std::size_t n, double keep_fraction) {
    const double raw = keep_fraction * static_cast<double>(n);
    // Guard against 0.5 * 10 landing a hair above 5.
    const auto kept = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    return std::min(kept, n);
}

TemplateBank lm_filter(std::span<const Template> candidates, TemplateScorer& scorer, const LmFilterConfig& cfg) {
    cfg.validate();
    std::vector<ProbeRequest> requests;
    requests.reserve(candidates.size() * cfg.probe_objects.size());
    for (const auto& t : candidates) {
        for (const auto& probe : cfg.probe_objects) {
            requests.push_back({t.id, probe, fill_template(t, probe)});
        }
    }
    const auto losses = scorer.score(requests);

    TemplateBank bank;
    bank.metadata.corpus_id = cfg.corpus_id;
    bank.metadata.keep_fraction = cfg.keep_fraction;
    bank.metadata.probe_objects = cfg.probe_objects;
    bank.metadata.scorer = scorer.describe();

    struct Ranked {
        std::size_t order;
        double loss;
    };
    std::array<std::vector<Ranked>, 4> per_category;
    const std::size_t probes = cfg.probe_objects.size();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& t = candidates[i];
        ++bank.metadata.candidate_counts[static_cast<std::size_t>(t.category)];
        double sum = 0.0;
        bool ok = true;
        for (std::size_t p = 0; p < probes; ++p) {
            const std::size_t idx = i * probes + p;
            const auto& loss = idx < losses.size() ? losses[idx] : std::nullopt;
            if (!loss || !std::isfinite(*loss) || *loss < 0.0) {
                spdlog::warn("template {}: no usable loss for probe '{}', dropping it", t.id, cfg.probe_objects[p]);
                ok = false;
                break;
            }
            sum += *loss;
        }
        if (!ok) {
            ++bank.metadata.dropped_by_scorer;
            continue;
        }
        per_category[static_cast<std::size_t>(t.category)].push_back({i, sum / static_cast<double>(probes)});
    }

    std::vector<std::pair<std::size_t, double>> kept;
    for (auto& ranked : per_category) {
        std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
            return a.loss < b.loss || (a.loss == b.loss && a.order < b.order);
        });
        ranked.resize(keep_count(ranked.size(), cfg.keep_fraction));
        for (const auto& r : ranked) kept.emplace_back(r.order, r.loss);
    }
    std::sort(kept.begin(), kept.end());
    for (const auto& [order, loss] : kept) bank.add({candidates[order], loss});
    return bank;
}

const ScoredTemplate& TemplateSampler::draw(TemplateCategory category, Rng& rng) {
    const auto& list = bank_->category(category);
    if (list.empty()) {
        fail(ErrorKind::kMissingTemplate, "no templates in category " + std::string(to_string(category)));
    }
    auto& pool = remaining_[static_cast<std::size_t>(category)];
    if (pool.empty()) {
        pool.resize(list.size());
        std::iota(pool.begin(), pool.end(), std::size_t{0});
    }
    const std::size_t pick = rng.uniform_index(pool.size());
    const std::size_t index = pool[pick];
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    return list[index];
}

const ScoredTemplate& sample_template(const TemplateBank& bank, TemplateCategory category, Rng& rng) {
    TemplateSampler episode(bank);
    return episode.draw(category, rng);
}

std::vector<ReferenceComparison> compare_with_reference_counts(const TemplateBank& bank) {
    const std::size_t turn = bank.category(TemplateCategory::kTurnLeft).size() +
                             bank.category(TemplateCategory::kTurnRight).size();
    const std::array<std::tuple<std::string, std::size_t, std::size_t>, 3> groups{{
        {"turn", turn, 3004},
        {"forward", bank.category(TemplateCategory::kForward).size(), 269},
        {"stop", bank.category(TemplateCategory::kStop).size(), 92},
    }};
    std::vector<ReferenceComparison> out;
    for (const auto& [name, ours, ref] : groups) {
        ReferenceComparison c{name, ours, ref, 0.0, false};
        c.relative_deviation = std::abs(static_cast<double>(ours) - static_cast<double>(ref)) / static_cast<double>(ref);
        c.flagged = c.relative_deviation > 0.25;
        out.push_back(c);
    }
    return out;
}

}  // namespace vlnaug
