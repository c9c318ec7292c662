#include "ctrank/trial_corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "ctrank/error.hpp"
#include "ctrank/log.hpp"
#include "ctrank/parallel.hpp"
#include "ctrank/text.hpp"
#include "ctrank/xml.hpp"

namespace ctrank {

namespace fs = std::filesystem;

namespace {

struct HeaderMatch {
    std::size_t begin;
    std::size_t end;
    bool exclusion;
    bool line_start;
};

bool at_line_start(std::string_view text, std::size_t pos) {
    while (pos > 0 && (text[pos - 1] == ' ' || text[pos - 1] == '\t')) {
        --pos;
    }
    return pos == 0 || text[pos - 1] == '\n' || text[pos - 1] == '\r';
}

std::vector<HeaderMatch> find_headers(std::string_view text) {
    static const std::regex header(R"((inclusion|exclusion)\s+criteria\s*:?)",
                                   std::regex::ECMAScript | std::regex::icase);
    std::vector<HeaderMatch> found;
    using Iter = std::regex_iterator<std::string_view::const_iterator>;
    for (Iter it(text.begin(), text.end(), header), end; it != end; ++it) {
        const auto& m = *it;
        const auto begin = static_cast<std::size_t>(m.position(0));
        const auto word = to_lower_ascii(m.str(1));
        found.push_back({begin, begin + static_cast<std::size_t>(m.length(0)), word == "exclusion",
                         at_line_start(text, begin)});
    }
    return found;
}

// Line-start matches take precedence; otherwise the first match.
std::optional<HeaderMatch> pick(const std::vector<HeaderMatch>& candidates) {
    for (const auto& h : candidates) {
        if (h.line_start) {
            return h;
        }
    }
    if (!candidates.empty()) {
        return candidates.front();
    }
    return std::nullopt;
}

std::string block_text(const xml::Element& element) {
    if (const xml::Element* block = element.child("textblock")) {
        return block->text();
    }
    return element.text();
}

std::string find_block(const xml::Element& root, std::string_view tag) {
    const xml::Element* element = root.child(tag);
    if (element == nullptr) {
        element = root.find(tag);
    }
    return element == nullptr ? std::string() : clean_text(block_text(*element));
}

std::string find_id(const xml::Element& root) {
    const xml::Element* id_info = root.name == "id_info" ? &root : root.find("id_info");
    if (id_info != nullptr) {
        for (std::string_view tag : {"nct_id", "org_study_id", "secondary_id"}) {
            if (const xml::Element* e = id_info->child(tag)) {
                std::string id = clean_text(e->text());
                if (!id.empty()) {
                    return id;
                }
            }
        }
    }
    if (const xml::Element* e = root.find("nct_id")) {
        return clean_text(e->text());
    }
    return {};
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) {
        throw Error(ErrorKind::Io, "cannot read " + path.string());
    }
    return buffer.str();
}

}  // namespace

EligibilityPassages segment_eligibility(std::string_view raw) {
    const std::vector<HeaderMatch> headers = find_headers(raw);

    std::vector<HeaderMatch> exclusions;
    for (const auto& h : headers) {
        if (h.exclusion) {
            exclusions.push_back(h);
        }
    }
    const std::optional<HeaderMatch> exclusion = pick(exclusions);
    const std::size_t inclusion_limit = exclusion ? exclusion->begin : raw.size();

    std::vector<HeaderMatch> inclusions;
    for (const auto& h : headers) {
        if (!h.exclusion && h.end <= inclusion_limit) {
            inclusions.push_back(h);
        }
    }
    const std::optional<HeaderMatch> inclusion = pick(inclusions);

    std::string inclusion_text;
    if (inclusion) {
        inclusion_text = std::string(raw.substr(0, inclusion->begin));
        inclusion_text += ' ';
        inclusion_text += raw.substr(inclusion->end, inclusion_limit - inclusion->end);
    } else {
        inclusion_text = std::string(raw.substr(0, inclusion_limit));
    }

    EligibilityPassages out;
    out.inclusion = clean_text(inclusion_text);
    if (exclusion) {
        out.exclusion = clean_text(raw.substr(exclusion->end));
    }
    return out;
}

ClinicalTrialDoc parse_trial_xml(std::string_view xml_text) {
    const std::string text = sanitize_utf8(xml_text);
    const xml::Element root = xml::parse(text);

    ClinicalTrialDoc doc;
    doc.nct_id = find_id(root);
    if (doc.nct_id.empty()) {
        throw Error(ErrorKind::MissingId, "no trial identifier in <id_info>");
    }
    doc.brief_summary = find_block(root, "brief_summary");
    doc.detailed_description = find_block(root, "detailed_description");

    const xml::Element* eligibility = root.child("eligibility");
    if (eligibility == nullptr) {
        eligibility = root.find("eligibility");
    }
    if (eligibility == nullptr) {
        return doc;
    }

    const xml::Element* criteria = eligibility->child("criteria");
    const std::string criteria_text = criteria != nullptr ? block_text(*criteria) : eligibility->own_text();
    std::string raw = criteria_text;
    for (const xml::Element& sub : eligibility->elements()) {
        if (&sub == criteria) {
            continue;
        }
        const std::string value = clean_text(sub.text());
        if (!value.empty()) {
            raw += "\n" + sub.name + ": " + value;
        }
    }
    doc.raw_eligibility = std::move(raw);

    EligibilityPassages passages = segment_eligibility(criteria_text);
    doc.inclusion = std::move(passages.inclusion);
    doc.exclusion = std::move(passages.exclusion);
    return doc;
}

Corpus load_corpus(const fs::path& root, unsigned threads) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) {
        throw Error(ErrorKind::Io, "corpus root is not a readable directory: " + root.string());
    }

    std::vector<fs::path> files;
    fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
    if (ec) {
        throw Error(ErrorKind::Io, "cannot enumerate " + root.string() + ": " + ec.message());
    }
    for (const fs::recursive_directory_iterator end; it != end; it.increment(ec)) {
        if (ec) {
            throw Error(ErrorKind::Io, "cannot enumerate " + root.string() + ": " + ec.message());
        }
        if (it->is_regular_file(ec) && it->path().extension() == ".xml") {
            files.push_back(it->path());
        }
    }
    std::sort(files.begin(), files.end());

    std::vector<std::optional<ClinicalTrialDoc>> parsed(files.size());
    parallel_for(files.size(), threads, [&](std::size_t i) {
        try {
            parsed[i] = parse_trial_xml(read_file(files[i]));
        } catch (const Error& e) {
            logger().warn("skipping {}: {}", files[i].string(), e.what());
        }
    });

    Corpus corpus;
    std::map<std::string, std::size_t, std::less<>> first_seen;
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (!parsed[i]) {
            ++corpus.stats.parse_failure_count;
            continue;
        }
        ClinicalTrialDoc& doc = *parsed[i];
        if (auto hit = first_seen.find(doc.nct_id); hit != first_seen.end()) {
            logger().warn("duplicate {} in {} (keeping {})", doc.nct_id, files[i].string(),
                          files[hit->second].string());
            continue;
        }
        first_seen.emplace(doc.nct_id, i);
        if (doc.detailed_description.empty()) {
            ++corpus.stats.empty_description_count;
        }
        if (doc.inclusion.empty() && doc.exclusion.empty()) {
            ++corpus.stats.missing_eligibility_count;
        }
        corpus.docs.push_back(std::move(doc));
    }
    std::sort(corpus.docs.begin(), corpus.docs.end(),
              [](const ClinicalTrialDoc& a, const ClinicalTrialDoc& b) { return a.nct_id < b.nct_id; });
    corpus.stats.doc_count = corpus.docs.size();
    return corpus;
}

std::string dump_corpus_jsonl(const std::vector<ClinicalTrialDoc>& docs) {
    std::string out;
    for (const auto& doc : docs) {
        nlohmann::ordered_json row;
        row["nct_id"] = doc.nct_id;
        row["brief_summary"] = doc.brief_summary;
        row["detailed_description"] = doc.detailed_description;
        row["inclusion"] = doc.inclusion;
        row["exclusion"] = doc.exclusion;
        row["raw_eligibility"] = doc.raw_eligibility;
        out += row.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
        out += '\n';
    }
    return out;
}

}  // namespace ctrank
