#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ctrank {

/// One parsed clinical trial record.
struct ClinicalTrialDoc {
    std::string nct_id;
    std::string brief_summary;
    std::string detailed_description;
    std::string inclusion;
    std::string exclusion;
    /// Criteria text as found in the record, followed by any other
    /// <eligibility> sub-fields rendered as "name: value" lines.
    std::string raw_eligibility;

    bool operator==(const ClinicalTrialDoc&) const = default;
};

struct CorpusStats {
    std::size_t doc_count = 0;
    std::size_t empty_description_count = 0;
    std::size_t missing_eligibility_count = 0;
    std::size_t parse_failure_count = 0;

    bool operator==(const CorpusStats&) const = default;
};

struct EligibilityPassages {
    std::string inclusion;
    std::string exclusion;

    bool operator==(const EligibilityPassages&) const = default;
};

/// Splits criteria text into inclusion and exclusion passages.
///
/// Headers match `(inclusion|exclusion)\s+criteria\s*:?`, case-insensitive.
/// A header at the start of a line (ignoring leading blanks) wins over one in
/// the middle of a line; among equals the first occurrence wins. Text before
/// the exclusion header (minus the inclusion header, if one precedes it) is the
/// inclusion passage, text after it is the exclusion passage. Both passages are
/// passed through clean_text. No exclusion header means an empty exclusion
/// passage.
EligibilityPassages segment_eligibility(std::string_view raw);

/// Parses one ClinicalTrials.gov-style record.
/// Throws Error{MalformedXml} or Error{MissingId}.
ClinicalTrialDoc parse_trial_xml(std::string_view xml_text);

struct Corpus {
    std::vector<ClinicalTrialDoc> docs;  // sorted by nct_id
    CorpusStats stats;
};

/// Recursively loads every `*.xml` file under `root`. Files that fail to parse
/// are counted, logged and skipped; the first file (in path order) wins when
/// two share an nct_id. Throws Error{Io} if `root` is not a readable directory.
Corpus load_corpus(const std::filesystem::path& root, unsigned threads = 0);

/// One JSON object per doc, fixed field order, newline-terminated.
std::string dump_corpus_jsonl(const std::vector<ClinicalTrialDoc>& docs);

}  // namespace ctrank
