#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctrank/embedder.hpp"
#include "ctrank/error.hpp"
#include "ctrank/evaluation.hpp"
#include "ctrank/trial_corpus.hpp"

namespace ctrank {

struct PipelineConfig {
    std::filesystem::path corpus_dir;
    std::filesystem::path topics_path;
    std::optional<std::filesystem::path> qrels_path;
    std::filesystem::path output_dir = "out";
    std::string run_tag = "ctrank";
    std::size_t k_cap = kDefaultTopK;
    std::vector<std::size_t> cutoffs{5, 10, 15, 20};
    int rel_threshold = 2;
    std::string topic_format = "canonical";
    /// 0 = one worker per hardware thread.
    unsigned threads = 0;
    std::size_t remote_initial_backoff_ms = 200;
    EmbedderConfig embedder;

    bool operator==(const PipelineConfig&) const = default;
};

/// Checks field invariants (not paths). Throws Error{InvalidConfig}.
void validate(const PipelineConfig& cfg);

/// Keys absent from `j` keep the value they have in `base`.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j, PipelineConfig base = {});
nlohmann::ordered_json to_json(const PipelineConfig& cfg);

/// Canonical text form: two-space indented JSON with a trailing newline.
std::string dump_config(const PipelineConfig& cfg);
PipelineConfig load_config_file(const std::filesystem::path& path, PipelineConfig base = {});

struct IngestResult {
    Corpus corpus;
    std::filesystem::path corpus_dump;
    std::optional<std::filesystem::path> topics_dump;
};

/// Loads the corpus, writes <output_dir>/corpus.jsonl (and topics.json when a
/// topics file is configured), prints a stats line to `out`.
/// Throws Error{EmptyCorpus} when no document parsed.
IngestResult cmd_ingest(const PipelineConfig& cfg, std::ostream& out);

struct RunResult {
    std::filesystem::path run_file;
    std::optional<std::filesystem::path> model_file;
    std::size_t topic_count = 0;
    std::size_t doc_count = 0;
};

/// ingest -> embed -> rank -> emit. Writes <output_dir>/<run_tag>.run and, for
/// paragraph-vector backends, <output_dir>/<run_tag>.pvmodel.
RunResult cmd_run(const PipelineConfig& cfg);

struct EvalRequest {
    std::filesystem::path run_path;
    std::filesystem::path qrels_path;
    std::vector<std::size_t> cutoffs{5, 10, 15, 20};
    int rel_threshold = 2;
    std::filesystem::path output_dir = "out";
};

/// Scores a run file, writes per_topic.csv and summary.csv into output_dir and
/// prints the summary tables to `out`.
MetricReport cmd_eval(const EvalRequest& request, std::ostream& out);

/// Process exit code for a library error: 1 usage/config, 2 data, 3 remote.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace ctrank
