#include "ctrank/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <ostream>
#include <sstream>

#include "ctrank/error.hpp"
#include "ctrank/log.hpp"
#include "ctrank/paragraph_vectors.hpp"
#include "ctrank/retrieval.hpp"
#include "ctrank/topic_model.hpp"

namespace ctrank {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void invalid(const std::string& what) {
    throw Error(ErrorKind::InvalidConfig, what);
}

// Runs one pipeline stage, logging its duration and tagging errors with the stage name.
template <typename Fn>
auto stage(const char* name, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    auto finish = [&] {
        const auto ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        logger().info("stage {} took {:.1f} ms", name, ms);
    };
    try {
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            finish();
        } else {
            auto result = fn();
            finish();
            return result;
        }
    } catch (const Error& e) {
        throw Error(e.kind(), std::string("[") + name + "] " + e.detail(), e.line());
    }
}

std::string read_text_file(const fs::path& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, std::string("cannot open ") + what + " " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    }
}

void ensure_output_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir, ec)) {
        throw Error(ErrorKind::Io, "cannot create output directory " + dir.string());
    }
}

void require_directory(const fs::path& p, const char* what) {
    std::error_code ec;
    if (p.empty() || !fs::is_directory(p, ec)) {
        throw Error(ErrorKind::Io, std::string(what) + " is not a directory: '" + p.string() + "'");
    }
}

void require_file(const fs::path& p, const char* what) {
    std::error_code ec;
    if (p.empty() || !fs::is_regular_file(p, ec)) {
        throw Error(ErrorKind::Io, std::string(what) + " is not a readable file: '" + p.string() + "'");
    }
}

}  // namespace

void validate(const PipelineConfig& cfg) {
    if (cfg.run_tag.empty() || cfg.run_tag.find_first_of(" \t\r\n") != std::string::npos) {
        invalid("run_tag must be non-empty and contain no whitespace");
    }
    if (cfg.k_cap == 0) {
        invalid("k_cap must be at least 1");
    }
    if (cfg.cutoffs.empty()) {
        invalid("cutoffs must not be empty");
    }
    for (std::size_t k : cfg.cutoffs) {
        if (k == 0) {
            invalid("cutoffs must be positive");
        }
    }
    if (cfg.rel_threshold != 1 && cfg.rel_threshold != 2) {
        invalid("rel_threshold must be 1 or 2");
    }
    validate(cfg.embedder);
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j, PipelineConfig base) {
    if (!j.is_object()) {
        invalid("config must be a JSON object");
    }
    try {
        if (j.contains("corpus_dir")) {
            base.corpus_dir = j.at("corpus_dir").get<std::string>();
        }
        if (j.contains("topics_path")) {
            base.topics_path = j.at("topics_path").get<std::string>();
        }
        if (j.contains("qrels_path")) {
            const auto& q = j.at("qrels_path");
            base.qrels_path = q.is_null() ? std::nullopt : std::optional<fs::path>(q.get<std::string>());
        }
        if (j.contains("output_dir")) {
            base.output_dir = j.at("output_dir").get<std::string>();
        }
        base.run_tag = j.value("run_tag", base.run_tag);
        base.k_cap = j.value("k_cap", base.k_cap);
        base.cutoffs = j.value("cutoffs", base.cutoffs);
        base.rel_threshold = j.value("rel_threshold", base.rel_threshold);
        base.topic_format = j.value("topic_format", base.topic_format);
        base.threads = j.value("threads", base.threads);
        base.remote_initial_backoff_ms = j.value("remote_initial_backoff_ms", base.remote_initial_backoff_ms);
        if (j.contains("embedder")) {
            base.embedder = embedder_config_from_json(j.at("embedder"), base.embedder);
        }
    } catch (const nlohmann::json::exception& e) {
        invalid(std::string("bad config: ") + e.what());
    }
    return base;
}

nlohmann::ordered_json to_json(const PipelineConfig& cfg) {
    nlohmann::ordered_json j;
    j["corpus_dir"] = cfg.corpus_dir.generic_string();
    j["topics_path"] = cfg.topics_path.generic_string();
    j["qrels_path"] = cfg.qrels_path ? nlohmann::ordered_json(cfg.qrels_path->generic_string()) : nullptr;
    j["output_dir"] = cfg.output_dir.generic_string();
    j["run_tag"] = cfg.run_tag;
    j["k_cap"] = cfg.k_cap;
    j["cutoffs"] = cfg.cutoffs;
    j["rel_threshold"] = cfg.rel_threshold;
    j["topic_format"] = cfg.topic_format;
    j["threads"] = cfg.threads;
    j["remote_initial_backoff_ms"] = cfg.remote_initial_backoff_ms;
    j["embedder"] = to_json(cfg.embedder);
    return j;
}

std::string dump_config(const PipelineConfig& cfg) {
    return to_json(cfg).dump(2) + "\n";
}

PipelineConfig load_config_file(const fs::path& path, PipelineConfig base) {
    const std::string text = read_text_file(path, "config file");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        invalid("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return pipeline_config_from_json(j, std::move(base));
}

IngestResult cmd_ingest(const PipelineConfig& cfg, std::ostream& out) {
    require_directory(cfg.corpus_dir, "corpus_dir");
    if (!cfg.topics_path.empty()) {
        require_file(cfg.topics_path, "topics_path");
    }
    ensure_output_dir(cfg.output_dir);

    IngestResult result;
    result.corpus = stage("ingest", [&] { return load_corpus(cfg.corpus_dir, cfg.threads); });
    const CorpusStats& s = result.corpus.stats;
    out << "docs=" << s.doc_count << " empty_description=" << s.empty_description_count
        << " missing_eligibility=" << s.missing_eligibility_count << " parse_failures=" << s.parse_failure_count
        << "\n";
    if (s.doc_count == 0) {
        throw Error(ErrorKind::EmptyCorpus, "[ingest] no trial parsed under " + cfg.corpus_dir.string());
    }
    result.corpus_dump = cfg.output_dir / "corpus.jsonl";
    write_text_file(result.corpus_dump, dump_corpus_jsonl(result.corpus.docs));

    if (!cfg.topics_path.empty()) {
        const auto topics = stage("topics", [&] {
            return topic_reader(cfg.topic_format)(read_text_file(cfg.topics_path, "topics file"));
        });
        result.topics_dump = cfg.output_dir / "topics.json";
        write_text_file(*result.topics_dump, dump_topics_json(topics));
    }
    return result;
}

RunResult cmd_run(const PipelineConfig& cfg) {
    validate(cfg);
    require_directory(cfg.corpus_dir, "corpus_dir");
    require_file(cfg.topics_path, "topics_path");
    ensure_output_dir(cfg.output_dir);

    const Corpus corpus = stage("ingest", [&] { return load_corpus(cfg.corpus_dir, cfg.threads); });
    if (corpus.docs.empty()) {
        throw Error(ErrorKind::EmptyCorpus, "[ingest] no trial parsed under " + cfg.corpus_dir.string());
    }
    const std::vector<Topic> topics = stage("topics", [&] {
        return topic_reader(cfg.topic_format)(read_text_file(cfg.topics_path, "topics file"));
    });

    std::vector<TextItem> doc_items;
    doc_items.reserve(corpus.docs.size());
    for (const ClinicalTrialDoc& doc : corpus.docs) {
        doc_items.push_back({doc.nct_id, document_text(doc, cfg.embedder.doc_fields)});
    }
    std::vector<TextItem> topic_items;
    topic_items.reserve(topics.size());
    for (const Topic& t : topics) {
        topic_items.push_back({t.topic_id, t.query_text});
    }

    RunResult result;
    RemoteOptions remote;
    remote.initial_backoff = std::chrono::milliseconds(cfg.remote_initial_backoff_ms);

    EmbeddedCollections embedded;
    if (cfg.embedder.backend == Backend::pv_dbow || cfg.embedder.backend == Backend::pv_dm) {
        const ParagraphVectorModel model =
            stage("train", [&] { return train_paragraph_vectors(doc_items, cfg.embedder); });
        result.model_file = cfg.output_dir / (cfg.run_tag + ".pvmodel");
        model.save(*result.model_file);
        stage("embed", [&] {
            embedded.documents = model.document_vectors();
            for (const TextItem& t : topic_items) {
                embedded.topics.push_back(model.infer_vector(t.text, t.id));
            }
        });
    } else {
        embedded = stage("embed", [&] {
            return embed_collections(doc_items, topic_items, cfg.embedder, remote, cfg.threads);
        });
    }

    const RankedRun run = stage("rank", [&] {
        const DocumentIndex index(embedded.documents);
        return rank_all(embedded.topics, index, cfg.k_cap, cfg.run_tag, cfg.threads);
    });
    result.run_file = cfg.output_dir / (cfg.run_tag + ".run");
    stage("emit", [&] { emit_run_file(run, result.run_file); });
    result.topic_count = topics.size();
    result.doc_count = corpus.docs.size();
    return result;
}

MetricReport cmd_eval(const EvalRequest& request, std::ostream& out) {
    require_file(request.run_path, "run file");
    require_file(request.qrels_path, "qrels file");
    const RankedRun run = stage("parse-run", [&] { return parse_run_file(request.run_path); });
    const QrelSet qrels = stage("parse-qrels", [&] { return parse_qrels_file(request.qrels_path); });
    MetricReport report =
        stage("evaluate", [&] { return evaluate_run(run, qrels, request.cutoffs, request.rel_threshold); });
    ensure_output_dir(request.output_dir);
    stage("report", [&] { emit_report(report, request.output_dir); });
    out << format_report_table(report);
    return report;
}

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidConfig:
            return 1;
        case ErrorKind::RemoteUnavailable:
        case ErrorKind::MalformedResponse:
            return 3;
        default:
            return 2;
    }
}

}  // namespace ctrank
