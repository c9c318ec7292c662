// ctrank: clinical-trial retrieval and TREC-style evaluation.
//
//   ctrank ingest      --config cfg.json [overrides]
//   ctrank run         --config cfg.json [overrides]
//   ctrank eval        --run r.run --qrels q.txt [--cutoffs 5,10,15,20] [--rel-threshold 2]
//   ctrank dump-config --config cfg.json [overrides]
//
// Values are resolved as: built-in defaults, then --config, then flags.
// Exit codes: 0 ok, 1 usage, 2 data error, 3 remote error.
// CTRANK_LOG_LEVEL sets log verbosity (stderr).

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "ctrank/error.hpp"
#include "ctrank/log.hpp"
#include "ctrank/pipeline.hpp"

namespace {

using ctrank::PipelineConfig;

struct Overrides {
    std::string config_path;
    std::optional<std::string> corpus_dir;
    std::optional<std::string> topics;
    std::optional<std::string> qrels;
    std::optional<std::string> output_dir;
    std::optional<std::string> run_tag;
    std::optional<std::size_t> k_cap;
    std::optional<std::vector<std::size_t>> cutoffs;
    std::optional<int> rel_threshold;
    std::optional<unsigned> threads;
    std::optional<std::string> backend;
    std::optional<std::size_t> dim;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> doc_fields;
    std::optional<std::string> remote_url;
    std::optional<std::size_t> epochs;
};

void add_overrides(CLI::App& cmd, Overrides& o) {
    cmd.add_option("-c,--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
    cmd.add_option("--corpus-dir", o.corpus_dir, "Directory of trial XML files");
    cmd.add_option("--topics", o.topics, "Topic XML file");
    cmd.add_option("--qrels", o.qrels, "Qrels file");
    cmd.add_option("-o,--output-dir", o.output_dir, "Output directory");
    cmd.add_option("--run-tag", o.run_tag, "Run tag (no whitespace)");
    cmd.add_option("--k-cap", o.k_cap, "Documents kept per topic");
    cmd.add_option("--cutoffs", o.cutoffs, "Metric cutoffs")->delimiter(',');
    cmd.add_option("--rel-threshold", o.rel_threshold, "Minimum grade counted as relevant")->check(CLI::Range(1, 2));
    cmd.add_option("--threads", o.threads, "Worker threads (0 = all cores)");
    cmd.add_option("--backend", o.backend, "hashed_tfidf | pv_dbow | pv_dm | remote");
    cmd.add_option("--dim", o.dim, "Embedding dimension");
    cmd.add_option("--seed", o.seed, "Random seed");
    cmd.add_option("--doc-fields", o.doc_fields, "summary | summary_description | summary_description_inclusion");
    cmd.add_option("--remote-url", o.remote_url, "Embedding service URL");
    cmd.add_option("--epochs", o.epochs, "Paragraph-vector epochs");
}

PipelineConfig resolve(const Overrides& o) {
    PipelineConfig cfg;
    if (!o.config_path.empty()) {
        cfg = ctrank::load_config_file(o.config_path, cfg);
    }
    if (o.corpus_dir) cfg.corpus_dir = *o.corpus_dir;
    if (o.topics) cfg.topics_path = *o.topics;
    if (o.qrels) cfg.qrels_path = *o.qrels;
    if (o.output_dir) cfg.output_dir = *o.output_dir;
    if (o.run_tag) cfg.run_tag = *o.run_tag;
    if (o.k_cap) cfg.k_cap = *o.k_cap;
    if (o.cutoffs) cfg.cutoffs = *o.cutoffs;
    if (o.rel_threshold) cfg.rel_threshold = *o.rel_threshold;
    if (o.threads) cfg.threads = *o.threads;

    nlohmann::json embedder = nlohmann::json::object();
    if (o.backend) embedder["backend"] = *o.backend;
    if (o.dim) embedder["dim"] = *o.dim;
    if (o.seed) embedder["seed"] = *o.seed;
    if (o.doc_fields) embedder["doc_fields"] = *o.doc_fields;
    if (o.remote_url) embedder["remote_url"] = *o.remote_url;
    if (o.epochs) embedder["pv"] = {{"epochs", *o.epochs}};
    cfg.embedder = ctrank::embedder_config_from_json(embedder, cfg.embedder);
    ctrank::validate(cfg);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Clinical-trial retrieval and TREC-style evaluation"};
    app.require_subcommand(1);

    Overrides ingest_opts;
    auto* ingest = app.add_subcommand("ingest", "Parse the trial corpus and dump it as JSON lines");
    add_overrides(*ingest, ingest_opts);

    Overrides run_opts;
    auto* run = app.add_subcommand("run", "Embed, rank and write a TREC run file");
    add_overrides(*run, run_opts);

    Overrides dump_opts;
    auto* dump = app.add_subcommand("dump-config", "Print the resolved configuration");
    add_overrides(*dump, dump_opts);

    ctrank::EvalRequest eval_req;
    std::string eval_config;
    std::optional<std::string> eval_qrels;
    std::optional<std::vector<std::size_t>> eval_cutoffs;
    std::optional<int> eval_threshold;
    std::optional<std::string> eval_out;
    auto* eval = app.add_subcommand("eval", "Score a run file against qrels");
    eval->add_option("--run", eval_req.run_path, "Run file")->required();
    eval->add_option("--qrels", eval_qrels, "Qrels file");
    eval->add_option("-c,--config", eval_config, "Config supplying qrels/cutoffs/threshold")
        ->check(CLI::ExistingFile);
    eval->add_option("--cutoffs", eval_cutoffs, "Metric cutoffs")->delimiter(',');
    eval->add_option("--rel-threshold", eval_threshold, "Minimum grade counted as relevant")
        ->check(CLI::Range(1, 2));
    eval->add_option("-o,--output-dir", eval_out, "Directory for per_topic.csv and summary.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*ingest) {
            ctrank::cmd_ingest(resolve(ingest_opts), std::cout);
        } else if (*run) {
            const auto result = ctrank::cmd_run(resolve(run_opts));
            std::cout << "wrote " << result.run_file.string() << " (" << result.topic_count << " topics, "
                      << result.doc_count << " docs)\n";
        } else if (*dump) {
            std::cout << ctrank::dump_config(resolve(dump_opts));
        } else if (*eval) {
            PipelineConfig cfg;
            if (!eval_config.empty()) {
                cfg = ctrank::load_config_file(eval_config, cfg);
            }
            if (eval_qrels) {
                cfg.qrels_path = *eval_qrels;
            }
            if (!cfg.qrels_path) {
                std::cerr << "eval needs --qrels or a config with qrels_path\n";
                return 1;
            }
            eval_req.qrels_path = *cfg.qrels_path;
            eval_req.cutoffs = eval_cutoffs.value_or(cfg.cutoffs);
            eval_req.rel_threshold = eval_threshold.value_or(cfg.rel_threshold);
            eval_req.output_dir = eval_out ? std::filesystem::path(*eval_out) : cfg.output_dir;
            ctrank::cmd_eval(eval_req, std::cout);
        }
    } catch (const ctrank::Error& e) {
        ctrank::logger().error("{}", e.what());
        return ctrank::exit_code_for(e.kind());
    } catch (const std::exception& e) {
        ctrank::logger().error("{}", e.what());
        return 2;
    }
    return 0;
}
