// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "ctrank/error.hpp"
#include "ctrank/evaluation.hpp"
#include "ctrank/log.hpp"
#include "ctrank/paragraph_vectors.hpp"
#include "ctrank/pipeline.hpp"
#include "ctrank/retrieval.hpp"
#include "ctrank/topic_model.hpp"
#include "ctrank/trial_corpus.hpp"
#include "oracles.hpp"
#include "stub_server.hpp"

using namespace ctrank;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

const fs::path kData(CTRANK_TEST_DATA);

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Outcome metric_oracle() {
    Outcome o;
    const auto start = Clock::now();
    std::mt19937_64 rng(20231);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const oracle::Instance in = oracle::random_instance(rng);
        const TopicJudgments judged(in.grades.begin(), in.grades.end());
        for (std::size_t k : {5u, 10u, 15u, 20u}) {
            worst = std::max(worst, std::abs(ndcg_at_k(in.ranking, judged, k) - oracle::brute_ndcg(in, k)));
            worst = std::max(worst, std::abs(precision_at_k(in.ranking, judged, k, 2) -
                                             oracle::brute_precision(in, k, 2)));
            worst = std::max(worst, std::abs(average_precision_at_k(in.ranking, judged, k, 2) -
                                             oracle::brute_ap(in, k, 2)));
            worst = std::max(worst, std::abs(recall_at_k(in.ranking, judged, k, 2) -
                                             oracle::brute_recall(in, k, 2)));
        }
    }
    const double elapsed = seconds_since(start);
    o.require(worst <= 1e-9, "max abs difference " + std::to_string(worst));
    o.require(elapsed < 5.0, "took " + std::to_string(elapsed) + " s");
    if (o.pass) {
        o.detail = "max diff " + std::to_string(worst) + ", " + std::to_string(elapsed) + " s";
    }
    return o;
}

Outcome worked_ndcg() {
    Outcome o;
    const std::vector<std::string> ranked{"d1", "d2", "d3"};
    const TopicJudgments judged{{"d1", 2}, {"d2", 0}, {"d3", 1}};
    const double v = ndcg_at_k(ranked, judged, 3);
    o.require(std::abs(v - 0.950234) <= 1e-6, "NDCG@3 = " + std::to_string(v));
    o.detail = "NDCG@3 = " + std::to_string(v);
    return o;
}

Outcome cosine_properties() {
    Outcome o;
    std::mt19937_64 rng(99);
    std::normal_distribution<float> g;
    auto vec = [&](std::size_t n) {
        std::vector<float> v(n);
        for (auto& x : v) x = g(rng);
        return v;
    };
    for (int i = 0; i < 1000; ++i) {
        const auto a = vec(64), b = vec(64);
        const double ab = cosine_similarity(a, b);
        o.require(std::abs(ab - cosine_similarity(b, a)) <= 1e-12, "asymmetric");
        o.require(ab >= -1.0 && ab <= 1.0, "out of range: " + std::to_string(ab));
        o.require(std::abs(cosine_similarity(a, a) - 1.0) <= 1e-12, "self-similarity != 1");
        // Power-of-two factors scale float vectors exactly.
        for (float s : {0.5f, 4.0f, 1024.0f}) {
            auto scaled = a;
            for (auto& x : scaled) x *= s;
            o.require(std::abs(cosine_similarity(scaled, b) - ab) <= 1e-9, "not scale invariant");
        }
    }
    const std::vector<float> x{1, 0, 0, 0}, y{0, 0, 3, 0};
    o.require(cosine_similarity(x, y) == 0.0, "orthogonal pair not 0");
    return o;
}

Outcome end_to_end() {
    Outcome o;
    const fs::path out = fs::temp_directory_path() / "ctrank_acceptance_e2e";
    fs::remove_all(out);
    PipelineConfig cfg;
    cfg.corpus_dir = kData / "mini_corpus";
    cfg.topics_path = kData / "topics.xml";
    cfg.output_dir = out;
    cfg.run_tag = "e2e";
    cfg.embedder.backend = Backend::hashed_tfidf;
    cfg.embedder.seed = 42;
    std::string first;
    for (int i = 0; i < 3; ++i) {
        const std::string text = read(cmd_run(cfg).run_file);
        if (i == 0) {
            first = text;
        }
        o.require(!text.empty() && text == first, "run file differs on invocation " + std::to_string(i + 1));
    }
    const Corpus corpus = load_corpus(cfg.corpus_dir);
    const auto topics = parse_topics(read(cfg.topics_path));
    o.require(corpus.docs.size() >= 20 && topics.size() >= 3, "mini corpus too small");

    // R = 5 eligible trials per topic, so every metric is exactly 1 at cutoff 5;
    // NDCG is also 1 at every cutoff because the excluded trial follows.
    std::ostringstream table;
    const MetricReport at5 = cmd_eval({kData / "perfect.run", kData / "qrels.txt", {5}, 2, out / "eval5"}, table);
    for (Metric m : kAllMetrics) {
        o.require(std::abs(at5.mean(m, 5) - 1.0) <= 1e-12, std::string(to_string(m)) + "@5 != 1");
    }
    const MetricReport all =
        cmd_eval({kData / "perfect.run", kData / "qrels.txt", {5, 10, 15, 20}, 2, out / "eval"}, table);
    for (std::size_t k : all.cutoffs) {
        o.require(std::abs(all.mean(Metric::ndcg, k) - 1.0) <= 1e-12, "ndcg@" + std::to_string(k) + " != 1");
    }
    fs::remove_all(out);
    return o;
}

Outcome top_k() {
    Outcome o;
    std::mt19937_64 rng(5);
    std::normal_distribution<float> g;
    std::vector<EmbeddingVector> docs, topics;
    for (int i = 0; i < 1500; ++i) {
        EmbeddingVector v{"NCT" + std::to_string(1000000 + i), std::vector<float>(48)};
        for (auto& x : v.values) x = g(rng);
        docs.push_back(std::move(v));
    }
    for (int t = 1; t <= 3; ++t) {
        EmbeddingVector v{std::to_string(t), std::vector<float>(48)};
        for (auto& x : v.values) x = g(rng);
        topics.push_back(std::move(v));
    }
    const RankedRun run = rank_all(topics, DocumentIndex(docs), 1000, "topk");
    const RankedRun reparsed = parse_run(format_run(run));
    for (const RankedRun* r : {&run, &reparsed}) {
        for (const auto& t : r->topics) {
            o.require(t.entries.size() == 1000, "topic " + t.topic_id + " has " + std::to_string(t.entries.size()));
            for (std::size_t i = 0; i < t.entries.size(); ++i) {
                o.require(t.entries[i].rank == i + 1, "rank gap");
                o.require(i == 0 || t.entries[i].score <= t.entries[i - 1].score, "score increases");
            }
        }
    }
    return o;
}

Outcome segmentation() {
    Outcome o;
    int exact = 0;
    for (const auto& c : oracle::segmentation_cases()) {
        const auto p = segment_eligibility(c.raw);
        const bool ok = p.inclusion == c.inclusion && p.exclusion == c.exclusion;
        exact += ok ? 1 : 0;
        o.require(ok, std::string("case failed: ") + c.raw);
    }
    std::mt19937_64 rng(500);
    for (int i = 0; i < 500; ++i) {
        const auto s = oracle::random_criteria(rng);
        const auto p = segment_eligibility(s.raw);
        o.require(oracle::words(p.inclusion) == s.inclusion_words && oracle::words(p.exclusion) == s.exclusion_words,
                  "lossless property broken on sample " + std::to_string(i));
    }
    if (o.pass) {
        o.detail = std::to_string(exact) + "/20 cases, 500/500 samples";
    }
    return o;
}

Outcome pv_dbow() {
    Outcome o;
    const auto start = Clock::now();
    const auto toy = oracle::toy_corpus();
    std::vector<TextItem> items;
    for (std::size_t i = 0; i < toy.texts.size(); ++i) {
        items.push_back({"doc" + std::to_string(i), toy.texts[i]});
    }
    int wins = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        EmbedderConfig cfg;
        cfg.backend = Backend::pv_dbow;
        cfg.dim = 50;
        cfg.seed = seed;
        cfg.pv = PvConfig{};
        const auto model = train_paragraph_vectors(items, cfg);
        const auto v0 = model.document_vector("doc0").values;
        if (oracle::cosine(v0, model.document_vector("doc1").values) >
            oracle::cosine(v0, model.document_vector("doc2").values)) {
            ++wins;
        }
        const auto& loss = model.training_log().epoch_mean_loss;
        o.require(!loss.empty() && loss.back() < loss.front(), "loss did not fall for seed " + std::to_string(seed));
    }
    o.require(wins >= 19, "duplicate pair closer on only " + std::to_string(wins) + "/20 seeds");

    // One analytic step against central differences of the loss.
    std::mt19937_64 rng(77);
    std::normal_distribution<double> g(0.0, 0.5);
    const std::size_t dim = 16, vocab = 10;
    std::vector<double> h(dim), out(vocab * dim), delta(dim, 0.0);
    for (auto& x : h) x = g(rng);
    for (auto& x : out) x = g(rng);
    const std::vector<std::size_t> noise{1, 4, 6, 9, 3};
    const double lr = 0.05;
    auto out_copy = out;
    negative_sampling_step<double>(h, delta, out_copy, 0, noise, lr, false);
    double err = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
        auto hp = h, hm = h;
        hp[j] += 1e-5;
        hm[j] -= 1e-5;
        const double fd = (oracle::ns_loss(hp, out, dim, 0, noise) - oracle::ns_loss(hm, out, dim, 0, noise)) / 2e-5;
        err = std::max(err, std::abs(-delta[j] / lr - fd));
        scale = std::max(scale, std::abs(fd));
    }
    o.require(err / scale < 1e-4, "gradient relative error " + std::to_string(err / scale));
    const double elapsed = seconds_since(start);
    o.require(elapsed < 60.0, "took " + std::to_string(elapsed) + " s");
    if (o.pass) {
        o.detail = std::to_string(wins) + "/20 seeds, grad rel err " + std::to_string(err / scale) + ", " +
                   std::to_string(elapsed) + " s";
    }
    return o;
}

Outcome round_trips() {
    Outcome o;
    const std::string run_text = "1 Q0 NCT001 1 0.500000 v1tmurun\n1 Q0 NCT002 2 0.250000 v1tmurun\n"
                                 "2 Q0 NCT002 1 0.125000 v1tmurun\n";
    o.require(format_run(parse_run(run_text)) == run_text, "run file round trip");
    const std::string perfect = read(kData / "perfect.run");
    o.require(format_run(parse_run(perfect)) == perfect, "perfect.run round trip");

    const auto topics = parse_topics(read(kData / "topics.xml"));
    const std::string dumped = dump_topics_json(topics);
    o.require(dump_topics_json(load_topics_json(dumped)) == dumped, "topic JSON round trip");

    auto line_of = [](const std::function<void()>& fn) -> std::optional<std::size_t> {
        try {
            fn();
        } catch (const Error& e) {
            return e.line();
        }
        return std::nullopt;
    };
    o.require(line_of([] { parse_run("1 Q0 A 1 0.5 t\n1 Q0 B two 0.4 t\n"); }) == 2u, "malformed run line number");
    o.require(line_of([] { parse_qrels("1 0 A 2\n1 0 B 1\n1 0 C\n"); }) == 3u, "malformed qrels line number");
    return o;
}

Outcome remote_contract() {
    Outcome o;
    stub::EmbeddingServer server(6);
    EmbedderConfig cfg;
    cfg.backend = Backend::remote;
    cfg.dim = 6;
    cfg.remote_url = server.url();
    RemoteOptions opts;
    opts.initial_backoff = std::chrono::milliseconds(20);
    opts.timeout = std::chrono::seconds(5);

    std::vector<TextItem> items;
    for (int i = 0; i < 150; ++i) {
        items.push_back({"doc" + std::to_string(i), "t" + std::to_string(i)});
    }
    const auto vecs = embed_remote_all(items, cfg, opts);
    bool ordered = vecs.size() == items.size();
    for (std::size_t i = 0; ordered && i < vecs.size(); ++i) {
        ordered = vecs[i].source_id == items[i].id && vecs[i].values[0] == static_cast<float>(i);
    }
    o.require(ordered, "order not preserved");

    server.set_mode(stub::Mode::wrong_dim);
    bool mismatch = false;
    try {
        embed_remote(std::span(items).first(3), cfg, opts);
    } catch (const Error& e) {
        mismatch = e.kind() == ErrorKind::DimMismatch;
    }
    o.require(mismatch, "DimMismatch not raised");

    server.set_mode(stub::Mode::fail_then_ok, 3);
    const auto start = Clock::now();
    const auto retried = embed_remote(std::span(items).first(2), cfg, opts);
    const double waited = seconds_since(start);
    o.require(retried.size() == 2 && server.requests() == 4,
              "expected success on attempt 4, saw " + std::to_string(server.requests()) + " requests");
    o.require(waited >= 0.020 + 0.040 + 0.080, "backoff too short: " + std::to_string(waited) + " s");

    server.set_mode(stub::Mode::always_503);
    bool unavailable = false;
    try {
        embed_remote(std::span(items).first(1), cfg, opts);
    } catch (const Error& e) {
        unavailable = e.kind() == ErrorKind::RemoteUnavailable;
    }
    o.require(unavailable && server.requests() == 4, "persistent 5xx not reported after 3 retries");
    return o;
}

}  // namespace

int main() {
    logger().set_level(spdlog::level::off);
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"metric oracle equivalence", metric_oracle},
        {"worked NDCG case", worked_ndcg},
        {"cosine properties", cosine_properties},
        {"end-to-end determinism and perfect run", end_to_end},
        {"top-k contract", top_k},
        {"eligibility segmentation", segmentation},
        {"PV-DBOW sanity", pv_dbow},
        {"format round-trips", round_trips},
        {"remote backend contract", remote_contract},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failures += o.pass ? 0 : 1;
        std::printf("%s  %s%s%s\n", o.pass ? "PASS" : "FAIL", name, o.detail.empty() ? "" : "  -- ",
                    o.detail.c_str());
    }
    return failures == 0 ? 0 : 1;
}
