#include "ctrank/retrieval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "ctrank/error.hpp"
#include "ctrank/parallel.hpp"
#include "ctrank/simd/kernels.hpp"

namespace ctrank {

namespace {

void check_dims(std::size_t a, std::size_t b) {
    if (a != b) {
        throw Error(ErrorKind::DimMismatch, "vector dims differ: " + std::to_string(a) + " vs " + std::to_string(b));
    }
}

double cosine_from_parts(double dot, double norm_t, double norm_d) {
    if (norm_t == 0.0 || norm_d == 0.0) {
        return 0.0;
    }
    return std::clamp(dot / (norm_t * norm_d), -1.0, 1.0);
}

bool ranks_before(double score_a, const std::string& id_a, double score_b, const std::string& id_b) {
    if (score_a != score_b) {
        return score_a > score_b;
    }
    return id_a < id_b;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) {
            ++i;
        }
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') {
            ++i;
        }
        if (i > start) {
            fields.push_back(line.substr(start, i - start));
        }
    }
    return fields;
}

}  // namespace

double cosine_similarity(std::span<const float> t, std::span<const float> d) {
    check_dims(t.size(), d.size());
    return cosine_from_parts(simd::dot(t, d), std::sqrt(simd::dot(t, t)), std::sqrt(simd::dot(d, d)));
}

double cosine_similarity(const EmbeddingVector& t, const EmbeddingVector& d) {
    return cosine_similarity(std::span<const float>(t.values), std::span<const float>(d.values));
}

DocumentIndex::DocumentIndex(std::span<const EmbeddingVector> docs) {
    if (docs.empty()) {
        return;
    }
    dim_ = docs.front().dim();
    ids_.reserve(docs.size());
    values_.reserve(docs.size() * dim_);
    norms_.reserve(docs.size());
    for (const EmbeddingVector& d : docs) {
        check_dims(dim_, d.dim());
        ids_.push_back(d.source_id);
        values_.insert(values_.end(), d.values.begin(), d.values.end());
        norms_.push_back(std::sqrt(simd::dot(std::span<const float>(d.values), std::span<const float>(d.values))));
    }
}

std::vector<RunEntry> rank_topic(const EmbeddingVector& topic, const DocumentIndex& docs, std::size_t k_cap,
                                 const std::string& run_tag, unsigned threads) {
    if (docs.size() == 0) {
        return {};
    }
    check_dims(topic.dim(), docs.dim());
    const std::span<const float> t(topic.values);
    const double norm_t = std::sqrt(simd::dot(t, t));

    std::vector<double> scores(docs.size());
    constexpr std::size_t kBlock = 4096;
    const std::size_t blocks = (docs.size() + kBlock - 1) / kBlock;
    parallel_for(blocks, threads, [&](std::size_t b) {
        const std::size_t end = std::min(docs.size(), (b + 1) * kBlock);
        for (std::size_t r = b * kBlock; r < end; ++r) {
            scores[r] = cosine_from_parts(simd::dot(t, docs.row(r)), norm_t, docs.norm(r));
        }
    });

    std::vector<std::size_t> order(docs.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t keep = std::min(k_cap, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          return ranks_before(scores[a], docs.id(a), scores[b], docs.id(b));
                      });

    std::vector<RunEntry> entries;
    entries.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
        entries.push_back({topic.source_id, docs.id(order[i]), i + 1, scores[order[i]], run_tag});
    }
    return entries;
}

std::vector<RunEntry> rank_topic(const EmbeddingVector& topic, std::span<const EmbeddingVector> docs,
                                 std::size_t k_cap, const std::string& run_tag) {
    return rank_topic(topic, DocumentIndex(docs), k_cap, run_tag);
}

RankedRun rank_all(std::span<const EmbeddingVector> topics, const DocumentIndex& docs, std::size_t k_cap,
                   const std::string& run_tag, unsigned threads) {
    RankedRun run;
    run.k_cap = k_cap;
    run.topics.resize(topics.size());
    parallel_for(topics.size(), threads, [&](std::size_t i) {
        run.topics[i].topic_id = topics[i].source_id;
        run.topics[i].entries = rank_topic(topics[i], docs, k_cap, run_tag, 1);
    });
    return run;
}

void validate_run(const RankedRun& run) {
    std::set<std::string_view> topic_ids;
    for (const TopicRanking& topic : run.topics) {
        auto fail = [&](const std::string& what) {
            throw Error(ErrorKind::MalformedRunLine, "topic " + topic.topic_id + ": " + what);
        };
        if (!topic_ids.insert(topic.topic_id).second) {
            fail("appears twice");
        }
        if (topic.entries.size() > run.k_cap) {
            fail("more than k_cap=" + std::to_string(run.k_cap) + " entries");
        }
        std::set<std::string_view> docs;
        for (std::size_t i = 0; i < topic.entries.size(); ++i) {
            const RunEntry& e = topic.entries[i];
            if (e.topic_id != topic.topic_id) {
                fail("entry filed under the wrong topic");
            }
            if (e.rank != i + 1) {
                fail("ranks are not contiguous from 1");
            }
            if (i > 0 && e.score > topic.entries[i - 1].score) {
                fail("score increases at rank " + std::to_string(e.rank));
            }
            if (!docs.insert(e.nct_id).second) {
                throw Error(ErrorKind::DuplicateDoc, "topic " + topic.topic_id + " lists " + e.nct_id + " twice");
            }
            if (e.run_tag.empty() || e.run_tag.find_first_of(" \t\n") != std::string::npos) {
                fail("run tag must be non-empty without whitespace");
            }
        }
    }
}

std::string format_run(const RankedRun& run) {
    std::string out;
    char score[64];
    for (const TopicRanking& topic : run.topics) {
        for (const RunEntry& e : topic.entries) {
            std::snprintf(score, sizeof(score), "%.6f", e.score);
            out += e.topic_id;
            out += " Q0 ";
            out += e.nct_id;
            out += ' ';
            out += std::to_string(e.rank);
            out += ' ';
            out += score;
            out += ' ';
            out += e.run_tag;
            out += '\n';
        }
    }
    return out;
}

void emit_run_file(const RankedRun& run, const std::filesystem::path& path) {
    validate_run(run);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    }
    const std::string text = format_run(run);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) {
        throw Error(ErrorKind::Io, "failed writing " + path.string());
    }
}

RankedRun parse_run(std::string_view text, std::size_t k_cap) {
    struct Parsed {
        RunEntry entry;
        std::size_t line;
    };
    struct TopicRows {
        std::vector<Parsed> rows;
        std::map<std::string, std::size_t, std::less<>> doc_line;
        std::set<std::size_t> ranks;
    };
    std::vector<std::string> topic_order;
    std::map<std::string, TopicRows, std::less<>> by_topic;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;

        const auto fields = split_fields(line);
        if (fields.empty()) {
            continue;
        }
        auto bad = [&](const std::string& what) { throw Error(ErrorKind::MalformedRunLine, what, line_no); };
        if (fields.size() != 6) {
            bad("expected 6 columns, found " + std::to_string(fields.size()));
        }
        RunEntry e;
        e.topic_id = std::string(fields[0]);
        e.nct_id = std::string(fields[2]);
        e.run_tag = std::string(fields[5]);
        const auto rank_field = fields[3];
        const auto [rank_end, rank_ec] = std::from_chars(rank_field.data(), rank_field.data() + rank_field.size(), e.rank);
        if (rank_ec != std::errc() || rank_end != rank_field.data() + rank_field.size() || e.rank == 0) {
            bad("rank must be a positive integer, got '" + std::string(rank_field) + "'");
        }
        // std::from_chars for double is not available in every libstdc++ we target.
        const std::string score_text(fields[4]);
        char* score_end = nullptr;
        e.score = std::strtod(score_text.c_str(), &score_end);
        if (score_end != score_text.c_str() + score_text.size() || !std::isfinite(e.score)) {
            bad("score must be a finite number, got '" + score_text + "'");
        }
        auto [it, inserted] = by_topic.try_emplace(e.topic_id);
        if (inserted) {
            topic_order.push_back(e.topic_id);
        }
        TopicRows& topic = it->second;
        if (const auto seen = topic.doc_line.find(e.nct_id); seen != topic.doc_line.end()) {
            throw Error(ErrorKind::DuplicateDoc,
                        "topic " + e.topic_id + " lists " + e.nct_id + " again (first on line " +
                            std::to_string(seen->second) + ")",
                        line_no);
        }
        if (!topic.ranks.insert(e.rank).second) {
            bad("rank " + std::to_string(e.rank) + " repeated for topic " + e.topic_id);
        }
        topic.doc_line.emplace(e.nct_id, line_no);
        topic.rows.push_back({std::move(e), line_no});
    }

    RankedRun run;
    run.k_cap = k_cap;
    for (const std::string& topic_id : topic_order) {
        auto& rows = by_topic.find(topic_id)->second.rows;
        std::stable_sort(rows.begin(), rows.end(),
                         [](const Parsed& a, const Parsed& b) { return a.entry.rank < b.entry.rank; });
        TopicRanking ranking{topic_id, {}};
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i > 0 && rows[i].entry.score > rows[i - 1].entry.score) {
                throw Error(ErrorKind::MalformedRunLine,
                            "score increases with rank for topic " + topic_id, rows[i].line);
            }
            rows[i].entry.rank = i + 1;
            ranking.entries.push_back(std::move(rows[i].entry));
        }
        run.k_cap = std::max(run.k_cap, ranking.entries.size());
        run.topics.push_back(std::move(ranking));
    }
    return run;
}

RankedRun parse_run_file(const std::filesystem::path& path, std::size_t k_cap) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open run file " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_run(buffer.str(), k_cap);
}

}  // namespace ctrank
