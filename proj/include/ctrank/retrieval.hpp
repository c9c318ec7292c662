#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ctrank/embedder.hpp"

namespace ctrank {

inline constexpr std::size_t kDefaultTopK = 1000;

struct RunEntry {
    std::string topic_id;
    std::string nct_id;
    std::size_t rank = 0;
    double score = 0.0;
    std::string run_tag;

    bool operator==(const RunEntry&) const = default;
};

struct TopicRanking {
    std::string topic_id;
    std::vector<RunEntry> entries;  // rank order

    bool operator==(const TopicRanking&) const = default;
};

/// A ranked run: one ranking per topic, in topic order.
struct RankedRun {
    std::vector<TopicRanking> topics;
    std::size_t k_cap = kDefaultTopK;

    bool operator==(const RankedRun&) const = default;
};

/// (t . d) / (|t| |d|), clamped to [-1, 1]. Zero when either norm is zero.
/// Throws Error{DimMismatch}.
double cosine_similarity(std::span<const float> t, std::span<const float> d);
double cosine_similarity(const EmbeddingVector& t, const EmbeddingVector& d);

/// Document vectors packed row-major with their norms precomputed.
class DocumentIndex {
public:
    explicit DocumentIndex(std::span<const EmbeddingVector> docs);

    std::size_t size() const noexcept { return ids_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    const std::string& id(std::size_t row) const { return ids_[row]; }
    std::span<const float> row(std::size_t r) const { return {values_.data() + r * dim_, dim_}; }
    double norm(std::size_t r) const { return norms_[r]; }

private:
    std::size_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<float> values_;
    std::vector<double> norms_;
};

/// Scores every document, orders by (score desc, nct_id asc), keeps the first
/// k_cap and numbers them 1..n. Throws Error{DimMismatch}.
std::vector<RunEntry> rank_topic(const EmbeddingVector& topic, const DocumentIndex& docs, std::size_t k_cap,
                                 const std::string& run_tag, unsigned threads = 1);
std::vector<RunEntry> rank_topic(const EmbeddingVector& topic, std::span<const EmbeddingVector> docs,
                                 std::size_t k_cap, const std::string& run_tag);

/// Ranks every topic (in parallel across topics).
RankedRun rank_all(std::span<const EmbeddingVector> topics, const DocumentIndex& docs, std::size_t k_cap,
                   const std::string& run_tag, unsigned threads = 0);

/// Checks the RunEntry/RankedRun invariants; throws Error{MalformedRunLine} naming the offender.
void validate_run(const RankedRun& run);

/// "<topic> Q0 <doc> <rank> <score %.6f> <tag>\n" per entry, topics in order.
std::string format_run(const RankedRun& run);
void emit_run_file(const RankedRun& run, const std::filesystem::path& path);

/// Parses the six-column format (tabs or spaces). Entries are re-sorted by
/// rank within each topic; gaps in the rank sequence are closed up. Topic order
/// is order of first appearance. Throws Error{MalformedRunLine} (with line
/// number), Error{DuplicateDoc}, Error{Io}.
RankedRun parse_run(std::string_view text, std::size_t k_cap = kDefaultTopK);
RankedRun parse_run_file(const std::filesystem::path& path, std::size_t k_cap = kDefaultTopK);

}  // namespace ctrank
