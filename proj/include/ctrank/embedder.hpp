#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "ctrank/text.hpp"
#include "ctrank/trial_corpus.hpp"

namespace ctrank {

/// Dense embedding of one topic or trial. `source_id` is the topic_id or nct_id.
struct EmbeddingVector {
    std::string source_id;
    std::vector<float> values;

    std::size_t dim() const noexcept { return values.size(); }
    bool operator==(const EmbeddingVector&) const = default;
};

/// A piece of text to embed, tagged with the id its vector will carry.
struct TextItem {
    std::string id;
    std::string text;
};

enum class Backend { hashed_tfidf, pv_dbow, pv_dm, remote };
enum class DocFields { summary, summary_description, summary_description_inclusion };

std::string_view to_string(Backend backend) noexcept;
std::string_view to_string(DocFields fields) noexcept;
Backend parse_backend(std::string_view name);
DocFields parse_doc_fields(std::string_view name);

struct PvConfig {
    std::size_t epochs = 40;
    std::size_t window = 5;
    std::size_t negative_samples = 5;
    double learning_rate_initial = 0.025;
    double learning_rate_final = 0.0001;
    std::size_t min_token_count = 2;
    /// 1 = single-threaded and bit-reproducible. More workers update the shared
    /// weights without synchronization (Hogwild): faster, not reproducible.
    std::size_t workers = 1;

    bool operator==(const PvConfig&) const = default;
};

struct EmbedderConfig {
    Backend backend = Backend::hashed_tfidf;
    std::size_t dim = 1024;
    std::uint64_t seed = 0;
    DocFields doc_fields = DocFields::summary_description_inclusion;
    std::optional<PvConfig> pv;
    std::optional<std::string> remote_url;

    bool operator==(const EmbedderConfig&) const = default;
};

/// Throws Error{InvalidConfig} when an invariant is broken: dim < 8, pv present
/// iff backend is pv_*, remote_url present iff backend is remote, epochs >= 1,
/// negative_samples >= 1, learning_rate_final <= learning_rate_initial.
void validate(const EmbedderConfig& cfg);

nlohmann::ordered_json to_json(const EmbedderConfig& cfg);
/// Missing keys keep their defaults; a pv block is filled in for pv_* backends.
EmbedderConfig embedder_config_from_json(const nlohmann::json& j, EmbedderConfig base = {});

/// Stable 64-bit hash of the fields that determine trained weights.
std::uint64_t config_hash(const EmbedderConfig& cfg);

/// Text embedded for a trial under the given field selection; parts joined by a space.
std::string document_text(const ClinicalTrialDoc& doc, DocFields fields);

/// Seed-keyed 64-bit hash, identical on every platform (FNV-1a over the
/// bytes, seed folded into the basis, splitmix64 finalizer).
std::uint64_t stable_hash(std::string_view bytes, std::uint64_t seed) noexcept;

struct VocabEntry {
    std::size_t index = 0;
    std::size_t doc_frequency = 0;
    std::size_t corpus_frequency = 0;

    bool operator==(const VocabEntry&) const = default;
};

class VocabModel {
public:
    VocabModel() = default;

    /// Tokens are given in index order; lookup is rebuilt from them.
    VocabModel(std::vector<std::string> tokens, std::vector<VocabEntry> entries, std::size_t total_docs);

    std::size_t size() const noexcept { return tokens_.size(); }
    std::size_t total_docs() const noexcept { return total_docs_; }
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }
    const VocabEntry& entry(std::size_t index) const { return entries_.at(index); }
    const VocabEntry* find(const std::string& token) const;

private:
    std::vector<std::string> tokens_;
    std::vector<VocabEntry> entries_;
    std::unordered_map<std::string, std::size_t> lookup_;
    std::size_t total_docs_ = 0;
};

/// Indices follow lexicographic token order. Tokens whose corpus frequency is
/// below `min_token_count` are dropped. Throws Error{EmptyCorpus}.
VocabModel build_vocab(std::span<const std::string> texts, std::size_t min_token_count = 1);

/// Signed feature hashing with (1 + ln tf) * ln((1 + N) / (1 + df)) weights,
/// L2-normalized unless every bucket is zero.
EmbeddingVector embed_hashed_tfidf(std::string_view text, const VocabModel& vocab, const EmbedderConfig& cfg,
                                   std::string source_id = {});

struct RemoteOptions {
    std::size_t max_retries = 3;
    std::chrono::milliseconds initial_backoff{200};
    std::chrono::seconds timeout{30};
    /// Batches in flight at once when embed_remote_all splits a large input.
    unsigned max_in_flight = 4;
};

inline constexpr std::size_t kMaxRemoteBatch = 64;

/// POSTs {"texts": [...]} to cfg.remote_url and expects
/// {"vectors": [[...], ...], "dim": N}. Connection failures and 5xx answers
/// are retried with exponential backoff; other statuses fail immediately.
/// Throws Error{RemoteUnavailable, DimMismatch, MalformedResponse}.
std::vector<EmbeddingVector> embed_remote(std::span<const TextItem> batch, const EmbedderConfig& cfg,
                                          const RemoteOptions& options = {});

/// Splits `items` into batches of at most kMaxRemoteBatch; output order matches input.
std::vector<EmbeddingVector> embed_remote_all(std::span<const TextItem> items, const EmbedderConfig& cfg,
                                              const RemoteOptions& options = {});

struct EmbeddedCollections {
    std::vector<EmbeddingVector> documents;
    std::vector<EmbeddingVector> topics;
};

/// Embeds documents and topics with the configured backend. For pv_* the
/// model is trained on the documents and topics are inferred.
EmbeddedCollections embed_collections(std::span<const TextItem> documents, std::span<const TextItem> topics,
                                      const EmbedderConfig& cfg, const RemoteOptions& remote = {},
                                      unsigned threads = 0);

}  // namespace ctrank
