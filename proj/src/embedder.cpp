#include "ctrank/embedder.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "ctrank/error.hpp"
#include "ctrank/log.hpp"
#include "ctrank/paragraph_vectors.hpp"
#include "ctrank/parallel.hpp"

namespace ctrank {

std::string_view to_string(Backend backend) noexcept {
    switch (backend) {
        case Backend::hashed_tfidf: return "hashed_tfidf";
        case Backend::pv_dbow: return "pv_dbow";
        case Backend::pv_dm: return "pv_dm";
        case Backend::remote: return "remote";
    }
    return "unknown";
}

std::string_view to_string(DocFields fields) noexcept {
    switch (fields) {
        case DocFields::summary: return "summary";
        case DocFields::summary_description: return "summary_description";
        case DocFields::summary_description_inclusion: return "summary_description_inclusion";
    }
    return "unknown";
}

Backend parse_backend(std::string_view name) {
    for (Backend b : {Backend::hashed_tfidf, Backend::pv_dbow, Backend::pv_dm, Backend::remote}) {
        if (name == to_string(b)) {
            return b;
        }
    }
    throw Error(ErrorKind::InvalidConfig, "unknown backend '" + std::string(name) + "'");
}

DocFields parse_doc_fields(std::string_view name) {
    for (DocFields f :
         {DocFields::summary, DocFields::summary_description, DocFields::summary_description_inclusion}) {
        if (name == to_string(f)) {
            return f;
        }
    }
    throw Error(ErrorKind::InvalidConfig, "unknown doc_fields '" + std::string(name) + "'");
}

namespace {

bool is_pv(Backend b) {
    return b == Backend::pv_dbow || b == Backend::pv_dm;
}

void invalid(const std::string& what) {
    throw Error(ErrorKind::InvalidConfig, what);
}

}  // namespace

void validate(const EmbedderConfig& cfg) {
    if (cfg.dim < 8) {
        invalid("dim must be at least 8");
    }
    if (is_pv(cfg.backend) != cfg.pv.has_value()) {
        invalid("pv settings must be present exactly when the backend is pv_dbow or pv_dm");
    }
    if ((cfg.backend == Backend::remote) != cfg.remote_url.has_value()) {
        invalid("remote_url must be present exactly when the backend is remote");
    }
    if (cfg.pv) {
        const PvConfig& pv = *cfg.pv;
        if (pv.epochs < 1) {
            invalid("pv.epochs must be at least 1");
        }
        if (pv.negative_samples < 1) {
            invalid("pv.negative_samples must be at least 1");
        }
        if (!(pv.learning_rate_final <= pv.learning_rate_initial) || pv.learning_rate_final < 0.0) {
            invalid("pv learning rates must satisfy 0 <= final <= initial");
        }
        if (pv.workers < 1) {
            invalid("pv.workers must be at least 1");
        }
    }
}

nlohmann::ordered_json to_json(const EmbedderConfig& cfg) {
    nlohmann::ordered_json j;
    j["backend"] = std::string(to_string(cfg.backend));
    j["dim"] = cfg.dim;
    j["seed"] = cfg.seed;
    j["doc_fields"] = std::string(to_string(cfg.doc_fields));
    if (cfg.pv) {
        nlohmann::ordered_json pv;
        pv["epochs"] = cfg.pv->epochs;
        pv["window"] = cfg.pv->window;
        pv["negative_samples"] = cfg.pv->negative_samples;
        pv["learning_rate_initial"] = cfg.pv->learning_rate_initial;
        pv["learning_rate_final"] = cfg.pv->learning_rate_final;
        pv["min_token_count"] = cfg.pv->min_token_count;
        pv["workers"] = cfg.pv->workers;
        j["pv"] = std::move(pv);
    }
    if (cfg.remote_url) {
        j["remote_url"] = *cfg.remote_url;
    }
    return j;
}

EmbedderConfig embedder_config_from_json(const nlohmann::json& j, EmbedderConfig base) {
    try {
        if (!j.is_object()) {
            invalid("embedder config must be an object");
        }
        if (j.contains("backend")) {
            base.backend = parse_backend(j.at("backend").get<std::string>());
        }
        if (j.contains("dim")) {
            base.dim = j.at("dim").get<std::size_t>();
        }
        if (j.contains("seed")) {
            base.seed = j.at("seed").get<std::uint64_t>();
        }
        if (j.contains("doc_fields")) {
            base.doc_fields = parse_doc_fields(j.at("doc_fields").get<std::string>());
        }
        if (is_pv(base.backend)) {
            PvConfig pv = base.pv.value_or(PvConfig{});
            if (j.contains("pv")) {
                const auto& p = j.at("pv");
                pv.epochs = p.value("epochs", pv.epochs);
                pv.window = p.value("window", pv.window);
                pv.negative_samples = p.value("negative_samples", pv.negative_samples);
                pv.learning_rate_initial = p.value("learning_rate_initial", pv.learning_rate_initial);
                pv.learning_rate_final = p.value("learning_rate_final", pv.learning_rate_final);
                pv.min_token_count = p.value("min_token_count", pv.min_token_count);
                pv.workers = p.value("workers", pv.workers);
            }
            base.pv = pv;
        } else {
            base.pv.reset();
        }
        if (base.backend == Backend::remote) {
            if (j.contains("remote_url")) {
                base.remote_url = j.at("remote_url").get<std::string>();
            }
        } else {
            base.remote_url.reset();
        }
    } catch (const nlohmann::json::exception& e) {
        invalid(std::string("bad embedder config: ") + e.what());
    }
    return base;
}

std::uint64_t config_hash(const EmbedderConfig& cfg) {
    nlohmann::ordered_json j = to_json(cfg);
    j.erase("remote_url");
    if (j.contains("pv")) {
        j["pv"].erase("workers");
    }
    return stable_hash(j.dump(), 0x70766d6f64656cULL);
}

std::string document_text(const ClinicalTrialDoc& doc, DocFields fields) {
    std::vector<const std::string*> parts{&doc.brief_summary};
    if (fields != DocFields::summary) {
        parts.push_back(&doc.detailed_description);
    }
    if (fields == DocFields::summary_description_inclusion) {
        parts.push_back(&doc.inclusion);
    }
    std::string out;
    for (const std::string* p : parts) {
        if (p->empty()) {
            continue;
        }
        if (!out.empty()) {
            out += ' ';
        }
        out += *p;
    }
    return out;
}

std::uint64_t stable_hash(std::string_view bytes, std::uint64_t seed) noexcept {
    constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
    std::uint64_t h = 0xcbf29ce484222325ULL ^ (seed * 0x9e3779b97f4a7c15ULL);
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= kFnvPrime;
    }
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ULL;
    h ^= h >> 27;
    h *= 0x94d049bb133111ebULL;
    h ^= h >> 31;
    return h;
}

VocabModel::VocabModel(std::vector<std::string> tokens, std::vector<VocabEntry> entries, std::size_t total_docs)
    : tokens_(std::move(tokens)), entries_(std::move(entries)), total_docs_(total_docs) {
    lookup_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        lookup_.emplace(tokens_[i], i);
    }
}

const VocabEntry* VocabModel::find(const std::string& token) const {
    const auto it = lookup_.find(token);
    return it == lookup_.end() ? nullptr : &entries_[it->second];
}

VocabModel build_vocab(std::span<const std::string> texts, std::size_t min_token_count) {
    if (texts.empty()) {
        throw Error(ErrorKind::EmptyCorpus, "cannot build a vocabulary from zero documents");
    }
    std::map<std::string, VocabEntry> counts;
    for (const std::string& text : texts) {
        std::set<std::string> seen;
        for (std::string& token : tokenize(text)) {
            auto& entry = counts[token];
            ++entry.corpus_frequency;
            if (seen.insert(std::move(token)).second) {
                ++entry.doc_frequency;
            }
        }
    }
    std::vector<std::string> tokens;
    std::vector<VocabEntry> entries;
    for (auto& [token, entry] : counts) {
        if (entry.corpus_frequency < min_token_count) {
            continue;
        }
        entry.index = tokens.size();
        tokens.push_back(token);
        entries.push_back(entry);
    }
    return VocabModel(std::move(tokens), std::move(entries), texts.size());
}

EmbeddingVector embed_hashed_tfidf(std::string_view text, const VocabModel& vocab, const EmbedderConfig& cfg,
                                   std::string source_id) {
    std::map<std::string, std::size_t> term_counts;
    for (std::string& token : tokenize(text)) {
        ++term_counts[std::move(token)];
    }
    const auto total = static_cast<double>(vocab.total_docs());
    std::vector<double> buckets(cfg.dim, 0.0);
    for (const auto& [token, tf] : term_counts) {
        const VocabEntry* entry = vocab.find(token);
        const double df = entry == nullptr ? 0.0 : static_cast<double>(entry->doc_frequency);
        const double weight = (1.0 + std::log(static_cast<double>(tf))) * std::log((1.0 + total) / (1.0 + df));
        const std::uint64_t h = stable_hash(token, cfg.seed);
        const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
        buckets[h % cfg.dim] += sign * weight;
    }
    double norm_sq = 0.0;
    for (double v : buckets) {
        norm_sq += v * v;
    }
    EmbeddingVector out{std::move(source_id), std::vector<float>(cfg.dim, 0.0f)};
    if (norm_sq > 0.0) {
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (std::size_t i = 0; i < cfg.dim; ++i) {
            out.values[i] = static_cast<float>(buckets[i] * inv);
        }
    }
    return out;
}

EmbeddedCollections embed_collections(std::span<const TextItem> documents, std::span<const TextItem> topics,
                                      const EmbedderConfig& cfg, const RemoteOptions& remote, unsigned threads) {
    validate(cfg);
    EmbeddedCollections out;
    switch (cfg.backend) {
        case Backend::hashed_tfidf: {
            std::vector<std::string> texts;
            texts.reserve(documents.size());
            for (const auto& d : documents) {
                texts.push_back(d.text);
            }
            const VocabModel vocab = build_vocab(texts, 1);
            out.documents.resize(documents.size());
            parallel_for(documents.size(), threads, [&](std::size_t i) {
                out.documents[i] = embed_hashed_tfidf(documents[i].text, vocab, cfg, documents[i].id);
            });
            out.topics.resize(topics.size());
            parallel_for(topics.size(), threads, [&](std::size_t i) {
                out.topics[i] = embed_hashed_tfidf(topics[i].text, vocab, cfg, topics[i].id);
            });
            break;
        }
        case Backend::pv_dbow:
        case Backend::pv_dm: {
            const ParagraphVectorModel model = train_paragraph_vectors(documents, cfg);
            out.documents.reserve(documents.size());
            for (const auto& d : documents) {
                out.documents.push_back(model.document_vector(d.id));
            }
            out.topics.resize(topics.size());
            parallel_for(topics.size(), threads, [&](std::size_t i) {
                out.topics[i] = model.infer_vector(topics[i].text, topics[i].id);
            });
            break;
        }
        case Backend::remote:
            out.documents = embed_remote_all(documents, cfg, remote);
            out.topics = embed_remote_all(topics, cfg, remote);
            break;
    }
    return out;
}

}  // namespace ctrank
