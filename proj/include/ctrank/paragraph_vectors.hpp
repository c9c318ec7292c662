#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ctrank/embedder.hpp"

namespace ctrank {

/// One negative-sampling update for a single hidden vector.
///
/// The target word gets label 1, each noise word label 0. For every
/// (word, label) pair, with f = hidden . output[word]:
///
///     g = lr * (label - sigmoid(f))
///     hidden_delta += g * output[word]        (uses output[word] before its update)
///     output[word] += g * hidden              (only if update_outputs)
///
/// `hidden_delta` is accumulated, not overwritten, so that the caller decides
/// how to spread it over the inputs that formed `hidden`. Returns the
/// negative-sampling loss  -log sigmoid(f_target) - sum log sigmoid(-f_noise)
/// evaluated before any update.
template <typename T>
double negative_sampling_step(std::span<const T> hidden, std::span<T> hidden_delta, std::span<T> output_matrix,
                              std::size_t target, std::span<const std::size_t> noise, T learning_rate,
                              bool update_outputs);

/// Draws noise words from the unigram distribution raised to the 0.75 power.
class NoiseSampler {
public:
    NoiseSampler() = default;
    explicit NoiseSampler(const VocabModel& vocab);

    std::size_t sample(std::mt19937_64& rng) const;
    double probability(std::size_t index) const;

private:
    std::vector<double> cumulative_;
};

/// Uniform double in [0, 1) taken from the top 53 bits; identical across standard libraries.
double uniform01(std::mt19937_64& rng);

struct PvTrainingLog {
    /// Mean negative-sampling loss per (document, position) step, one value per epoch.
    std::vector<double> epoch_mean_loss;
};

class ParagraphVectorModel {
public:
    ParagraphVectorModel() = default;

    const EmbedderConfig& config() const noexcept { return config_; }
    const VocabModel& vocab() const noexcept { return vocab_; }
    std::size_t dim() const noexcept { return config_.dim; }
    const PvTrainingLog& training_log() const noexcept { return log_; }
    const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }

    /// Trained vector for a training document. Throws std::out_of_range for unknown ids.
    EmbeddingVector document_vector(const std::string& id) const;
    std::vector<EmbeddingVector> document_vectors() const;

    /// Embeds unseen text: word and output weights stay frozen while a fresh
    /// document vector is trained for cfg.pv.epochs passes. Deterministic for a
    /// given seed and text. Text with no in-vocabulary token gives a zero vector.
    EmbeddingVector infer_vector(std::string_view text, std::string source_id = {}) const;

    /// Versioned little-endian binary file holding the config hash, vocabulary,
    /// weight matrices, document vectors and training log.
    void save(const std::filesystem::path& path) const;

    /// Throws Error{ConfigMismatch} if the stored config hash differs from
    /// config_hash(expected), Error{Io} on read or format problems.
    static ParagraphVectorModel load(const std::filesystem::path& path, const EmbedderConfig& expected);

    friend ParagraphVectorModel train_paragraph_vectors(std::span<const TextItem> corpus,
                                                        const EmbedderConfig& cfg);

private:
    std::vector<std::size_t> encode(std::string_view text) const;

    // Trains `doc_vector` on `tokens` for one pass at the given schedule position.
    double train_document(std::span<float> doc_vector, std::span<const std::size_t> tokens,
                          std::mt19937_64& rng, double lr_begin, double lr_end, bool update_words,
                          std::span<float> hidden, std::span<float> delta);

    EmbedderConfig config_;
    VocabModel vocab_;
    NoiseSampler noise_;
    std::vector<float> word_input_;   // vocab x dim, PV-DM only
    std::vector<float> word_output_;  // vocab x dim
    std::vector<float> doc_vectors_;  // docs x dim
    std::vector<std::string> doc_ids_;
    std::unordered_map<std::string, std::size_t> doc_index_;
    PvTrainingLog log_;
};

/// PV-DBOW: the document vector alone predicts each of its tokens.
/// PV-DM: the mean of the document vector and the surrounding window's word
/// vectors predicts the centre token. Learning rate decays linearly from
/// initial to final over all training steps.
/// Throws Error{EmptyCorpus} for fewer than two documents, Error{VocabTooSmall}
/// when no token survives min_token_count, Error{InvalidConfig} otherwise.
ParagraphVectorModel train_paragraph_vectors(std::span<const TextItem> corpus, const EmbedderConfig& cfg);

}  // namespace ctrank
