#include "ctrank/paragraph_vectors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

#include "ctrank/error.hpp"
#include "ctrank/log.hpp"
#include "ctrank/simd/kernels.hpp"

namespace ctrank {

static_assert(std::endian::native == std::endian::little, "model files are written in host byte order");

namespace {

constexpr char kMagic[8] = {'C', 'T', 'P', 'V', 'M', 'D', 'L', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

void init_uniform(std::span<float> values, std::size_t dim, std::mt19937_64& rng) {
    const double inv_dim = 1.0 / static_cast<double>(dim);
    for (float& v : values) {
        v = static_cast<float>((uniform01(rng) - 0.5) * inv_dim);
    }
}

void shuffle(std::vector<std::size_t>& order, std::mt19937_64& rng) {
    for (std::size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
        std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
}

class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary), path_(path) {
        if (!out_) {
            throw Error(ErrorKind::Io, "cannot write " + path.string());
        }
    }
    template <typename T>
    void pod(const T& value) {
        out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
    }
    void string(const std::string& s) {
        pod(static_cast<std::uint32_t>(s.size()));
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    template <typename T>
    void array(const std::vector<T>& values) {
        pod(static_cast<std::uint64_t>(values.size()));
        out_.write(reinterpret_cast<const char*>(values.data()),
                   static_cast<std::streamsize>(values.size() * sizeof(T)));
    }
    void finish() {
        out_.flush();
        if (!out_) {
            throw Error(ErrorKind::Io, "failed writing " + path_.string());
        }
    }

private:
    std::ofstream out_;
    std::filesystem::path path_;
};

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) {
            throw Error(ErrorKind::Io, "cannot open " + path.string());
        }
    }
    template <typename T>
    T pod() {
        T value{};
        in_.read(reinterpret_cast<char*>(&value), sizeof(T));
        check();
        return value;
    }
    std::string string() {
        const auto size = pod<std::uint32_t>();
        std::string s(size, '\0');
        in_.read(s.data(), size);
        check();
        return s;
    }
    template <typename T>
    std::vector<T> array(std::uint64_t max_elements) {
        const auto size = pod<std::uint64_t>();
        if (size > max_elements) {
            throw Error(ErrorKind::Io, "corrupt model file " + path_.string());
        }
        std::vector<T> values(size);
        in_.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(size * sizeof(T)));
        check();
        return values;
    }

private:
    void check() {
        if (!in_) {
            throw Error(ErrorKind::Io, "truncated model file " + path_.string());
        }
    }
    std::ifstream in_;
    std::filesystem::path path_;
};

}  // namespace

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T>
double negative_sampling_step(std::span<const T> hidden, std::span<T> hidden_delta, std::span<T> output_matrix,
                              std::size_t target, std::span<const std::size_t> noise, T learning_rate,
                              bool update_outputs) {
    const std::size_t dim = hidden.size();
    double loss = 0.0;
    auto apply = [&](std::size_t word, double label) {
        const std::span<T> row = output_matrix.subspan(word * dim, dim);
        const double f = simd::dot(hidden, std::span<const T>(row));
        loss += label > 0.0 ? softplus(-f) : softplus(f);
        const auto g = static_cast<T>(static_cast<double>(learning_rate) * (label - sigmoid(f)));
        simd::axpy(g, std::span<const T>(row), hidden_delta);
        if (update_outputs) {
            simd::axpy(g, hidden, row);
        }
    };
    apply(target, 1.0);
    for (std::size_t word : noise) {
        apply(word, 0.0);
    }
    return loss;
}

template double negative_sampling_step<float>(std::span<const float>, std::span<float>, std::span<float>,
                                              std::size_t, std::span<const std::size_t>, float, bool);
template double negative_sampling_step<double>(std::span<const double>, std::span<double>, std::span<double>,
                                               std::size_t, std::span<const std::size_t>, double, bool);

NoiseSampler::NoiseSampler(const VocabModel& vocab) {
    cumulative_.reserve(vocab.size());
    double total = 0.0;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        total += std::pow(static_cast<double>(vocab.entry(i).corpus_frequency), 0.75);
        cumulative_.push_back(total);
    }
}

std::size_t NoiseSampler::sample(std::mt19937_64& rng) const {
    const double u = uniform01(rng) * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
}

double NoiseSampler::probability(std::size_t index) const {
    const double prev = index == 0 ? 0.0 : cumulative_[index - 1];
    return (cumulative_[index] - prev) / cumulative_.back();
}

std::vector<std::size_t> ParagraphVectorModel::encode(std::string_view text) const {
    std::vector<std::size_t> ids;
    for (const std::string& token : tokenize(text)) {
        if (const VocabEntry* e = vocab_.find(token)) {
            ids.push_back(e->index);
        }
    }
    return ids;
}

double ParagraphVectorModel::train_document(std::span<float> doc_vector, std::span<const std::size_t> tokens,
                                            std::mt19937_64& rng, double lr_begin, double lr_end,
                                            bool update_words, std::span<float> hidden, std::span<float> delta) {
    const PvConfig& pv = *config_.pv;
    const std::size_t dim = config_.dim;
    const bool dm = config_.backend == Backend::pv_dm;
    const std::size_t n = tokens.size();
    std::vector<std::size_t> noise;
    noise.reserve(pv.negative_samples);
    double loss = 0.0;

    for (std::size_t i = 0; i < n; ++i) {
        const auto lr = static_cast<float>(lr_begin + (lr_end - lr_begin) * static_cast<double>(i) /
                                                          static_cast<double>(n));
        const std::size_t target = tokens[i];
        noise.clear();
        for (std::size_t k = 0; k < pv.negative_samples; ++k) {
            const std::size_t w = noise_.sample(rng);
            if (w != target) {
                noise.push_back(w);
            }
        }
        std::fill(delta.begin(), delta.end(), 0.0f);

        if (!dm) {
            loss += negative_sampling_step<float>(doc_vector, delta, word_output_, target, noise, lr, update_words);
            simd::axpy(1.0f, std::span<const float>(delta), doc_vector);
            continue;
        }

        const std::size_t lo = i >= pv.window ? i - pv.window : 0;
        const std::size_t hi = std::min(n, i + pv.window + 1);
        std::copy(doc_vector.begin(), doc_vector.end(), hidden.begin());
        std::size_t inputs = 1;
        for (std::size_t j = lo; j < hi; ++j) {
            if (j == i) {
                continue;
            }
            simd::axpy(1.0f, std::span<const float>(word_input_).subspan(tokens[j] * dim, dim), hidden);
            ++inputs;
        }
        const float inv_inputs = 1.0f / static_cast<float>(inputs);
        simd::scale(inv_inputs, hidden);
        loss += negative_sampling_step<float>(hidden, delta, word_output_, target, noise, lr, update_words);
        // d(mean)/d(input) = 1/inputs for every input of the mean.
        simd::scale(inv_inputs, delta);
        simd::axpy(1.0f, std::span<const float>(delta), doc_vector);
        if (update_words) {
            for (std::size_t j = lo; j < hi; ++j) {
                if (j != i) {
                    simd::axpy(1.0f, std::span<const float>(delta),
                               std::span<float>(word_input_).subspan(tokens[j] * dim, dim));
                }
            }
        }
    }
    return loss;
}

ParagraphVectorModel train_paragraph_vectors(std::span<const TextItem> corpus, const EmbedderConfig& cfg) {
    validate(cfg);
    if (!cfg.pv) {
        throw Error(ErrorKind::InvalidConfig, "paragraph vectors need a pv_dbow or pv_dm backend");
    }
    if (corpus.size() < 2) {
        throw Error(ErrorKind::EmptyCorpus, "paragraph vector training needs at least two documents");
    }
    const PvConfig& pv = *cfg.pv;
    const std::size_t dim = cfg.dim;

    ParagraphVectorModel model;
    model.config_ = cfg;
    std::vector<std::string> texts;
    texts.reserve(corpus.size());
    for (const TextItem& item : corpus) {
        texts.push_back(item.text);
        if (!model.doc_index_.emplace(item.id, model.doc_ids_.size()).second) {
            throw Error(ErrorKind::InvalidConfig, "duplicate document id " + item.id);
        }
        model.doc_ids_.push_back(item.id);
    }
    model.vocab_ = build_vocab(texts, pv.min_token_count);
    if (model.vocab_.size() == 0) {
        throw Error(ErrorKind::VocabTooSmall, "no token reaches min_token_count=" + std::to_string(pv.min_token_count));
    }
    model.noise_ = NoiseSampler(model.vocab_);

    std::mt19937_64 rng(cfg.seed);
    model.doc_vectors_.resize(corpus.size() * dim);
    init_uniform(model.doc_vectors_, dim, rng);
    if (cfg.backend == Backend::pv_dm) {
        model.word_input_.resize(model.vocab_.size() * dim);
        init_uniform(model.word_input_, dim, rng);
    }
    model.word_output_.assign(model.vocab_.size() * dim, 0.0f);

    std::vector<std::vector<std::size_t>> encoded;
    encoded.reserve(corpus.size());
    std::size_t epoch_steps = 0;
    for (const TextItem& item : corpus) {
        encoded.push_back(model.encode(item.text));
        epoch_steps += encoded.back().size();
    }
    const double total_steps = static_cast<double>(epoch_steps * pv.epochs);
    auto lr_at = [&](double step) {
        return pv.learning_rate_initial - (pv.learning_rate_initial - pv.learning_rate_final) * step / total_steps;
    };

    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t workers = std::min(pv.workers, corpus.size());
    if (workers > 1) {
        model.log_.epoch_mean_loss.reserve(pv.epochs);
        logger().warn("pv training with {} unsynchronized workers: results are not reproducible", workers);
    }

    double processed = 0.0;
    for (std::size_t epoch = 0; epoch < pv.epochs; ++epoch) {
        shuffle(order, rng);
        double epoch_loss = 0.0;
        if (workers <= 1) {
            std::vector<float> hidden(dim);
            std::vector<float> delta(dim);
            for (std::size_t d : order) {
                const auto len = static_cast<double>(encoded[d].size());
                epoch_loss += model.train_document(std::span<float>(model.doc_vectors_).subspan(d * dim, dim),
                                                   encoded[d], rng, lr_at(processed), lr_at(processed + len), true,
                                                   hidden, delta);
                processed += len;
            }
        } else {
            // Hogwild: workers share word and output matrices without locks.
            std::vector<double> worker_loss(workers, 0.0);
            const std::size_t chunk = (order.size() + workers - 1) / workers;
            const double epoch_start = processed;
            {
                std::vector<std::jthread> pool;
                for (std::size_t w = 0; w < workers; ++w) {
                    pool.emplace_back([&, w] {
                        std::mt19937_64 worker_rng(cfg.seed ^ stable_hash(std::to_string(epoch * workers + w), 7));
                        std::vector<float> hidden(dim);
                        std::vector<float> delta(dim);
                        const std::size_t begin = w * chunk;
                        const std::size_t end = std::min(order.size(), begin + chunk);
                        double local = 0.0;
                        for (std::size_t idx = begin; idx < end; ++idx) {
                            const std::size_t d = order[idx];
                            const auto len = static_cast<double>(encoded[d].size());
                            const double at = epoch_start + local * static_cast<double>(workers);
                            worker_loss[w] += model.train_document(
                                std::span<float>(model.doc_vectors_).subspan(d * dim, dim), encoded[d], worker_rng,
                                lr_at(at), lr_at(std::min(total_steps, at + len * static_cast<double>(workers))),
                                true, hidden, delta);
                            local += len;
                        }
                    });
                }
            }
            epoch_loss = std::accumulate(worker_loss.begin(), worker_loss.end(), 0.0);
            processed = epoch_start + static_cast<double>(epoch_steps);
        }
        model.log_.epoch_mean_loss.push_back(epoch_steps == 0 ? 0.0
                                                               : epoch_loss / static_cast<double>(epoch_steps));
        logger().debug("pv epoch {} mean loss {:.6f}", epoch + 1, model.log_.epoch_mean_loss.back());
    }
    return model;
}

EmbeddingVector ParagraphVectorModel::document_vector(const std::string& id) const {
    const std::size_t row = doc_index_.at(id);
    const auto begin = doc_vectors_.begin() + static_cast<std::ptrdiff_t>(row * dim());
    return EmbeddingVector{id, std::vector<float>(begin, begin + static_cast<std::ptrdiff_t>(dim()))};
}

std::vector<EmbeddingVector> ParagraphVectorModel::document_vectors() const {
    std::vector<EmbeddingVector> out;
    out.reserve(doc_ids_.size());
    for (const std::string& id : doc_ids_) {
        out.push_back(document_vector(id));
    }
    return out;
}

EmbeddingVector ParagraphVectorModel::infer_vector(std::string_view text, std::string source_id) const {
    const std::size_t dim = config_.dim;
    EmbeddingVector out{std::move(source_id), std::vector<float>(dim, 0.0f)};
    const std::vector<std::size_t> tokens = encode(text);
    if (tokens.empty()) {
        return out;
    }
    const PvConfig& pv = *config_.pv;
    std::mt19937_64 rng(config_.seed ^ stable_hash(text, 0x696e666572ULL));
    init_uniform(out.values, dim, rng);

    std::vector<float> hidden(dim);
    std::vector<float> delta(dim);
    const auto len = static_cast<double>(tokens.size());
    const double total = len * static_cast<double>(pv.epochs);
    auto lr_at = [&](double step) {
        return pv.learning_rate_initial - (pv.learning_rate_initial - pv.learning_rate_final) * step / total;
    };
    // train_document only writes to the weight matrices when update_words is
    // true; here it is false, so the const_cast never leads to a write.
    auto& self = const_cast<ParagraphVectorModel&>(*this);
    for (std::size_t epoch = 0; epoch < pv.epochs; ++epoch) {
        const double start = static_cast<double>(epoch) * len;
        self.train_document(out.values, tokens, rng, lr_at(start), lr_at(start + len), false, hidden, delta);
    }
    return out;
}

void ParagraphVectorModel::save(const std::filesystem::path& path) const {
    Writer w(path);
    w.pod(kMagic);
    w.pod(kFormatVersion);
    w.pod(config_hash(config_));
    w.pod(static_cast<std::uint64_t>(config_.dim));
    w.pod(static_cast<std::uint64_t>(vocab_.size()));
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
        w.string(vocab_.tokens()[i]);
        w.pod(static_cast<std::uint64_t>(vocab_.entry(i).doc_frequency));
        w.pod(static_cast<std::uint64_t>(vocab_.entry(i).corpus_frequency));
    }
    w.pod(static_cast<std::uint64_t>(vocab_.total_docs()));
    w.pod(static_cast<std::uint64_t>(doc_ids_.size()));
    for (const std::string& id : doc_ids_) {
        w.string(id);
    }
    w.array(word_input_);
    w.array(word_output_);
    w.array(doc_vectors_);
    w.array(log_.epoch_mean_loss);
    w.finish();
}

ParagraphVectorModel ParagraphVectorModel::load(const std::filesystem::path& path, const EmbedderConfig& expected) {
    validate(expected);
    Reader r(path);
    const auto magic = r.pod<std::array<char, 8>>();
    if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic))) {
        throw Error(ErrorKind::Io, path.string() + " is not a paragraph vector model");
    }
    if (const auto version = r.pod<std::uint32_t>(); version != kFormatVersion) {
        throw Error(ErrorKind::Io, "unsupported model format version " + std::to_string(version));
    }
    if (r.pod<std::uint64_t>() != config_hash(expected)) {
        throw Error(ErrorKind::ConfigMismatch, path.string() + " was trained with a different configuration");
    }
    ParagraphVectorModel model;
    model.config_ = expected;
    const auto dim = r.pod<std::uint64_t>();
    const auto vocab_size = r.pod<std::uint64_t>();
    if (dim != expected.dim) {
        throw Error(ErrorKind::Io, "corrupt model file " + path.string());
    }
    std::vector<std::string> tokens;
    std::vector<VocabEntry> entries;
    for (std::uint64_t i = 0; i < vocab_size; ++i) {
        tokens.push_back(r.string());
        VocabEntry e;
        e.index = i;
        e.doc_frequency = r.pod<std::uint64_t>();
        e.corpus_frequency = r.pod<std::uint64_t>();
        entries.push_back(e);
    }
    const auto total_docs = r.pod<std::uint64_t>();
    model.vocab_ = VocabModel(std::move(tokens), std::move(entries), total_docs);
    model.noise_ = NoiseSampler(model.vocab_);
    const auto doc_count = r.pod<std::uint64_t>();
    for (std::uint64_t i = 0; i < doc_count; ++i) {
        model.doc_index_.emplace(r.string(), i);
    }
    model.doc_ids_.resize(doc_count);
    for (const auto& [id, row] : model.doc_index_) {
        model.doc_ids_[row] = id;
    }
    model.word_input_ = r.array<float>(vocab_size * dim);
    model.word_output_ = r.array<float>(vocab_size * dim);
    model.doc_vectors_ = r.array<float>(doc_count * dim);
    model.log_.epoch_mean_loss = r.array<double>(1u << 24);
    const bool dm = expected.backend == Backend::pv_dm;
    if (model.word_output_.size() != vocab_size * dim || model.doc_vectors_.size() != doc_count * dim ||
        model.word_input_.size() != (dm ? vocab_size * dim : 0)) {
        throw Error(ErrorKind::Io, "corrupt model file " + path.string());
    }
    return model;
}

}  // namespace ctrank
