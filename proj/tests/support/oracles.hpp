#pragma once

// Reference implementations and fixtures shared by the unit tests and the
// acceptance binary. Nothing here calls into the library code it is used to
// check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

// ---------------------------------------------------------------- metrics

struct Instance {
    std::vector<std::string> ranking;
    std::map<std::string, int> grades;  // judged docs only
};

inline int grade_of(const Instance& in, const std::string& doc) {
    auto it = in.grades.find(doc);
    return it == in.grades.end() ? 0 : it->second;
}

inline double brute_ndcg(const Instance& in, std::size_t k) {
    double dcg = 0.0;
    for (std::size_t pos = 1; pos <= k && pos <= in.ranking.size(); ++pos) {
        dcg += grade_of(in, in.ranking[pos - 1]) / (std::log(static_cast<double>(pos) + 1.0) / std::log(2.0));
    }
    std::vector<int> ideal;
    for (const auto& [doc, g] : in.grades) {
        ideal.push_back(g);
    }
    std::sort(ideal.rbegin(), ideal.rend());
    double idcg = 0.0;
    for (std::size_t pos = 1; pos <= k && pos <= ideal.size(); ++pos) {
        idcg += ideal[pos - 1] / (std::log(static_cast<double>(pos) + 1.0) / std::log(2.0));
    }
    return idcg == 0.0 ? 0.0 : dcg / idcg;
}

inline std::size_t relevant_total(const Instance& in, int threshold) {
    std::size_t r = 0;
    for (const auto& [doc, g] : in.grades) {
        r += g >= threshold ? 1 : 0;
    }
    return r;
}

inline double brute_precision(const Instance& in, std::size_t k, int threshold) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < k && i < in.ranking.size(); ++i) {
        hits += grade_of(in, in.ranking[i]) >= threshold ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(k);
}

inline double brute_ap(const Instance& in, std::size_t k, int threshold) {
    const std::size_t r = relevant_total(in, threshold);
    if (r == 0) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t cut = 1; cut <= k && cut <= in.ranking.size(); ++cut) {
        if (grade_of(in, in.ranking[cut - 1]) >= threshold) {
            sum += brute_precision(in, cut, threshold);
        }
    }
    return sum / static_cast<double>(r);
}

inline double brute_recall(const Instance& in, std::size_t k, int threshold) {
    const std::size_t r = relevant_total(in, threshold);
    if (r == 0) {
        return 0.0;
    }
    return brute_precision(in, k, threshold) * static_cast<double>(k) / static_cast<double>(r);
}

// Up to 50 distinct docs ranked, a random judged pool that may include
// unranked docs, grades in {0, 1, 2}.
inline Instance random_instance(std::mt19937_64& rng) {
    Instance in;
    std::uniform_int_distribution<int> pool_size(1, 50);
    const int pool = pool_size(rng);
    std::vector<std::string> docs;
    for (int i = 0; i < pool + 10; ++i) {
        docs.push_back("NCT" + std::to_string(10000 + i));
    }
    std::shuffle(docs.begin(), docs.end(), rng);
    in.ranking.assign(docs.begin(), docs.begin() + pool);
    std::uniform_int_distribution<int> grade(0, 2);
    std::bernoulli_distribution judged(0.6);
    for (const auto& d : docs) {
        if (judged(rng)) {
            in.grades[d] = grade(rng);
        }
    }
    return in;
}

// ------------------------------------------------------------ segmentation

struct SegmentationCase {
    const char* raw;
    const char* inclusion;
    const char* exclusion;
};

// Expected passages worked out by hand from the splitting rules.
inline const std::vector<SegmentationCase>& segmentation_cases() {
    static const std::vector<SegmentationCase> cases = {
        {"Inclusion Criteria: A. B. Exclusion Criteria: C.", "A. B.", "C."},
        {"Eligibility: adults over 18", "Eligibility: adults over 18", ""},
        {"INCLUSION CRITERIA\n- x\nEXCLUSION CRITERIA\n- y", "- x", "- y"},
        {"inclusion criteria:\n\n  - age 18\n\nexclusion criteria:\n\n  - pregnant", "- age 18", "- pregnant"},
        {"Inclusion criteria - adults", "- adults", ""},
        {"Exclusion Criteria: smokers", "", "smokers"},
        {"Inclusion Criteria:\r\n* a\r\nExclusion Criteria:\r\n* b", "* a", "* b"},
        {"INCLUSION CRITERIA:A EXCLUSION CRITERIA:B", "A", "B"},
        {"Inclusion  Criteria :\n a\nExclusion\tCriteria\n b", "a", "b"},
        {"Inclusion Criteria:\n- a\n- meets exclusion criteria of study X\nExclusion Criteria:\n- b",
         "- a - meets exclusion criteria of study X", "- b"},
        {"", "", ""},
        {"   \n\t ", "", ""},
        {"Inclusion Criteria:", "", ""},
        {"Exclusion Criteria:\n- x\nInclusion Criteria:\n- y", "", "- x Inclusion Criteria: - y"},
        {"Inclusion Criteria:\n - age &gt;= 18\nExclusion Criteria:\n - HbA1c &lt; 7%", "- age >= 18",
         "- HbA1c < 7%"},
        {"DISEASE CHARACTERISTICS:\n- glaucoma\nINCLUSION CRITERIA:\n- adults\nEXCLUSION CRITERIA:\n- children",
         "DISEASE CHARACTERISTICS: - glaucoma - adults", "- children"},
        {"Inclusion Criteria:\n1. a\nExclusion Criteria:\n1. b\nExclusion Criteria:\n2. c", "1. a",
         "1. b Exclusion Criteria: 2. c"},
        {"inclusion criteria\nexclusion criteria", "", ""},
        {"Inclusioncriteria: a", "Inclusioncriteria: a", ""},
        {"        Inclusion Criteria:\n\n          -  Adults\n\n        Exclusion Criteria:\n\n          -  Pregnancy\n      ",
         "- Adults", "- Pregnancy"},
    };
    return cases;
}

inline std::vector<std::string> words(const std::string& text) {
    std::istringstream in(text);
    std::vector<std::string> out;
    for (std::string w; in >> w;) {
        out.push_back(w);
    }
    return out;
}

// A criteria string with known parts. Body words never contain a header.
struct CriteriaSample {
    std::string raw;
    std::vector<std::string> inclusion_words;
    std::vector<std::string> exclusion_words;
};

inline CriteriaSample random_criteria(std::mt19937_64& rng) {
    static const char* vocab[] = {"adults", "age", ">=", "18", "-", "*", "1.", "pregnancy", "diabetes",
                                  "HbA1c", "7%", "consent", "no", "prior", "surgery", "criteria",
                                  "inclusive", "exclusive", "glaucoma", "(a)", "mmHg", "eGFR", "a:b"};
    static const char* gaps[] = {" ", "  ", "\n", "\n\n", "\t", " \n  "};
    static const char* inc_headers[] = {"Inclusion Criteria:", "INCLUSION CRITERIA", "inclusion criteria :",
                                        "Inclusion\tCriteria:", "Inclusion  criteria"};
    static const char* exc_headers[] = {"Exclusion Criteria:", "EXCLUSION CRITERIA", "exclusion criteria :",
                                        "Exclusion\nCriteria:", "Exclusion  criteria"};
    auto pick = [&](auto& arr) {
        std::uniform_int_distribution<std::size_t> d(0, std::size(arr) - 1);
        return std::string(arr[d(rng)]);
    };
    auto body = [&](std::size_t max_words, std::vector<std::string>& sink) {
        std::uniform_int_distribution<std::size_t> n(0, max_words);
        std::string s;
        const std::size_t count = n(rng);
        for (std::size_t i = 0; i < count; ++i) {
            const std::string w = pick(vocab);
            s += pick(gaps) + w;
            sink.push_back(w);
        }
        return s + pick(gaps);
    };

    std::bernoulli_distribution coin(0.5);
    const bool has_inclusion = coin(rng);
    const bool has_exclusion = std::bernoulli_distribution(0.7)(rng);
    CriteriaSample s;
    if (has_inclusion) {
        if (coin(rng)) {
            s.raw += body(4, s.inclusion_words) + "\n";
        }
        s.raw += pick(inc_headers);
    }
    s.raw += body(12, s.inclusion_words);
    if (has_exclusion) {
        s.raw += "\n" + pick(exc_headers) + body(12, s.exclusion_words);
    }
    return s;
}

// -------------------------------------------------------- paragraph vectors

struct ToyCorpus {
    std::vector<std::string> texts;
};

// 30 docs: 0 and 1 are the same token sequence, 2 shares no token with them,
// the rest mix both vocabularies.
inline ToyCorpus toy_corpus() {
    std::mt19937_64 rng(20230401);
    std::vector<std::string> a, b;
    for (int i = 0; i < 40; ++i) {
        a.push_back("alpha" + std::to_string(i));
        b.push_back("beta" + std::to_string(i));
    }
    auto draw = [&](const std::vector<std::string>& from, std::size_t n) {
        std::uniform_int_distribution<std::size_t> d(0, from.size() - 1);
        std::string s;
        for (std::size_t i = 0; i < n; ++i) {
            s += (i ? " " : "") + from[d(rng)];
        }
        return s;
    };
    ToyCorpus toy;
    const std::string shared = draw(a, 40);
    toy.texts.push_back(shared);
    toy.texts.push_back(shared);
    toy.texts.push_back(draw(b, 40));
    for (int i = 3; i < 30; ++i) {
        toy.texts.push_back(draw(a, 20) + " " + draw(b, 20));
    }
    return toy;
}

inline double log_sigmoid(double x) {
    return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

// Negative-sampling loss for hidden h against rows of a row-major matrix.
inline double ns_loss(std::span<const double> h, std::span<const double> out, std::size_t dim, std::size_t target,
                      std::span<const std::size_t> noise) {
    auto dot = [&](std::size_t row) {
        double s = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            s += h[j] * out[row * dim + j];
        }
        return s;
    };
    double loss = -log_sigmoid(dot(target));
    for (std::size_t w : noise) {
        loss -= log_sigmoid(-dot(w));
    }
    return loss;
}

// --------------------------------------------------------------- vectors

inline double cosine(std::span<const float> a, std::span<const float> b) {
    long double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += static_cast<long double>(a[i]) * b[i];
        aa += static_cast<long double>(a[i]) * a[i];
        bb += static_cast<long double>(b[i]) * b[i];
    }
    if (aa == 0 || bb == 0) {
        return 0.0;
    }
    return static_cast<double>(ab / std::sqrt(aa * bb));
}

}  // namespace oracle
