#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ctrank/retrieval.hpp"

namespace ctrank {

/// Relevance grades: 0 non-relevant, 1 excluded, 2 eligible.
inline constexpr int kMaxGrade = 2;

using TopicJudgments = std::unordered_map<std::string, int>;

class QrelSet {
public:
    /// Throws Error{GradeOutOfRange} or Error{DuplicateJudgment}.
    void add(const std::string& topic_id, const std::string& nct_id, int grade);

    const std::vector<std::string>& topic_ids() const noexcept { return topic_order_; }
    /// Judgments for a topic, or nullptr if the topic has none.
    const TopicJudgments* topic(std::string_view topic_id) const;
    std::size_t size() const noexcept;

private:
    std::vector<std::string> topic_order_;
    std::map<std::string, TopicJudgments, std::less<>> judgments_;
};

/// "topic iteration doc grade" per line, whitespace separated.
/// Throws Error{MalformedQrelLine, DuplicateJudgment, GradeOutOfRange} with line numbers, Error{Io}.
QrelSet parse_qrels(std::string_view text);
QrelSet parse_qrels_file(const std::filesystem::path& path);

/// DCG@k = sum_{i<=min(k,n)} grade_i / log2(i + 1); the ideal DCG sorts every
/// judged grade for the topic descending. Zero when the ideal DCG is zero.
/// Unjudged documents have grade 0.
double ndcg_at_k(std::span<const std::string> ranked, const TopicJudgments& judged, std::size_t k);

/// Relevant documents in the top k over k (k is the denominator even when fewer were retrieved).
double precision_at_k(std::span<const std::string> ranked, const TopicJudgments& judged, std::size_t k,
                      int rel_threshold);

/// Sum of precision@i over relevant positions i <= k, divided by the number
/// of relevant judged documents R (not min(R, k)). Zero when R is zero.
double average_precision_at_k(std::span<const std::string> ranked, const TopicJudgments& judged, std::size_t k,
                              int rel_threshold);

/// Relevant documents in the top k over R. Zero when R is zero.
double recall_at_k(std::span<const std::string> ranked, const TopicJudgments& judged, std::size_t k,
                   int rel_threshold);

enum class Metric { ndcg, precision, map, recall };
inline constexpr Metric kAllMetrics[] = {Metric::ndcg, Metric::precision, Metric::map, Metric::recall};

std::string_view to_string(Metric metric) noexcept;

struct MetricKey {
    Metric metric;
    std::size_t cutoff;

    auto operator<=>(const MetricKey&) const = default;
};

struct MetricReport {
    std::vector<std::size_t> cutoffs{5, 10, 15, 20};
    int rel_threshold = 2;
    /// Evaluated topics in qrels order.
    std::vector<std::string> topic_ids;
    std::map<std::string, std::map<MetricKey, double>> per_topic;
    std::map<MetricKey, double> means;

    double mean(Metric metric, std::size_t cutoff) const { return means.at({metric, cutoff}); }
    double value(const std::string& topic_id, Metric metric, std::size_t cutoff) const {
        return per_topic.at(topic_id).at({metric, cutoff});
    }
};

/// Scores every qrels topic: topics missing from the run score zero, run
/// topics without judgments are skipped (and logged). Means are over the
/// evaluated topics. Throws Error{NoOverlap} when the run and qrels share no
/// topic, Error{InvalidConfig} for a zero cutoff or a threshold outside {1, 2}.
MetricReport evaluate_run(const RankedRun& run, const QrelSet& qrels,
                          std::span<const std::size_t> cutoffs = std::span<const std::size_t>(),
                          int rel_threshold = 2);

/// per_topic.csv: topic_id,metric,cutoff,value   (sorted by topic, metric, cutoff)
/// summary.csv:   metric,cutoff,mean
/// Values use six decimals.
std::string format_per_topic_csv(const MetricReport& report);
std::string format_summary_csv(const MetricReport& report);
void emit_report(const MetricReport& report, const std::filesystem::path& directory);

/// Two text tables: NDCG at every cutoff, then P/MAP/recall at every cutoff.
std::string format_report_table(const MetricReport& report);

/// Orders topic ids numerically when both are all digits, lexicographically otherwise.
bool topic_id_less(std::string_view a, std::string_view b);

}  // namespace ctrank
