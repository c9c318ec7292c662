#include "ctrank/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ctrank/error.hpp"
#include "ctrank/log.hpp"

namespace ctrank {

void QrelSet::add(const std::string& topic_id, const std::string& nct_id, int grade) {
    if (grade < 0 || grade > kMaxGrade) {
        throw Error(ErrorKind::GradeOutOfRange, "grade " + std::to_string(grade) + " for (" + topic_id + ", " +
                                                    nct_id + ") is outside 0.." + std::to_string(kMaxGrade));
    }
    auto [it, inserted] = judgments_.try_emplace(topic_id);
    if (inserted) {
        topic_order_.push_back(topic_id);
    }
    if (!it->second.emplace(nct_id, grade).second) {
        throw Error(ErrorKind::DuplicateJudgment, "(" + topic_id + ", " + nct_id + ") is judged twice");
    }
}

const TopicJudgments* QrelSet::topic(std::string_view topic_id) const {
    const auto it = judgments_.find(topic_id);
    return it == judgments_.end() ? nullptr : &it->second;
}

std::size_t QrelSet::size() const noexcept {
    std::size_t n = 0;
    for (const auto& [topic, judged] : judgments_) {
        n += judged.size();
    }
    return n;
}

QrelSet parse_qrels(std::string_view text) {
    QrelSet qrels;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::vector<std::string> cols;
        for (std::string col; fields >> col;) {
            cols.push_back(std::move(col));
        }
        if (cols.empty()) {
            continue;
        }
        if (cols.size() != 4) {
            throw Error(ErrorKind::MalformedQrelLine, "expected 4 columns, found " + std::to_string(cols.size()),
                        line_no);
        }
        int grade = 0;
        const std::string& g = cols[3];
        const auto [end, ec] = std::from_chars(g.data(), g.data() + g.size(), grade);
        if (ec != std::errc() || end != g.data() + g.size()) {
            throw Error(ErrorKind::MalformedQrelLine, "grade must be an integer, got '" + g + "'", line_no);
        }
        try {
            qrels.add(cols[0], cols[2], grade);
        } catch (const Error& e) {
            throw Error(e.kind(), e.detail(), line_no);
        }
    }
    return qrels;
}

QrelSet parse_qrels_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open qrels file " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_qrels(buffer.str());
}

namespace {

int grade_of(const TopicJudgments& judged, const std::string& doc) {
    const auto it = judged.find(doc);
    return it == judged.end() ? 0 : it->second;
}

std::size_t relevant_total(const TopicJudgments& judged, int rel_threshold) {
    std::size_t r = 0;
    for (const auto& [doc, grade] : judged) {
        if (grade >= rel_threshold) {
            ++r;
        }
    }
    return r;
}

std::size_t relevant_in_top(std::span<const std::string> ranked, const TopicJudgments& judged, std::size_t k,
                            int rel_threshold) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
        if (grade_of(judged, ranked[i]) >= rel_threshold) {
            ++hits;
        }
    }
    return hits;
}

void check_k(std::size_t k) {
    if (k == 0) {
        throw Error(ErrorKind::InvalidConfig, "metric cutoff must be at least 1");
    }
}

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

double ndcg_at_k(std::span<const std::string> ranked, const TopicJudgments& judged, std::size_t k) {
    check_k(k);
    double dcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
        dcg += grade_of(judged, ranked[i]) / std::log2(static_cast<double>(i) + 2.0);
    }
    std::vector<int> ideal;
    ideal.reserve(judged.size());
    for (const auto& [doc, grade] : judged) {
        ideal.push_back(grade);
    }
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
        idcg += ideal[i] / std::log2(static_cast<double>(i) + 2.0);
    }
    return idcg > 0.0 ? dcg / idcg : 0.0;
}

double precision_at_k(std::span<const std::string> ranked, const TopicJudgments& judged, std::size_t k,
                      int rel_threshold) {
    check_k(k);
    return static_cast<double>(relevant_in_top(ranked, judged, k, rel_threshold)) / static_cast<double>(k);
}

double average_precision_at_k(std::span<const std::string> ranked, const TopicJudgments& judged, std::size_t k,
                              int rel_threshold) {
    check_k(k);
    const std::size_t total = relevant_total(judged, rel_threshold);
    if (total == 0) {
        return 0.0;
    }
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
        if (grade_of(judged, ranked[i]) >= rel_threshold) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(total);
}

double recall_at_k(std::span<const std::string> ranked, const TopicJudgments& judged, std::size_t k,
                   int rel_threshold) {
    check_k(k);
    const std::size_t total = relevant_total(judged, rel_threshold);
    if (total == 0) {
        return 0.0;
    }
    return static_cast<double>(relevant_in_top(ranked, judged, k, rel_threshold)) / static_cast<double>(total);
}

std::string_view to_string(Metric metric) noexcept {
    switch (metric) {
        case Metric::ndcg: return "ndcg";
        case Metric::precision: return "P";
        case Metric::map: return "map";
        case Metric::recall: return "recall";
    }
    return "unknown";
}

bool topic_id_less(std::string_view a, std::string_view b) {
    auto numeric = [](std::string_view s) {
        return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
    };
    auto strip = [](std::string_view s) {
        const std::size_t nz = s.find_first_not_of('0');
        return nz == std::string_view::npos ? std::string_view("0") : s.substr(nz);
    };
    const bool na = numeric(a);
    const bool nb = numeric(b);
    if (na != nb) {
        return na;
    }
    if (na) {
        const auto sa = strip(a);
        const auto sb = strip(b);
        if (sa.size() != sb.size()) {
            return sa.size() < sb.size();
        }
        if (sa != sb) {
            return sa < sb;
        }
    }
    return a < b;
}

MetricReport evaluate_run(const RankedRun& run, const QrelSet& qrels, std::span<const std::size_t> cutoffs,
                          int rel_threshold) {
    MetricReport report;
    if (!cutoffs.empty()) {
        report.cutoffs.assign(cutoffs.begin(), cutoffs.end());
    }
    for (std::size_t k : report.cutoffs) {
        check_k(k);
    }
    if (rel_threshold != 1 && rel_threshold != 2) {
        throw Error(ErrorKind::InvalidConfig, "rel_threshold must be 1 or 2");
    }
    report.rel_threshold = rel_threshold;

    std::map<std::string_view, std::vector<std::string>> ranked_by_topic;
    for (const TopicRanking& topic : run.topics) {
        auto& docs = ranked_by_topic[topic.topic_id];
        for (const RunEntry& e : topic.entries) {
            docs.push_back(e.nct_id);
        }
        if (qrels.topic(topic.topic_id) == nullptr) {
            logger().info("topic {} has no judgments; skipped", topic.topic_id);
        }
    }
    std::size_t overlap = 0;
    for (const std::string& topic_id : qrels.topic_ids()) {
        overlap += ranked_by_topic.count(topic_id);
    }
    if (overlap == 0) {
        throw Error(ErrorKind::NoOverlap, "run and qrels share no topic id");
    }

    const std::vector<std::string> empty;
    for (const std::string& topic_id : qrels.topic_ids()) {
        const TopicJudgments& judged = *qrels.topic(topic_id);
        const auto hit = ranked_by_topic.find(topic_id);
        const std::vector<std::string>& ranked = hit == ranked_by_topic.end() ? empty : hit->second;
        if (hit == ranked_by_topic.end()) {
            logger().info("topic {} is judged but missing from the run; scored 0", topic_id);
        }
        auto& values = report.per_topic[topic_id];
        for (std::size_t k : report.cutoffs) {
            values[{Metric::ndcg, k}] = ndcg_at_k(ranked, judged, k);
            values[{Metric::precision, k}] = precision_at_k(ranked, judged, k, rel_threshold);
            values[{Metric::map, k}] = average_precision_at_k(ranked, judged, k, rel_threshold);
            values[{Metric::recall, k}] = recall_at_k(ranked, judged, k, rel_threshold);
        }
        report.topic_ids.push_back(topic_id);
    }

    const auto n = static_cast<double>(report.topic_ids.size());
    for (Metric m : kAllMetrics) {
        for (std::size_t k : report.cutoffs) {
            double sum = 0.0;
            for (const std::string& topic_id : report.topic_ids) {
                sum += report.per_topic[topic_id][{m, k}];
            }
            report.means[{m, k}] = sum / n;
        }
    }
    return report;
}

std::string format_per_topic_csv(const MetricReport& report) {
    std::vector<std::string> topics = report.topic_ids;
    std::sort(topics.begin(), topics.end(), topic_id_less);
    std::vector<std::size_t> cutoffs = report.cutoffs;
    std::sort(cutoffs.begin(), cutoffs.end());
    cutoffs.erase(std::unique(cutoffs.begin(), cutoffs.end()), cutoffs.end());

    std::string out = "topic_id,metric,cutoff,value\n";
    for (const std::string& topic : topics) {
        for (Metric m : kAllMetrics) {
            for (std::size_t k : cutoffs) {
                out += topic + "," + std::string(to_string(m)) + "," + std::to_string(k) + "," +
                       fixed6(report.value(topic, m, k)) + "\n";
            }
        }
    }
    return out;
}

std::string format_summary_csv(const MetricReport& report) {
    std::vector<std::size_t> cutoffs = report.cutoffs;
    std::sort(cutoffs.begin(), cutoffs.end());
    cutoffs.erase(std::unique(cutoffs.begin(), cutoffs.end()), cutoffs.end());
    std::string out = "metric,cutoff,mean\n";
    for (Metric m : kAllMetrics) {
        for (std::size_t k : cutoffs) {
            out += std::string(to_string(m)) + "," + std::to_string(k) + "," + fixed6(report.mean(m, k)) + "\n";
        }
    }
    return out;
}

void emit_report(const MetricReport& report, const std::filesystem::path& directory) {
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    for (const auto& [name, text] : {std::pair{"per_topic.csv", format_per_topic_csv(report)},
                                     std::pair{"summary.csv", format_summary_csv(report)}}) {
        const auto path = directory / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        out.flush();
        if (!out) {
            throw Error(ErrorKind::Io, "cannot write " + path.string());
        }
    }
}

std::string format_report_table(const MetricReport& report) {
    auto cell = [](const std::string& s) {
        std::string padded = s;
        padded.resize(std::max<std::size_t>(12, s.size() + 2), ' ');
        return padded;
    };
    std::string out = "Evaluated topics: " + std::to_string(report.topic_ids.size()) +
                      "  (relevant = grade >= " + std::to_string(report.rel_threshold) + ")\n\n";
    out += cell("");
    for (std::size_t k : report.cutoffs) {
        out += cell("NDCG@" + std::to_string(k));
    }
    out += "\n" + cell("mean");
    for (std::size_t k : report.cutoffs) {
        out += cell(fixed6(report.mean(Metric::ndcg, k)));
    }
    out += "\n\n";
    for (std::size_t k : report.cutoffs) {
        const std::string at = "@" + std::to_string(k);
        out += cell("") + cell("P" + at) + cell("map" + at) + cell("recall" + at) + "\n";
        out += cell("mean") + cell(fixed6(report.mean(Metric::precision, k))) +
               cell(fixed6(report.mean(Metric::map, k))) + cell(fixed6(report.mean(Metric::recall, k))) + "\n";
    }
    return out;
}

}  // namespace ctrank
