#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ctrank {

struct TopicField {
    std::string name;
    std::string value;

    bool operator==(const TopicField&) const = default;
};

/// One filled-in questionnaire. `query_text` is always flatten_topic(fields).
struct Topic {
    std::string topic_id;
    std::string disorder;
    std::vector<TopicField> fields;
    std::string query_text;

    bool operator==(const Topic&) const = default;
};

/// "name: value." per field, space separated, in field order, then clean_text.
std::string flatten_topic(const std::vector<TopicField>& fields);
std::string flatten_topic(const Topic& topic);

/// Canonical schema:
///
///     <topics>
///       <topic number="1" template="glaucoma">
///         <field name="age">64</field>
///       </topic>
///     </topics>
///
/// Field values of "not applicable" or "N/A" (any case) are stored as empty
/// strings, the same as an empty element.
/// Throws Error{MalformedXml} or Error{DuplicateTopicId}.
std::vector<Topic> parse_topics(std::string_view xml_text);

/// Adapter seam for alternate topic formats. Every reader must return topics
/// whose query_text was produced by flatten_topic.
using TopicReader = std::function<std::vector<Topic>(std::string_view)>;

/// "canonical" maps to parse_topics. Throws Error{InvalidConfig} for unknown names.
TopicReader topic_reader(std::string_view format);

/// JSON array mirror of a topic list; load_topics_json(dump_topics_json(x)) == x.
std::string dump_topics_json(const std::vector<Topic>& topics);
std::vector<Topic> load_topics_json(std::string_view json_text);

}  // namespace ctrank
