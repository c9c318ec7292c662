#include "ctrank/topic_model.hpp"

#include <set>

#include <json.hpp>

#include "ctrank/error.hpp"
#include "ctrank/text.hpp"
#include "ctrank/xml.hpp"

namespace ctrank {

namespace {

bool is_not_applicable(std::string_view value) {
    const std::string lower = to_lower_ascii(value);
    return lower == "not applicable" || lower == "n/a";
}

void check_unique(const std::vector<Topic>& topics) {
    std::set<std::string_view> seen;
    for (const auto& t : topics) {
        if (!seen.insert(t.topic_id).second) {
            throw Error(ErrorKind::DuplicateTopicId, "topic " + t.topic_id + " appears more than once");
        }
    }
}

}  // namespace

std::string flatten_topic(const std::vector<TopicField>& fields) {
    std::string out;
    for (const auto& f : fields) {
        if (!out.empty()) {
            out += ' ';
        }
        out += f.name;
        out += ": ";
        out += f.value;
        out += '.';
    }
    return clean_text(out);
}

std::string flatten_topic(const Topic& topic) {
    return flatten_topic(topic.fields);
}

std::vector<Topic> parse_topics(std::string_view xml_text) {
    const xml::Element root = xml::parse(sanitize_utf8(xml_text));
    if (root.name != "topics") {
        throw Error(ErrorKind::MalformedXml, "root element must be <topics>, found <" + root.name + ">");
    }
    std::vector<Topic> topics;
    for (const xml::Element& node : root.elements()) {
        if (node.name != "topic") {
            continue;
        }
        Topic topic;
        const auto number = node.attribute("number");
        if (!number || clean_text(*number).empty()) {
            throw Error(ErrorKind::MalformedXml, "<topic> without a number attribute");
        }
        topic.topic_id = clean_text(*number);
        topic.disorder = clean_text(node.attribute("template").value_or(""));
        for (const xml::Element& field : node.elements()) {
            if (field.name != "field") {
                continue;
            }
            TopicField f;
            f.name = clean_text(field.attribute("name").value_or(""));
            f.value = clean_text(field.text());
            if (is_not_applicable(f.value)) {
                f.value.clear();
            }
            topic.fields.push_back(std::move(f));
        }
        topic.query_text = flatten_topic(topic.fields);
        topics.push_back(std::move(topic));
    }
    check_unique(topics);
    return topics;
}

TopicReader topic_reader(std::string_view format) {
    if (format == "canonical") {
        return [](std::string_view text) { return parse_topics(text); };
    }
    throw Error(ErrorKind::InvalidConfig, "unknown topic format '" + std::string(format) + "'");
}

std::string dump_topics_json(const std::vector<Topic>& topics) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& t : topics) {
        nlohmann::ordered_json row;
        row["topic_id"] = t.topic_id;
        row["disorder"] = t.disorder;
        row["fields"] = nlohmann::ordered_json::array();
        for (const auto& f : t.fields) {
            row["fields"].push_back({{"name", f.name}, {"value", f.value}});
        }
        row["query_text"] = t.query_text;
        out.push_back(std::move(row));
    }
    return out.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

std::vector<Topic> load_topics_json(std::string_view json_text) {
    std::vector<Topic> topics;
    try {
        const auto doc = nlohmann::json::parse(json_text);
        for (const auto& row : doc) {
            Topic t;
            t.topic_id = row.at("topic_id").get<std::string>();
            t.disorder = row.at("disorder").get<std::string>();
            for (const auto& f : row.at("fields")) {
                t.fields.push_back({f.at("name").get<std::string>(), f.at("value").get<std::string>()});
            }
            t.query_text = row.at("query_text").get<std::string>();
            topics.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("bad topic JSON: ") + e.what());
    }
    check_unique(topics);
    return topics;
}

}  // namespace ctrank
