#include "ctrank/xml.hpp"

#include "ctrank/error.hpp"
#include "ctrank/text.hpp"

namespace ctrank::xml {

std::optional<std::string_view> Element::attribute(std::string_view key) const {
    for (const auto& [k, v] : attributes) {
        if (k == key) {
            return std::string_view(v);
        }
    }
    return std::nullopt;
}

const Element* Element::child(std::string_view tag) const {
    for (const auto& e : elements_) {
        if (e.name == tag) {
            return &e;
        }
    }
    return nullptr;
}

const Element* Element::find(std::string_view tag) const {
    for (const auto& e : elements_) {
        if (e.name == tag) {
            return &e;
        }
        if (const Element* hit = e.find(tag)) {
            return hit;
        }
    }
    return nullptr;
}

std::string Element::text() const {
    std::string out;
    collect_text(out);
    return out;
}

std::string Element::own_text() const {
    std::string out;
    for (const auto& t : texts_) {
        out += t;
    }
    return out;
}

void Element::collect_text(std::string& out) const {
    for (const Slot& slot : order_) {
        if (slot.is_text) {
            out += texts_[slot.index];
        } else {
            elements_[slot.index].collect_text(out);
        }
    }
}

void Element::append_text(std::string text) {
    if (text.empty()) {
        return;
    }
    if (!order_.empty() && order_.back().is_text) {
        texts_[order_.back().index] += text;
        return;
    }
    order_.push_back({true, texts_.size()});
    texts_.push_back(std::move(text));
}

Element& Element::append_element(Element element) {
    order_.push_back({false, elements_.size()});
    elements_.push_back(std::move(element));
    return elements_.back();
}

namespace {

class Parser {
public:
    explicit Parser(std::string_view doc) : doc_(doc) {}

    Element run() {
        if (doc_.substr(0, 3) == "\xEF\xBB\xBF") {
            pos_ = 3;
        }
        skip_misc(true);
        if (eof() || peek() != '<') {
            fail("missing root element");
        }
        std::vector<Element> stack;
        std::optional<Element> root;

        // Root start tag.
        ++pos_;
        bool self_closing = false;
        stack.push_back(read_start_tag(self_closing));
        if (self_closing) {
            root = std::move(stack.back());
            stack.pop_back();
        }

        while (!stack.empty()) {
            if (eof()) {
                fail("unexpected end of document inside <" + stack.back().name + ">");
            }
            if (peek() != '<') {
                stack.back().append_text(read_text());
                continue;
            }
            if (starts_with("<!--")) {
                skip_comment();
            } else if (starts_with("<![CDATA[")) {
                pos_ += 9;
                const std::size_t end = doc_.find("]]>", pos_);
                if (end == std::string_view::npos) {
                    fail("unterminated CDATA section");
                }
                stack.back().append_text(std::string(doc_.substr(pos_, end - pos_)));
                pos_ = end + 3;
            } else if (starts_with("<?")) {
                skip_processing_instruction();
            } else if (starts_with("</")) {
                pos_ += 2;
                const std::string name = read_name();
                skip_whitespace();
                expect('>');
                if (name != stack.back().name) {
                    fail("closing tag </" + name + "> does not match <" + stack.back().name + ">");
                }
                Element done = std::move(stack.back());
                stack.pop_back();
                if (stack.empty()) {
                    root = std::move(done);
                } else {
                    stack.back().append_element(std::move(done));
                }
            } else if (starts_with("<!")) {
                fail("unexpected markup declaration in content");
            } else {
                ++pos_;
                bool closes = false;
                Element element = read_start_tag(closes);
                if (closes) {
                    stack.back().append_element(std::move(element));
                } else {
                    stack.push_back(std::move(element));
                }
            }
        }

        skip_misc(false);
        if (!eof()) {
            fail("content after the root element");
        }
        return std::move(*root);
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        std::size_t line = 1;
        for (std::size_t i = 0; i < pos_ && i < doc_.size(); ++i) {
            if (doc_[i] == '\n') {
                ++line;
            }
        }
        throw Error(ErrorKind::MalformedXml, what, line);
    }

    bool eof() const { return pos_ >= doc_.size(); }
    char peek() const { return doc_[pos_]; }
    bool starts_with(std::string_view s) const { return doc_.substr(pos_, s.size()) == s; }

    static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

    static bool is_name_char(char c) {
        return !(is_space(c) || c == '/' || c == '>' || c == '<' || c == '=' || c == '"' || c == '\'' ||
                 c == '&' || c == '!' || c == '?');
    }

    void skip_whitespace() {
        while (!eof() && is_space(peek())) {
            ++pos_;
        }
    }

    void expect(char c) {
        if (eof() || peek() != c) {
            fail(std::string("expected '") + c + "'");
        }
        ++pos_;
    }

    std::string read_name() {
        const std::size_t start = pos_;
        while (!eof() && is_name_char(peek())) {
            ++pos_;
        }
        if (pos_ == start) {
            fail("expected a name");
        }
        return std::string(doc_.substr(start, pos_ - start));
    }

    void skip_comment() {
        const std::size_t end = doc_.find("-->", pos_ + 4);
        if (end == std::string_view::npos) {
            fail("unterminated comment");
        }
        pos_ = end + 3;
    }

    void skip_processing_instruction() {
        const std::size_t end = doc_.find("?>", pos_ + 2);
        if (end == std::string_view::npos) {
            fail("unterminated processing instruction");
        }
        pos_ = end + 2;
    }

    void skip_doctype() {
        // <!DOCTYPE name ... [internal subset]>
        int bracket_depth = 0;
        pos_ += 9;
        while (!eof()) {
            const char c = peek();
            if (c == '[') {
                ++bracket_depth;
            } else if (c == ']') {
                --bracket_depth;
            } else if (c == '>' && bracket_depth <= 0) {
                ++pos_;
                return;
            } else if (c == '"' || c == '\'') {
                const std::size_t end = doc_.find(c, pos_ + 1);
                if (end == std::string_view::npos) {
                    break;
                }
                pos_ = end;
            }
            ++pos_;
        }
        fail("unterminated DOCTYPE");
    }

    // Whitespace, comments and processing instructions around the root element.
    void skip_misc(bool allow_doctype) {
        while (true) {
            skip_whitespace();
            if (starts_with("<!--")) {
                skip_comment();
            } else if (starts_with("<?")) {
                skip_processing_instruction();
            } else if (allow_doctype && starts_with("<!DOCTYPE")) {
                skip_doctype();
            } else {
                return;
            }
        }
    }

    std::string read_text() {
        const std::size_t start = pos_;
        while (!eof() && peek() != '<') {
            ++pos_;
        }
        return decode_entities(doc_.substr(start, pos_ - start));
    }

    std::string read_attribute_value() {
        if (eof() || (peek() != '"' && peek() != '\'')) {
            fail("attribute value must be quoted");
        }
        const char quote = peek();
        ++pos_;
        const std::size_t end = doc_.find(quote, pos_);
        if (end == std::string_view::npos) {
            fail("unterminated attribute value");
        }
        const std::string_view raw = doc_.substr(pos_, end - pos_);
        if (raw.find('<') != std::string_view::npos) {
            fail("'<' inside attribute value");
        }
        pos_ = end + 1;
        return decode_entities(raw);
    }

    // Called with pos_ just past '<'.
    Element read_start_tag(bool& self_closing) {
        Element element;
        element.name = read_name();
        while (true) {
            const std::size_t before = pos_;
            skip_whitespace();
            if (eof()) {
                fail("unterminated start tag <" + element.name + ">");
            }
            if (peek() == '>') {
                ++pos_;
                self_closing = false;
                return element;
            }
            if (starts_with("/>")) {
                pos_ += 2;
                self_closing = true;
                return element;
            }
            if (pos_ == before) {
                fail("expected whitespace before attribute in <" + element.name + ">");
            }
            std::string key = read_name();
            skip_whitespace();
            expect('=');
            skip_whitespace();
            std::string value = read_attribute_value();
            if (element.attribute(key)) {
                fail("duplicate attribute '" + key + "'");
            }
            element.attributes.emplace_back(std::move(key), std::move(value));
        }
    }

    std::string_view doc_;
    std::size_t pos_ = 0;
};

}  // namespace

Element parse(std::string_view document) {
    return Parser(document).run();
}

}  // namespace ctrank::xml
