#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ctrank::xml {

/// A parsed element. Text and child elements are kept in document order so
/// that `text()` reproduces mixed content faithfully.
class Element {
public:
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;

    const std::vector<Element>& elements() const noexcept { return elements_; }

    std::optional<std::string_view> attribute(std::string_view key) const;

    /// First direct child with the given tag name.
    const Element* child(std::string_view tag) const;

    /// First descendant (pre-order, excluding this element) with the given tag name.
    const Element* find(std::string_view tag) const;

    /// All descendant character data concatenated in document order.
    std::string text() const;

    /// Character data that sits directly inside this element.
    std::string own_text() const;

    void append_text(std::string text);
    Element& append_element(Element element);

private:
    struct Slot {
        bool is_text;
        std::size_t index;
    };
    void collect_text(std::string& out) const;

    std::vector<Element> elements_;
    std::vector<std::string> texts_;
    std::vector<Slot> order_;
};

/// Parses a complete document and returns its root element.
/// Throws Error{MalformedXml} on anything that is not well-formed.
Element parse(std::string_view document);

}  // namespace ctrank::xml
