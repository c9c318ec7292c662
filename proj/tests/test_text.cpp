#include <random>

#include <doctest.h>

#include "ctrank/error.hpp"
#include "ctrank/text.hpp"
#include "ctrank/xml.hpp"

using namespace ctrank;

TEST_CASE("clean_text examples") {
    CHECK(clean_text("a\n\n  b\tc ") == "a b c");
    CHECK(clean_text("") == "");
    CHECK(clean_text("x &amp; y") == "x & y");
    CHECK(clean_text("a\x01" "b\x7f c") == "ab c");
    CHECK(clean_text("5 &lt; 7 &#38; 8 &#x3E; 2") == "5 < 7 & 8 > 2");
    CHECK(clean_text("double &amp;amp; escaped") == "double & escaped");
    CHECK(clean_text("a&nbsp;b") == "a b");
    CHECK(clean_text("&bogus; & stays") == "&bogus; & stays");
}

TEST_CASE("clean_text is idempotent on random input") {
    std::mt19937_64 rng(7);
    const std::string alphabet = "ab &;#x3Cltgamp\n\t\r\x01 \x7f" "0123456789";
    std::uniform_int_distribution<std::size_t> len(0, 40), pick(0, alphabet.size() - 1);
    for (int i = 0; i < 2000; ++i) {
        std::string s;
        for (std::size_t n = len(rng); n > 0; --n) {
            s += alphabet[pick(rng)];
        }
        const std::string once = clean_text(s);
        CHECK_MESSAGE(clean_text(once) == once, s);
    }
}

TEST_CASE("sanitize_utf8") {
    CHECK(sanitize_utf8("plain") == "plain");
    CHECK(sanitize_utf8("caf\xc3\xa9") == "caf\xc3\xa9");
    CHECK(sanitize_utf8("bad\xff!") == "bad\xef\xbf\xbd!");
    CHECK(sanitize_utf8("\xc3") == "\xef\xbf\xbd");
}

TEST_CASE("tokenize") {
    CHECK(tokenize("HbA1c >= 7.5%, Type-2") == std::vector<std::string>{"hba1c", "7", "5", "type", "2"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("caf\xc3\xa9 au lait") == std::vector<std::string>{"caf\xc3\xa9", "au", "lait"});
}

TEST_CASE("xml parse: structure, entities, CDATA, comments") {
    const auto root = xml::parse(
        "\xEF\xBB\xBF<?xml version=\"1.0\"?>\n<!DOCTYPE x>\n<!-- c -->\n"
        "<a k=\"v &amp; w\"><b>one</b> mid <![CDATA[<raw>]]><c><b>two</b></c><?pi x?></a>");
    CHECK(root.name == "a");
    CHECK(root.attribute("k") == "v & w");
    CHECK(!root.attribute("missing"));
    REQUIRE(root.child("b") != nullptr);
    CHECK(root.child("b")->text() == "one");
    CHECK(root.child("missing") == nullptr);
    CHECK(root.find("c")->child("b")->text() == "two");
    CHECK(root.text() == "one mid <raw>two");
    CHECK(root.own_text() == " mid <raw>");
}

TEST_CASE("xml parse: malformed input") {
    const char* bad[] = {"", "<a>", "<a></b>", "<a><b></a>", "text", "<a/><b/>", "<a x=1/>", "<a><!-- open </a>"};
    for (const char* doc : bad) {
        try {
            xml::parse(doc);
            FAIL("accepted: " << std::string(doc));
        } catch (const Error& e) {
            CHECK_MESSAGE(e.kind() == ErrorKind::MalformedXml, doc);
        }
    }
}

TEST_CASE("xml parse: unknown entity references pass through") {
    CHECK(xml::parse("<a>caf&eacute; &amp; co</a>").text() == "caf&eacute; & co");
}
