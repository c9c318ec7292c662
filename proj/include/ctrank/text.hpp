#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ctrank {

/// Replaces every invalid UTF-8 sequence with U+FFFD. Valid input is returned unchanged.
std::string sanitize_utf8(std::string_view bytes);

/// One pass of XML entity decoding: the five predefined entities, `&nbsp;`,
/// and decimal/hex character references. Unknown or malformed references are
/// copied through untouched.
std::string decode_entities(std::string_view text);

/// Collapses whitespace runs to a single space and trims both ends.
std::string normalize_whitespace(std::string_view text);

/// Normalizes free text for embedding: decodes entities (to a fixpoint, so
/// double-escaped dumps come out clean), drops control characters, collapses
/// whitespace. Idempotent.
std::string clean_text(std::string_view raw);

/// Lowercased alphanumeric runs. Bytes >= 0x80 count as token characters so
/// UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view text);

std::string to_lower_ascii(std::string_view text);

}  // namespace ctrank
