#pragma once

#include <string>
#include <vector>

namespace themedet {

// Strips HTML tags and entity-decodes the usual suspects; <code>/<pre> blocks
// are removed wholesale.
std::string strip_html(const std::string& html);

std::string to_lower(const std::string& s);

// Word tokens: maximal runs of alphanumeric characters (UTF-8 continuation
// bytes count as word characters) with internal apostrophes kept.
std::vector<std::string> tokenize_words(const std::string& text);

std::string trim(const std::string& s);

}  // namespace themedet
