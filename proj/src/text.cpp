#include "themedet/text.hpp"

#include <cctype>

namespace themedet {

namespace {

bool is_word_char(unsigned char c) {
  return std::isalnum(c) || c >= 0x80;
}

}  // namespace

std::string strip_html(const std::string& html) {
  std::string out;
  out.reserve(html.size());
  std::size_t i = 0;
  while (i < html.size()) {
    if (html[i] == '<') {
      // Drop <code>...</code> and <pre>...</pre> including contents.
      for (const char* block : {"code", "pre"}) {
        std::string open = std::string("<") + block;
        std::string close = std::string("</") + block + ">";
        if (html.compare(i, open.size(), open) == 0) {
          std::size_t end = html.find(close, i);
          i = (end == std::string::npos) ? html.size() : end + close.size();
          goto next;
        }
      }
      {
        std::size_t end = html.find('>', i);
        // Block-level closers become sentence-ish whitespace.
        if (!out.empty() && out.back() != ' ' && out.back() != '\n') out.push_back(' ');
        i = (end == std::string::npos) ? html.size() : end + 1;
      }
    next:;
    } else if (html[i] == '&') {
      struct Ent { const char* name; const char* repl; };
      static const Ent ents[] = {{"&amp;", "&"}, {"&lt;", "<"}, {"&gt;", ">"},
                                 {"&quot;", "\""}, {"&#39;", "'"}, {"&apos;", "'"},
                                 {"&nbsp;", " "}};
      bool matched = false;
      for (const auto& e : ents) {
        std::string name = e.name;
        if (html.compare(i, name.size(), name) == 0) {
          out += e.repl;
          i += name.size();
          matched = true;
          break;
        }
      }
      if (!matched) {
        out.push_back(html[i]);
        ++i;
      }
    } else {
      out.push_back(html[i]);
      ++i;
    }
  }
  return out;
}

std::string to_lower(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> tokenize_words(const std::string& text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    if (!is_word_char(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < n) {
      unsigned char c = static_cast<unsigned char>(text[i]);
      if (is_word_char(c)) {
        ++i;
      } else if (c == '\'' && i + 1 < n &&
                 is_word_char(static_cast<unsigned char>(text[i + 1])) && i > start) {
        ++i;  // internal apostrophe: don't -> don't
      } else {
        break;
      }
    }
    tokens.push_back(text.substr(start, i - start));
  }
  return tokens;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace themedet
