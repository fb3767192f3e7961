#include "themedet/represent.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "themedet/text.hpp"

namespace themedet {

using nlohmann::json;

namespace {

const std::set<std::string>& abbreviations() {
  static const std::set<std::string> abbrevs = {
      "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "inc",
      "ltd", "co", "corp", "no", "fig", "al", "approx", "dept", "est", "min",
      "max", "e.g", "i.e", "u.s", "u.k", "a.m", "p.m", "ph.d", "jan", "feb",
      "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec"};
  return abbrevs;
}

bool is_upper_or_digit(unsigned char c) { return std::isupper(c) || std::isdigit(c); }

// Word (letters and internal periods) ending at text[pos-1], lowercased.
std::string word_before(const std::string& text, std::size_t pos) {
  std::size_t b = pos;
  while (b > 0) {
    unsigned char c = static_cast<unsigned char>(text[b - 1]);
    if (std::isalpha(c) || (c == '.' && b - 1 > 0 &&
                            std::isalpha(static_cast<unsigned char>(text[b - 2])))) {
      --b;
    } else {
      break;
    }
  }
  return to_lower(text.substr(b, pos - b));
}

}  // namespace

std::vector<std::string> segment(const std::string& text) {
  std::vector<std::string> sentences;
  const std::size_t n = text.size();
  std::size_t start = 0;
  for (std::size_t i = 0; i < n; ++i) {
    char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;

    if (c == '.') {
      // Decimal number: digit . digit
      if (i > 0 && i + 1 < n && std::isdigit(static_cast<unsigned char>(text[i - 1])) &&
          std::isdigit(static_cast<unsigned char>(text[i + 1])))
        continue;
      // Inside a closing quote/bracket the period ends the sentence even
      // after an abbreviation-looking word ("No.").
      const bool quoted = i + 1 < n && (text[i + 1] == '"' || text[i + 1] == '\'' ||
                                        text[i + 1] == ')' || text[i + 1] == ']');
      if (!quoted && abbreviations().count(word_before(text, i))) continue;
    }

    // Absorb runs of terminators and trailing quotes/brackets.
    std::size_t end = i + 1;
    while (end < n && (text[end] == '.' || text[end] == '!' || text[end] == '?' ||
                       text[end] == '"' || text[end] == '\'' || text[end] == ')' ||
                       text[end] == ']'))
      ++end;

    std::size_t ws = end;
    while (ws < n && std::isspace(static_cast<unsigned char>(text[ws]))) ++ws;
    if (ws == end) continue;  // no whitespace after terminator
    if (ws < n && !is_upper_or_digit(static_cast<unsigned char>(text[ws]))) continue;

    std::string sentence = trim(text.substr(start, end - start));
    if (!sentence.empty()) sentences.push_back(std::move(sentence));
    start = ws;
    i = end - 1;
  }
  std::string tail = trim(text.substr(start));
  if (!tail.empty()) sentences.push_back(std::move(tail));
  return sentences;
}

namespace {

const std::set<std::string>& nonpersonal_pronouns() {
  static const std::set<std::string> s = {"it", "its", "this", "that", "these",
                                          "those", "they", "them", "their"};
  return s;
}

bool is_possessive_pronoun(const std::string& lower) {
  return lower == "its" || lower == "their";
}

const Mention* chain_antecedent(const CorefChain& chain) {
  for (const auto& m : chain)
    if (m.is_antecedent) return &m;
  return nullptr;
}

}  // namespace

std::vector<std::string> resolve_pronouns(const std::vector<std::string>& sentences,
                                          const std::vector<CorefChain>& chains) {
  std::vector<std::string> out = sentences;

  // Collect replacements per sentence, applied right-to-left.
  struct Repl {
    int start, end;
    std::string text;
  };
  std::vector<std::vector<Repl>> repls(sentences.size());

  for (const auto& chain : chains) {
    const Mention* ante = chain_antecedent(chain);
    if (!ante) continue;
    for (const auto& m : chain) {
      if (&m == ante) continue;
      if (m.sentence_index < 0 || m.sentence_index >= static_cast<int>(sentences.size()) ||
          m.start < 0 || m.end > static_cast<int>(sentences[m.sentence_index].size()) ||
          m.start > m.end)
        throw DataError("coref mention span out of range in sentence " +
                        std::to_string(m.sentence_index));
      const std::string& sent = sentences[static_cast<std::size_t>(m.sentence_index)];
      std::string at = sent.substr(static_cast<std::size_t>(m.start),
                                   static_cast<std::size_t>(m.end - m.start));
      if (at != m.text) continue;  // stale span (e.g. already rewritten)
      std::string lower = to_lower(m.text);
      if (!nonpersonal_pronouns().count(lower)) continue;
      if ((lower == "they" || lower == "them" || lower == "their") && ante->is_human)
        continue;
      std::string repl = ante->text;
      if (is_possessive_pronoun(lower)) repl += "'s";
      repls[static_cast<std::size_t>(m.sentence_index)].push_back({m.start, m.end, repl});
    }
  }

  for (std::size_t s = 0; s < out.size(); ++s) {
    auto& rs = repls[s];
    std::sort(rs.begin(), rs.end(), [](const Repl& a, const Repl& b) { return a.start > b.start; });
    for (const auto& r : rs)
      out[s].replace(static_cast<std::size_t>(r.start),
                     static_cast<std::size_t>(r.end - r.start), r.text);
  }
  return out;
}

Lemmatizer Lemmatizer::from_file(const std::string& tsv_path) {
  std::ifstream in(tsv_path);
  if (!in) throw DataError("cannot open lemma lexicon: " + tsv_path);
  Lemmatizer lem;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError("lemma lexicon line " + std::to_string(line_no) + ": missing tab");
    lem.table_[to_lower(line.substr(0, tab))] = to_lower(trim(line.substr(tab + 1)));
  }
  return lem;
}

Lemmatizer Lemmatizer::from_pairs(std::vector<std::pair<std::string, std::string>> pairs) {
  Lemmatizer lem;
  for (auto& [infl, lemma] : pairs) lem.table_[to_lower(infl)] = to_lower(lemma);
  return lem;
}

std::string Lemmatizer::lemma(const std::string& token) const {
  std::string lower = to_lower(token);
  auto it = table_.find(lower);
  if (it != table_.end()) return it->second;
  auto ends_with = [&](const char* suf) {
    std::string s = suf;
    return lower.size() >= s.size() && lower.compare(lower.size() - s.size(), s.size(), s) == 0;
  };
  // Regular plural/3sg rules; anything irregular belongs in the table.
  if (ends_with("sses")) return lower.substr(0, lower.size() - 2);
  if (ends_with("ies") && lower.size() > 4) return lower.substr(0, lower.size() - 3) + "y";
  if (ends_with("s") && lower.size() > 3 && !ends_with("ss") && !ends_with("us") &&
      !ends_with("is"))
    return lower.substr(0, lower.size() - 1);
  return lower;
}

namespace {

bool is_nominal_pos(const std::string& pos) {
  if (pos == "NOUN" || pos == "PROPN" || pos == "PRON") return true;
  if (pos.rfind("NN", 0) == 0) return true;   // NN, NNS, NNP, NNPS
  if (pos.rfind("PRP", 0) == 0) return true;  // PRP, PRP$
  return false;
}

bool is_adverbial_or_adjectival_pos(const std::string& pos) {
  if (pos == "ADV" || pos == "ADJ") return true;
  if (pos.rfind("RB", 0) == 0) return true;  // RB, RBR, RBS
  if (pos.rfind("JJ", 0) == 0) return true;  // JJ, JJR, JJS
  return false;
}

bool is_core_arg(const std::string& role) {
  return role == "ARG0" || role == "ARG1" || role == "A0" || role == "A1";
}

std::string lemmatize_phrase(const std::string& phrase, const Lemmatizer& lem) {
  std::ostringstream out;
  bool first = true;
  for (const auto& tok : tokenize_words(phrase)) {
    if (!first) out << ' ';
    out << lem.lemma(tok);
    first = false;
  }
  return out.str();
}

}  // namespace

std::optional<ReducedString> reduce_parse(const SrlParse& parse, const Lemmatizer& lemmatizer) {
  bool has_nominal_core = false;
  for (const auto& arg : parse.arguments)
    if (is_core_arg(arg.role) && is_nominal_pos(arg.head_pos)) has_nominal_core = true;
  if (!has_nominal_core) return std::nullopt;

  struct Element {
    int start;
    std::string text;
  };
  std::vector<Element> elems;
  for (const auto& arg : parse.arguments) {
    if (is_adverbial_or_adjectival_pos(arg.head_pos)) continue;
    elems.push_back({arg.span.start, lemmatize_phrase(arg.span.text, lemmatizer)});
  }
  elems.push_back({parse.predicate.start, lemmatize_phrase(parse.predicate.text, lemmatizer)});
  std::sort(elems.begin(), elems.end(),
            [](const Element& a, const Element& b) { return a.start < b.start; });

  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < elems.size(); ++i) {
    if (i) out << ", ";
    out << elems[i].text;
  }
  out << ')';
  return ReducedString{parse.sentence_id, out.str()};
}

std::vector<SrlParse> filter_infinitive_complements(const std::vector<SrlParse>& parses) {
  std::vector<bool> drop(parses.size(), false);
  for (std::size_t p = 0; p < parses.size(); ++p) {
    std::string pred = to_lower(parses[p].predicate.text);
    if (pred != "need" && pred != "needs" && pred != "needed" && pred != "want" &&
        pred != "wants" && pred != "wanted")
      continue;
    for (std::size_t q = 0; q < parses.size(); ++q) {
      if (q == p) continue;
      const auto& embedded = parses[q].predicate;
      // Embedded predicate must sit inside one of the matrix verb's arguments
      // and be introduced by "to".
      bool inside_arg = false;
      for (const auto& arg : parses[p].arguments)
        if (embedded.start >= arg.span.start && embedded.end <= arg.span.end) inside_arg = true;
      if (!inside_arg) continue;
      const std::string& src = parses[q].source_text;
      std::size_t before = static_cast<std::size_t>(embedded.start);
      while (before > 0 && std::isspace(static_cast<unsigned char>(src[before - 1]))) --before;
      if (before >= 2 && to_lower(src.substr(before - 2, 2)) == "to" &&
          (before == 2 || !std::isalpha(static_cast<unsigned char>(src[before - 3]))))
        drop[q] = true;
    }
  }
  std::vector<SrlParse> kept;
  for (std::size_t i = 0; i < parses.size(); ++i)
    if (!drop[i]) kept.push_back(parses[i]);
  return kept;
}

namespace {

TokenSpan span_from_json(const json& j, const char* what, std::size_t line_no) {
  if (!j.is_object() || !j.contains("text") || !j.contains("start") || !j.contains("end"))
    throw DataError("line " + std::to_string(line_no) + ": malformed " + what + " span");
  return TokenSpan{j["text"].get<std::string>(), j["start"].get<int>(), j["end"].get<int>()};
}

}  // namespace

std::vector<SrlParse> load_srl_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open SRL annotation file: " + path);
  std::vector<SrlParse> parses;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    SrlParse p;
    p.sentence_id = rec.at("sentence_id").get<std::string>();
    p.predicate = span_from_json(rec.at("predicate"), "predicate", line_no);
    if (p.predicate.text.empty())
      throw DataError("line " + std::to_string(line_no) + ": empty predicate span");
    for (const auto& a : rec.at("args")) {
      SrlArgument arg;
      arg.role = a.at("role").get<std::string>();
      arg.span = span_from_json(a, "argument", line_no);
      arg.head_pos = a.at("head_pos").get<std::string>();
      p.arguments.push_back(std::move(arg));
    }
    if (rec.contains("source_text")) p.source_text = rec["source_text"].get<std::string>();
    parses.push_back(std::move(p));
  }
  return parses;
}

std::vector<QuestionCoref> load_coref_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open coref annotation file: " + path);
  std::vector<QuestionCoref> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    QuestionCoref qc;
    qc.question_id = rec.at("question_id").get<std::string>();
    for (const auto& chain_json : rec.at("chains")) {
      CorefChain chain;
      for (const auto& m : chain_json) {
        Mention mention;
        mention.sentence_index = m.at("sentence_index").get<int>();
        mention.start = m.at("start").get<int>();
        mention.end = m.at("end").get<int>();
        mention.text = m.at("text").get<std::string>();
        mention.is_antecedent = m.value("is_antecedent", false);
        mention.is_human = m.value("is_human", false);
        chain.push_back(std::move(mention));
      }
      qc.chains.push_back(std::move(chain));
    }
    out.push_back(std::move(qc));
  }
  return out;
}

}  // namespace themedet
