#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cctype>
#include <fstream>
#include <random>

#include <json.hpp>

#include "themedet/represent.hpp"
#include "themedet/text.hpp"
#include "test_util.hpp"

using namespace themedet;
using nlohmann::json;

TEST_CASE("segment splits two terminated sentences") {
  auto s = segment("I lost my card. It was stolen.");
  REQUIRE(s.size() == 2);
  CHECK(s[0] == "I lost my card.");
  CHECK(s[1] == "It was stolen.");
}

TEST_CASE("segment keeps an unterminated tail") {
  auto s = segment("What is APR");
  REQUIRE(s.size() == 1);
  CHECK(s[0] == "What is APR");
}

TEST_CASE("segment returns nothing for whitespace input") {
  CHECK(segment("").empty());
  CHECK(segment("   \n\t ").empty());
}

TEST_CASE("segment matches the hand-labeled fixture") {
  std::ifstream in("tests/data/segmentation_fixture.jsonl");
  REQUIRE(in.good());
  std::string line;
  std::size_t cases = 0, sentences = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    auto expected = rec["sentences"].get<std::vector<std::string>>();
    auto actual = segment(rec["text"].get<std::string>());
    INFO("text: ", rec["text"].get<std::string>());
    CHECK(actual == expected);
    ++cases;
    sentences += expected.size();
  }
  CHECK(cases >= 25);
  CHECK(sentences >= 50);
}

TEST_CASE("segment preserves non-whitespace content") {
  const std::string text = "I paid $3.50. Then I left! Did you? Sure.";
  std::string joined;
  for (const auto& s : segment(text)) joined += s;
  std::string expected_chars, actual_chars;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) expected_chars.push_back(c);
  for (char c : joined)
    if (!std::isspace(static_cast<unsigned char>(c))) actual_chars.push_back(c);
  CHECK(actual_chars == expected_chars);
}

namespace {

CorefChain card_chain() {
  Mention ante;
  ante.sentence_index = 0;
  ante.start = 17;
  ante.end = 24;
  ante.text = "my card";
  ante.is_antecedent = true;
  Mention pron;
  pron.sentence_index = 1;
  pron.start = 0;
  pron.end = 2;
  pron.text = "it";
  return {ante, pron};
}

}  // namespace

TEST_CASE("resolve_pronouns rewrites a non-personal pronoun to its antecedent") {
  std::vector<std::string> sentences = {"I'm calling about my card", "it's not working"};
  auto out = resolve_pronouns(sentences, {card_chain()});
  REQUIRE(out.size() == 2);
  CHECK(out[0] == "I'm calling about my card");
  CHECK(out[1] == "my card's not working");
}

TEST_CASE("resolve_pronouns with no chains is the identity") {
  std::vector<std::string> sentences = {"I lost it", "What now?"};
  CHECK(resolve_pronouns(sentences, {}) == sentences);
}

TEST_CASE("resolve_pronouns keeps unresolvable pronouns") {
  std::vector<std::string> sentences = {"I lost it"};
  Mention a;
  a.sentence_index = 0;
  a.start = 0;
  a.end = 1;
  a.text = "I";
  a.is_antecedent = true;
  // Chain does not cover "it"; nothing should change.
  auto out = resolve_pronouns(sentences, {{a, a}});
  CHECK(out == sentences);
}

TEST_CASE("resolve_pronouns leaves personal pronouns and human they alone") {
  std::vector<std::string> sentences = {"The agents helped", "they were kind"};
  Mention ante;
  ante.sentence_index = 0;
  ante.start = 0;
  ante.end = 10;
  ante.text = "The agents";
  ante.is_antecedent = true;
  ante.is_human = true;
  Mention they;
  they.sentence_index = 1;
  they.start = 0;
  they.end = 4;
  they.text = "they";
  auto out = resolve_pronouns(sentences, {{ante, they}});
  CHECK(out[1] == "they were kind");
}

TEST_CASE("resolve_pronouns is idempotent") {
  std::vector<std::string> sentences = {"I'm calling about my card", "it's not working"};
  auto chains = std::vector<CorefChain>{card_chain()};
  auto once = resolve_pronouns(sentences, chains);
  auto twice = resolve_pronouns(once, chains);
  CHECK(once == twice);
}

TEST_CASE("resolve_pronouns rejects out-of-range spans") {
  std::vector<std::string> sentences = {"short"};
  Mention ante;
  ante.sentence_index = 0;
  ante.start = 0;
  ante.end = 5;
  ante.text = "short";
  ante.is_antecedent = true;
  Mention bad;
  bad.sentence_index = 0;
  bad.start = 3;
  bad.end = 99;
  bad.text = "it";
  CHECK_THROWS_AS(resolve_pronouns(sentences, {{ante, bad}}), DataError);
}

namespace {

Lemmatizer test_lemmatizer() { return Lemmatizer::from_file("data/lemmas.tsv"); }

SrlParse live_in_california() {
  SrlParse p;
  p.sentence_id = "s1";
  p.source_text = "I live in California";
  p.predicate = {"live", 2, 6};
  p.arguments.push_back({"ARG0", {"I", 0, 1}, "PRP"});
  p.arguments.push_back({"ARGM-LOC", {"in California", 7, 20}, "PROPN"});
  return p;
}

}  // namespace

TEST_CASE("reduce_parse renders the worked example") {
  auto reduced = reduce_parse(live_in_california(), test_lemmatizer());
  REQUIRE(reduced.has_value());
  CHECK(reduced->text == "(i, live, in california)");
  CHECK(reduced->sentence_id == "s1");
}

TEST_CASE("reduce_parse deletes adverbial arguments") {
  auto p = live_in_california();
  p.arguments.push_back({"ARGM-ADV", {"totally", 21, 28}, "RB"});
  auto reduced = reduce_parse(p, test_lemmatizer());
  REQUIRE(reduced.has_value());
  CHECK(reduced->text == "(i, live, in california)");
}

TEST_CASE("reduce_parse discards parses without a nominal subject/object") {
  SrlParse p;
  p.sentence_id = "s2";
  p.source_text = "Totally agreed quickly";
  p.predicate = {"agreed", 8, 14};
  p.arguments.push_back({"ARG0", {"Totally", 0, 7}, "RB"});
  p.arguments.push_back({"ARG1", {"quickly", 15, 22}, "RB"});
  CHECK(!reduce_parse(p, test_lemmatizer()).has_value());
}

TEST_CASE("reduce_parse lemmatizes and lowercases") {
  SrlParse p;
  p.sentence_id = "s3";
  p.source_text = "My parents' estate was in Pennsylvania";
  p.predicate = {"was", 19, 22};
  p.arguments.push_back({"ARG1", {"My parents' estate", 0, 18}, "NOUN"});
  p.arguments.push_back({"ARG2", {"in Pennsylvania", 23, 38}, "PROPN"});
  auto reduced = reduce_parse(p, test_lemmatizer());
  REQUIRE(reduced.has_value());
  CHECK(reduced->text == "(my parent estate, be, in pennsylvania)");
}

TEST_CASE("reduced strings never contain uppercase or lack a nominal core (fuzz)") {
  std::mt19937 rng(20210531);
  const char* roles[] = {"ARG0", "ARG1", "ARG2", "ARGM-ADV", "ARGM-LOC"};
  const char* pos_tags[] = {"NOUN", "PROPN", "PRON", "RB", "JJ", "VB", "IN"};
  const char* words[] = {"Cards", "Banks", "Mortgage", "Totally", "Was", "Fees", "Paid"};
  auto lem = test_lemmatizer();
  for (int trial = 0; trial < 500; ++trial) {
    SrlParse p;
    p.sentence_id = "fz";
    p.predicate = {"Checked", 0, 7};
    const int n_args = 1 + static_cast<int>(rng() % 4);
    int offset = 8;
    for (int a = 0; a < n_args; ++a) {
      std::string w = words[rng() % 7];
      p.arguments.push_back(
          {roles[rng() % 5], {w, offset, offset + static_cast<int>(w.size())}, pos_tags[rng() % 7]});
      offset += static_cast<int>(w.size()) + 1;
    }
    bool has_nominal_core = false;
    for (const auto& arg : p.arguments) {
      bool core = arg.role == "ARG0" || arg.role == "ARG1";
      bool nominal = arg.head_pos == "NOUN" || arg.head_pos == "PROPN" || arg.head_pos == "PRON";
      if (core && nominal) has_nominal_core = true;
    }
    auto reduced = reduce_parse(p, lem);
    CHECK(reduced.has_value() == has_nominal_core);
    if (reduced) {
      for (char c : reduced->text)
        CHECK(!std::isupper(static_cast<unsigned char>(c)));
      CHECK(reduced->text.find("cards") == std::string::npos);  // lemmatized
      CHECK(reduced->text.find("was") == std::string::npos);
    }
  }
}

namespace {

std::vector<SrlParse> need_to_know_parses() {
  const std::string src = "I need to know my password";
  SrlParse need;
  need.sentence_id = "s";
  need.source_text = src;
  need.predicate = {"need", 2, 6};
  need.arguments.push_back({"ARG0", {"I", 0, 1}, "PRP"});
  need.arguments.push_back({"ARG1", {"to know my password", 7, 26}, "NOUN"});
  SrlParse know;
  know.sentence_id = "s";
  know.source_text = src;
  know.predicate = {"know", 10, 14};
  know.arguments.push_back({"ARG0", {"I", 0, 1}, "PRP"});
  know.arguments.push_back({"ARG1", {"my password", 15, 26}, "NOUN"});
  return {need, know};
}

}  // namespace

TEST_CASE("filter_infinitive_complements keeps the need parse") {
  auto kept = filter_infinitive_complements(need_to_know_parses());
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].predicate.text == "need");
}

TEST_CASE("filter_infinitive_complements handles want analogs") {
  const std::string src = "I want to open an account";
  SrlParse want;
  want.sentence_id = "s";
  want.source_text = src;
  want.predicate = {"want", 2, 6};
  want.arguments.push_back({"ARG0", {"I", 0, 1}, "PRP"});
  want.arguments.push_back({"ARG1", {"to open an account", 7, 25}, "NOUN"});
  SrlParse open;
  open.sentence_id = "s";
  open.source_text = src;
  open.predicate = {"open", 10, 14};
  open.arguments.push_back({"ARG0", {"I", 0, 1}, "PRP"});
  open.arguments.push_back({"ARG1", {"an account", 15, 25}, "NOUN"});
  auto kept = filter_infinitive_complements({want, open});
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].predicate.text == "want");
}

TEST_CASE("filter_infinitive_complements is a no-op without the pattern") {
  auto p = live_in_california();
  auto kept = filter_infinitive_complements({p});
  CHECK(kept.size() == 1);
}

TEST_CASE("lemmatizer applies table entries and regular rules") {
  auto lem = test_lemmatizer();
  CHECK(lem.lemma("was") == "be");
  CHECK(lem.lemma("Was") == "be");
  CHECK(lem.lemma("cards") == "card");
  CHECK(lem.lemma("stories") == "story");
  CHECK(lem.lemma("passes") == "pass");
  CHECK(lem.lemma("bus") == "bus");
  CHECK(lem.lemma("analysis") == "analysis");
  CHECK(lem.lemma("unknownword") == "unknownword");
}

TEST_CASE("srl and coref files round-trip through the loaders") {
  std::string srl_path = testutil::temp_file(
      "srl",
      R"({"sentence_id":"q1#0","predicate":{"text":"live","start":2,"end":6},"args":[{"role":"ARG0","text":"I","start":0,"end":1,"head_pos":"PRP"}],"source_text":"I live in California"})"
      "\n");
  auto parses = load_srl_file(srl_path);
  REQUIRE(parses.size() == 1);
  CHECK(parses[0].sentence_id == "q1#0");
  CHECK(parses[0].arguments.size() == 1);

  std::string coref_path = testutil::temp_file(
      "coref",
      R"({"question_id":"q1","chains":[[{"sentence_index":0,"start":17,"end":24,"text":"my card","is_antecedent":true,"is_human":false},{"sentence_index":1,"start":0,"end":2,"text":"it"}]]})"
      "\n");
  auto corefs = load_coref_file(coref_path);
  REQUIRE(corefs.size() == 1);
  REQUIRE(corefs[0].chains.size() == 1);
  CHECK(corefs[0].chains[0][0].is_antecedent);
}
