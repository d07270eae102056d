#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "xmlmt/metrics.hpp"

using namespace xmlmt;

namespace {

std::vector<std::string> words(std::initializer_list<const char*> items) {
  return {items.begin(), items.end()};
}

EvalPair mk_pair(const std::string& hyp, const std::string& ref) {
  EvalPair p;
  p.hypothesis = parse_segment(hyp);
  p.reference = parse_segment(ref);
  return p;
}

}  // namespace

TEST_CASE("strip_xml removes tags and decodes entities") {
  CHECK(serialize_segment(strip_xml(parse_segment("<b>Save</b> now"))) == "Save now");
  CHECK(serialize_segment(strip_xml(parse_segment("a &lt; b"))) == "a < b");
  CHECK(serialize_segment(strip_xml(parse_segment("plain"))) == "plain");
  CHECK(serialize_segment(strip_xml(parse_segment("x &amp; y &gt; z"))) == "x & y > z");

  XmlSegment stripped = strip_xml(parse_segment("<b><i>deep</i></b>"));
  for (const Token& t : stripped.tokens) CHECK(t.kind == TokenKind::Text);
  CHECK(strip_xml(stripped) == stripped);  // idempotent

  CHECK(stripped_tokens(parse_segment("<b>Save</b> now")) ==
        std::vector<std::string>{"Save", "now"});
}

TEST_CASE("corpus_bleu endpoint cases") {
  std::vector<std::vector<std::string>> same = {words({"a", "b", "c", "d", "e"})};
  CHECK(corpus_bleu(same, same) == doctest::Approx(100.0));

  std::vector<std::vector<std::string>> empty_hyps = {{}, {}};
  std::vector<std::vector<std::string>> refs = {words({"a", "b"}), words({"c"})};
  CHECK(corpus_bleu(empty_hyps, refs) == doctest::Approx(0.0));

  CHECK_THROWS_AS(corpus_bleu({{}}, {{}, {}}), std::invalid_argument);
  CHECK_THROWS_AS(corpus_bleu({}, {}), std::invalid_argument);
}

TEST_CASE("corpus_bleu short-hypothesis pair has no 4-grams") {
  std::vector<std::vector<std::string>> hyps = {words({"the", "cat", "sat"})};
  std::vector<std::vector<std::string>> refs = {words({"the", "cat", "sat", "down"})};
  double got = corpus_bleu(hyps, refs);
  CHECK(got == doctest::Approx(testsup::reference_bleu(hyps, refs)));
  CHECK(got == doctest::Approx(0.0));  // no 4-gram in a 3-token hypothesis
}

TEST_CASE("corpus_bleu single-substitution pair, frozen value") {
  std::vector<std::vector<std::string>> hyps = {words({"the", "cat", "sat", "on", "the", "mat"})};
  std::vector<std::vector<std::string>> refs = {words({"the", "cat", "sat", "on", "a", "mat"})};
  double got = corpus_bleu(hyps, refs);
  // p1=5/6, p2=3/5, p3=2/4, p4=1/3, BP=1 -> 100 * (1/12)^(1/4)
  CHECK(got == doctest::Approx(100.0 * std::pow(1.0 / 12.0, 0.25)).epsilon(1e-9));
  CHECK(got == doctest::Approx(53.7284965911).epsilon(1e-6));
  CHECK(got == doctest::Approx(testsup::reference_bleu(hyps, refs)).epsilon(1e-9));
}

TEST_CASE("corpus_bleu brevity penalty side") {
  // hyp shorter than ref: BP = exp(1 - ref/hyp)
  std::vector<std::vector<std::string>> hyps = {words({"a", "b", "c", "d"})};
  std::vector<std::vector<std::string>> refs = {words({"a", "b", "c", "d", "e"})};
  CHECK(corpus_bleu(hyps, refs) == doctest::Approx(100.0 * std::exp(1.0 - 5.0 / 4.0)).epsilon(1e-9));
  // hyp longer than ref: no penalty
  CHECK(corpus_bleu(refs, refs) == doctest::Approx(100.0));
}

TEST_CASE("corpus_bleu matches the reference implementation on random corpora") {
  std::mt19937_64 rng(101);
  std::vector<std::string> vocab = {"a", "b", "c", "d", "e", "f"};
  for (int trial = 0; trial < 100; ++trial) {
    size_t pairs = 1 + rng() % 8;
    std::vector<std::vector<std::string>> hyps(pairs), refs(pairs);
    for (size_t i = 0; i < pairs; ++i) {
      size_t hl = rng() % 13, rl = rng() % 13;
      for (size_t k = 0; k < hl; ++k) hyps[i].push_back(vocab[rng() % vocab.size()]);
      for (size_t k = 0; k < rl; ++k) refs[i].push_back(vocab[rng() % vocab.size()]);
    }
    double got = corpus_bleu(hyps, refs);
    double want = testsup::reference_bleu(hyps, refs);
    CAPTURE(trial);
    CHECK(got == doctest::Approx(want).epsilon(1e-9));
    CHECK(got >= 0.0);
    CHECK(got <= 100.0);
  }
}

TEST_CASE("extract_ne_num frozen examples") {
  CHECK(extract_ne_num("at 12:57 AM", ExtractMode::Numbers) == std::vector<std::string>{"12:57"});
  CHECK(extract_ne_num("Salesforce の API", ExtractMode::NamedEntities) ==
        std::vector<std::string>{"Salesforce", "API"});
  CHECK(extract_ne_num("no digits", ExtractMode::Numbers).empty());
  CHECK(extract_ne_num("", ExtractMode::Numbers).empty());
  CHECK(extract_ne_num("1,000.50 and 3/4 or 10:30", ExtractMode::Numbers) ==
        std::vector<std::string>{"1,000.50", "3/4", "10:30"});
  // punctuation-only runs match nothing (no core character)
  CHECK(extract_ne_num("... ,, ://", ExtractMode::Numbers).empty());
  CHECK(extract_ne_num("lower case only", ExtractMode::NamedEntities).empty());
  CHECK(extract_ne_num("US$5", ExtractMode::NamedEntities) == std::vector<std::string>{"US$"});
  CHECK(extract_ne_num("US$5", ExtractMode::Numbers) == std::vector<std::string>{"5"});
}

TEST_CASE("extract_ne_num agrees with a reference regex engine on fuzzed strings") {
  std::mt19937_64 rng(202);
  const std::string alphabet = "0123456789.,'/:aBcDeFgHiJxYZ$ \t-_#&*"
                               "\xC3\xA9";  // includes a two-byte UTF-8 char
  for (int trial = 0; trial < 3000; ++trial) {
    size_t len = rng() % 40;
    std::string s;
    for (size_t i = 0; i < len; ++i) s += alphabet[rng() % alphabet.size()];
    CAPTURE(trial);
    CAPTURE(s);
    CHECK(extract_ne_num(s, ExtractMode::Numbers) == testsup::regex_extract(s, true));
    CHECK(extract_ne_num(s, ExtractMode::NamedEntities) == testsup::regex_extract(s, false));
  }
}

TEST_CASE("ne_num_precision_recall definitions") {
  // hyp == ref everywhere
  std::vector<EvalPair> same = {mk_pair("pay 5 now", "pay 5 now")};
  auto [p1, r1] = ne_num_precision_recall(same, ExtractMode::Numbers);
  CHECK(p1 == doctest::Approx(1.0));
  CHECK(r1 == doctest::Approx(1.0));

  // hyp {A,B} vs ref {A} in named-entity mode
  std::vector<EvalPair> extra = {mk_pair("A B", "A")};
  auto [p2, r2] = ne_num_precision_recall(extra, ExtractMode::NamedEntities);
  CHECK(p2 == doctest::Approx(0.5));
  CHECK(r2 == doctest::Approx(1.0));

  // multiset intersection: hyp {A,A} vs ref {A}
  std::vector<EvalPair> dup = {mk_pair("A A", "A")};
  auto [p3, r3] = ne_num_precision_recall(dup, ExtractMode::NamedEntities);
  CHECK(p3 == doctest::Approx(0.5));
  CHECK(r3 == doctest::Approx(1.0));

  // zero denominators -> 1.0
  std::vector<EvalPair> none = {mk_pair("plain words", "plain words")};
  auto [p4, r4] = ne_num_precision_recall(none, ExtractMode::Numbers);
  CHECK(p4 == doctest::Approx(1.0));
  CHECK(r4 == doctest::Approx(1.0));

  // tags are stripped before extraction
  std::vector<EvalPair> tagged = {mk_pair("<b>5</b>", "5")};
  auto [p5, r5] = ne_num_precision_recall(tagged, ExtractMode::Numbers);
  CHECK(p5 == doctest::Approx(1.0));
  CHECK(r5 == doctest::Approx(1.0));
}

TEST_CASE("swapping hypothesis and reference swaps precision and recall") {
  std::mt19937_64 rng(303);
  std::vector<std::string> toks = {"A", "BC", "x", "5", "12:30", "d$", "D$"};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<EvalPair> fwd, rev;
    size_t n = 1 + rng() % 4;
    for (size_t i = 0; i < n; ++i) {
      std::string h, r;
      for (size_t k = rng() % 5; k-- > 0;) h += toks[rng() % toks.size()] + " ";
      for (size_t k = rng() % 5; k-- > 0;) r += toks[rng() % toks.size()] + " ";
      fwd.push_back(mk_pair(h, r));
      rev.push_back(mk_pair(r, h));
    }
    for (ExtractMode mode : {ExtractMode::Numbers, ExtractMode::NamedEntities}) {
      auto [pf, rf] = ne_num_precision_recall(fwd, mode);
      auto [pr, rr] = ne_num_precision_recall(rev, mode);
      CHECK(pf == doctest::Approx(rr));
      CHECK(rf == doctest::Approx(pr));
      CHECK(pf >= 0.0);
      CHECK(pf <= 1.0);
    }
  }
}

TEST_CASE("xml_accuracy counts valid outputs") {
  std::vector<XmlSegment> hyps = {parse_segment("<b>x</b>"), parse_segment("</b> x <b>")};
  CHECK(xml_accuracy(hyps) == doctest::Approx(0.5));
  CHECK(xml_accuracy(std::vector<XmlSegment>{parse_segment("no tags")}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(xml_accuracy(std::vector<XmlSegment>{}), std::invalid_argument);

  // the pair overload honors the parse-failure flag
  EvalPair unparsed = mk_pair("word", "word");
  unparsed.hypothesis_parsed = false;
  CHECK(xml_accuracy(std::vector<EvalPair>{unparsed}) == doctest::Approx(0.0));
}

TEST_CASE("xml_match ordered and unordered") {
  CHECK(xml_match({mk_pair("<b>x</b>", "<b>y</b>")}) == doctest::Approx(1.0));
  // differing sibling order: ordered mismatch, unordered match
  std::vector<EvalPair> reordered = {mk_pair("<b>x</b> <i>y</i>", "<i>y'</i> <b>x'</b>")};
  CHECK(xml_match(reordered) == doctest::Approx(0.0));
  CHECK(xml_match(reordered, /*ordered=*/false) == doctest::Approx(1.0));

  CHECK(xml_match({mk_pair("<b>x", "<b>x</b>")}) == doctest::Approx(0.0));  // invalid hyp
  CHECK(xml_match({mk_pair("<b>x</b>", "<b>x")}) == doctest::Approx(0.0));  // invalid ref
  CHECK(xml_match({mk_pair("plain", "plain")}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(xml_match({}), std::invalid_argument);

  EvalPair unparsed = mk_pair("word", "word");
  unparsed.hypothesis_parsed = false;
  CHECK(xml_match({unparsed}) == doctest::Approx(0.0));
}

TEST_CASE("tag_chunks splits at tag boundaries keeping empty edge chunks") {
  auto chunks = tag_chunks(parse_segment("a <b>x y</b> c"));
  REQUIRE(chunks.size() == 3);
  CHECK(chunks[0] == std::vector<std::string>{"a"});
  CHECK(chunks[1] == std::vector<std::string>{"x", "y"});
  CHECK(chunks[2] == std::vector<std::string>{"c"});

  auto edges = tag_chunks(parse_segment("<b>x</b>"));
  REQUIRE(edges.size() == 3);
  CHECK(edges[0].empty());
  CHECK(edges[1] == std::vector<std::string>{"x"});
  CHECK(edges[2].empty());

  auto entities = tag_chunks(parse_segment("a &amp; b"));
  REQUIRE(entities.size() == 1);
  CHECK(entities[0] == std::vector<std::string>{"a", "&", "b"});

  CHECK(tag_chunks(parse_segment("")).size() == 1);
}

TEST_CASE("xml_bleu endpoint cases") {
  std::vector<EvalPair> same = {mk_pair("<b>alpha beta gamma delta</b>",
                                        "<b>alpha beta gamma delta</b>")};
  CHECK(xml_bleu(same) == doctest::Approx(100.0));

  std::vector<EvalPair> mismatch = {mk_pair("q", "<i>r s</i>")};
  CHECK(xml_bleu(mismatch) == doctest::Approx(0.0));
  CHECK_THROWS_AS(xml_bleu({}), std::invalid_argument);
}

TEST_CASE("xml_bleu two-pair aggregation, frozen value") {
  // pair 1: perfect tag-free match, 7 tokens -> one chunk pair
  // pair 2: skeleton mismatch -> ref chunks ["", "r s", ""] against empty hyps
  std::vector<EvalPair> pairs = {
      mk_pair("a b c d e f g", "a b c d e f g"),
      mk_pair("q", "<i>r s</i>"),
  };
  double got = xml_bleu(pairs);
  // all n-gram precisions are perfect; hyp_len 7 vs ref_len 9 -> BP = exp(1-9/7)
  CHECK(got == doctest::Approx(100.0 * std::exp(1.0 - 9.0 / 7.0)).epsilon(1e-9));
  CHECK(got == doctest::Approx(75.1477293).epsilon(1e-6));

  // cross-check: hand-build the same chunk corpus and feed the reference BLEU
  std::vector<std::vector<std::string>> hyps = {
      {"a", "b", "c", "d", "e", "f", "g"}, {}, {}, {}};
  std::vector<std::vector<std::string>> refs = {
      {"a", "b", "c", "d", "e", "f", "g"}, {}, {"r", "s"}, {}};
  CHECK(got == doctest::Approx(testsup::reference_bleu(hyps, refs)).epsilon(1e-9));
}

TEST_CASE("xml_bleu uses unordered matching when asked") {
  // tag order differs but chunk texts line up positionally
  std::vector<EvalPair> pairs = {
      mk_pair("<b>p q r s</b> <i>t u v w</i>", "<i>p q r s</i> <b>t u v w</b>")};
  CHECK(xml_bleu(pairs, /*ordered=*/true) == doctest::Approx(0.0));
  CHECK(xml_bleu(pairs, /*ordered=*/false) == doctest::Approx(100.0));
}

TEST_CASE("xml_match never exceeds xml_accuracy") {
  std::mt19937_64 rng(404);
  testsup::SegmentGen gen(505);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<EvalPair> pairs;
    size_t n = 1 + rng() % 6;
    for (size_t i = 0; i < n; ++i) {
      EvalPair p;
      p.hypothesis = gen.valid_segment(rng() % 3);
      if (rng() % 3 == 0) {
        // break validity by dropping a random tag token
        for (size_t k = 0; k < p.hypothesis.tokens.size(); ++k)
          if (is_tag(p.hypothesis.tokens[k])) {
            p.hypothesis.tokens.erase(p.hypothesis.tokens.begin() + k);
            break;
          }
      }
      p.reference = gen.valid_segment(rng() % 3);
      if (rng() % 2) p.reference = p.hypothesis;  // encourage matches
      pairs.push_back(p);
    }
    for (bool ordered : {true, false})
      CHECK(xml_match(pairs, ordered) <= xml_accuracy(pairs) + 1e-12);
  }
}

TEST_CASE("evaluate_pairs aggregates the full report") {
  std::vector<EvalPair> pairs = {
      mk_pair("<b>Save 5 NOW</b>", "<b>Save 5 NOW</b>"),
      mk_pair("plain 7", "plain 8"),
  };
  EvalReport alpha = evaluate_pairs(pairs, /*non_alphabetic_target=*/false);
  CHECK(alpha.xml_accuracy == doctest::Approx(1.0));
  CHECK(alpha.xml_match == doctest::Approx(1.0));
  // numbers only: hyp {5,7} ref {5,8} -> matched 1 of 2
  CHECK(alpha.ne_num_precision == doctest::Approx(0.5));
  CHECK(alpha.ne_num_recall == doctest::Approx(0.5));

  EvalReport nonalpha = evaluate_pairs(pairs, /*non_alphabetic_target=*/true);
  // adds named entities: hyp {Save? no...} "Save" has uppercase S -> {Save, NOW} both matched
  // totals: numbers 1/2 + entities 2/2 = 3/4
  CHECK(nonalpha.ne_num_precision == doctest::Approx(0.75));
  CHECK(nonalpha.ne_num_recall == doctest::Approx(0.75));

  EvalReport identical = evaluate_pairs({mk_pair("<b>x y z w</b>", "<b>x y z w</b>")}, false);
  CHECK(identical.bleu_no_xml == doctest::Approx(100.0));
  CHECK(identical.xml_bleu == doctest::Approx(100.0));
}
