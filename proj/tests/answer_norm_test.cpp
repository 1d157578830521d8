#include "ttrl/answer_norm.hpp"

#include <gtest/gtest.h>

#include <random>
#include <string>
#include <vector>

namespace ttrl {
namespace {

void ExpectRational(const CanonicalAnswer& a, std::int64_t num, std::int64_t den) {
  ASSERT_EQ(a.kind(), AnswerKind::rational) << a.serialize();
  EXPECT_EQ(a.as_rational(), (Rational{num, den}));
}

TEST(ExtractAnswer, BoxedTakesPrecedence) {
  ExpectRational(extract_answer("so the answer is \\boxed{42}."), 42, 1);
}

TEST(ExtractAnswer, MarkerWhenNoBox) {
  ExpectRational(extract_answer("I think 3, no wait \xE2\x80\x94 Answer: 17"), 17, 1);
}

TEST(ExtractAnswer, NothingToExtract) {
  EXPECT_EQ(extract_answer("no digits, no markers, no box").kind(), AnswerKind::unparseable);
  EXPECT_EQ(extract_answer("").kind(), AnswerKind::unparseable);
}

TEST(ExtractAnswer, LastBalancedBoxWins) {
  ExpectRational(extract_answer("\\boxed{1} then \\boxed{\\frac{6}{8}}"), 3, 4);
  // The trailing group never closes, so the earlier one is used.
  ExpectRational(extract_answer("\\boxed{5} and \\boxed{7"), 5, 1);
}

TEST(ExtractAnswer, BoxBeatsLaterMarker) {
  ExpectRational(extract_answer("\\boxed{2}\nAnswer: 9"), 2, 1);
}

TEST(ExtractAnswer, EmptyBoxIsUnparseable) {
  EXPECT_EQ(extract_answer("\\boxed{ } Answer: 4").kind(), AnswerKind::unparseable);
}

TEST(ExtractAnswer, ZeroDenominatorBoxIsUnparseable) {
  EXPECT_EQ(extract_answer("\\boxed{\\frac{1}{0}}").kind(), AnswerKind::unparseable);
}

TEST(ExtractAnswer, MarkerStopsAtEndOfLine) {
  ExpectRational(extract_answer("The answer is 12.\nThen I checked 99 cases."), 12, 1);
}

TEST(ExtractAnswer, LastMarkerWins) {
  ExpectRational(extract_answer("answer: 1\nThe final answer is 8"), 8, 1);
}

TEST(ExtractAnswer, LastStandaloneNumber) {
  ExpectRational(extract_answer("try x2 and 14 then 3y and -6 apples"), -6, 1);
  ExpectRational(extract_answer("total 1,234 units"), 1234, 1);
  ExpectRational(extract_answer("ratio 3/4 ok"), 3, 4);
  ExpectRational(extract_answer("it is 2.50."), 5, 2);
}

TEST(ExtractAnswer, SpanPointsIntoOutput) {
  const std::string out = "so \\boxed{42} done";
  const auto a = extract_answer(out);
  EXPECT_EQ(out.substr(a.span().begin, a.span().end - a.span().begin), "42");
  const std::string tail = "we get 7 and then 19";
  const auto b = extract_answer(tail);
  EXPECT_EQ(tail.substr(b.span().begin, b.span().end - b.span().begin), "19");
}

TEST(Normalize, FractionReduction) {
  ExpectRational(normalize("\\frac{2}{4}"), 1, 2);
  ExpectRational(normalize("\\dfrac{-3}{6}"), -1, 2);
  ExpectRational(normalize("-\\frac{3}{-6}"), 1, 2);
  ExpectRational(normalize("10/-4"), -5, 2);
}

TEST(Normalize, SeparatorsAndDecorations) {
  ExpectRational(normalize("1,234"), 1234, 1);
  ExpectRational(normalize(" $1,000,000$ "), 1000000, 1);
  ExpectRational(normalize("50\\%"), 50, 1);
  ExpectRational(normalize("+7"), 7, 1);
}

TEST(Normalize, Decimals) {
  ExpectRational(normalize("0.5"), 1, 2);
  ExpectRational(normalize("-0.125"), -1, 8);
  ExpectRational(normalize(".25"), 1, 4);
  ExpectRational(normalize("3.000"), 3, 1);
  ExpectRational(normalize("-0.0"), 0, 1);
}

TEST(Normalize, HugeDecimalKeepsExactDigits) {
  const auto a = normalize("123456789012345678901234567890.5000");
  ASSERT_EQ(a.kind(), AnswerKind::decimal);
  EXPECT_EQ(a.as_string(), "123456789012345678901234567890.5");
  EXPECT_TRUE(answers_equal(a, normalize("0123456789012345678901234567890.50")));
  EXPECT_FALSE(answers_equal(a, normalize("123456789012345678901234567890.51")));
}

TEST(Normalize, TextFallback) {
  const auto a = normalize("x+1");
  ASSERT_EQ(a.kind(), AnswerKind::text);
  EXPECT_EQ(a.as_string(), "x+1");
  EXPECT_EQ(normalize("  Hello \t  World ").as_string(), "hello world");
}

TEST(Normalize, EmptyAndZeroDivision) {
  EXPECT_EQ(normalize("").kind(), AnswerKind::unparseable);
  EXPECT_EQ(normalize(" $ % ").kind(), AnswerKind::unparseable);
  EXPECT_EQ(normalize("1/0").kind(), AnswerKind::unparseable);
  EXPECT_EQ(normalize("\\frac{5}{0}").kind(), AnswerKind::unparseable);
}

TEST(AnswersEqual, Contract) {
  EXPECT_TRUE(answers_equal(CanonicalAnswer::rational(1, 2), normalize("0.5")));
  EXPECT_TRUE(answers_equal(normalize("abc"), normalize("ABC")));
  EXPECT_FALSE(answers_equal(CanonicalAnswer::unparseable(), CanonicalAnswer::unparseable()));
  EXPECT_FALSE(answers_equal(normalize("1"), normalize("one")));
}

TEST(Serialize, WireForms) {
  EXPECT_EQ(normalize("6/4").serialize(), "3/2");
  EXPECT_EQ(normalize("3").serialize(), "3");
  EXPECT_EQ(normalize("Foo  Bar").serialize(), "foo bar");
  EXPECT_EQ(CanonicalAnswer::unparseable().serialize(), kUnparseableToken);
  EXPECT_EQ(parse_label(kUnparseableToken).kind(), AnswerKind::unparseable);
}

TEST(ParseLabel, TruthStrings) {
  ExpectRational(parse_label("7"), 7, 1);
  ExpectRational(parse_label("\\boxed{7}"), 7, 1);
  EXPECT_EQ(parse_label("x+1").kind(), AnswerKind::text);
}

// Property checks over random inputs.

TEST(AnswerNormProperty, RationalRenderRoundTrip) {
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<std::int64_t> num(-1'000'000'000, 1'000'000'000);
  std::uniform_int_distribution<std::int64_t> den(1, 1'000'000);
  for (int i = 0; i < 5000; ++i) {
    const auto r = CanonicalAnswer::rational(num(gen), den(gen));
    const std::string rendered = std::to_string(r.as_rational().num) + "/" + std::to_string(r.as_rational().den);
    const auto back = normalize(rendered);
    ASSERT_EQ(back.kind(), AnswerKind::rational) << rendered;
    EXPECT_EQ(back.as_rational(), r.as_rational()) << rendered;
    EXPECT_TRUE(answers_equal(normalize(r.serialize()), r));
  }
}

TEST(AnswerNormProperty, EqualityLaws) {
  const std::vector<std::string> pool = {"1/2", "0.5", "\\frac{1}{2}", "2/4", "3", "3.0", "x", "X", " x ",
                                         "y z", "Y  Z", "", "1/0", "1e5", "-3", "-3.00"};
  std::vector<CanonicalAnswer> answers;
  for (const auto& s : pool) answers.push_back(normalize(s));
  for (const auto& a : answers) {
    EXPECT_EQ(answers_equal(a, a), a.parseable());
    for (const auto& b : answers) {
      EXPECT_EQ(answers_equal(a, b), answers_equal(b, a));
      for (const auto& c : answers) {
        if (answers_equal(a, b) && answers_equal(b, c)) {
          EXPECT_TRUE(answers_equal(a, c));
        }
      }
    }
  }
}

TEST(AnswerNormProperty, Deterministic) {
  std::mt19937_64 gen(5);
  const std::string alphabet = "0123456789 ,./-{}\\boxedfrac$%aA:\n";
  for (int i = 0; i < 2000; ++i) {
    std::string s(gen() % 40, ' ');
    for (char& c : s) c = alphabet[gen() % alphabet.size()];
    const auto a = extract_answer(s);
    const auto b = extract_answer(std::string(s));
    EXPECT_EQ(a.key(), b.key());
    EXPECT_EQ(a.span(), b.span());
  }
}

TEST(AnswerNormProperty, NonEmptyBoxNeverLost) {
  std::mt19937_64 gen(9);
  const std::vector<std::string> contents = {"12", "a+b", "\\frac{3}{9}", "-4.5", "Pi", "x^{2}", "1,000"};
  for (int i = 0; i < 500; ++i) {
    const auto& inner = contents[gen() % contents.size()];
    const std::string text = "noise " + std::to_string(gen() % 100) + " \\boxed{" + inner + "} tail";
    const auto a = extract_answer(text);
    EXPECT_TRUE(a.parseable()) << text;
    EXPECT_TRUE(answers_equal(a, normalize(inner))) << text;
  }
}

}  // namespace
}  // namespace ttrl
