#include <gtest/gtest.h>

#include <cstdlib>
#include <set>

#include "codemine/candidates.hpp"
#include "codemine/util.hpp"

using namespace codemine;

namespace {

CodeBlock block_of(int k) {
  CodeBlock b;
  b.answer_id = 7;
  for (int i = 1; i <= k; ++i) b.lines.push_back("x" + std::to_string(i) + " = " + std::to_string(i));
  return b;
}

std::set<std::pair<int, int>> spans(const std::vector<CandidateSnippet>& cs) {
  std::set<std::pair<int, int>> out;
  for (const auto& c : cs) out.insert({c.key.line_start, c.key.line_end});
  return out;
}

bool have_python() { return std::system("python3 -c pass >/dev/null 2>&1") == 0; }

const char* kPythonAst = "python3 -c \"import ast,sys; ast.parse(open(sys.argv[1]).read())\" {file}";

}  // namespace

TEST(Candidates, ThreeLinesGiveSixSpans) {
  auto cs = enumerate_candidates(block_of(3), 1, python_profile());
  EXPECT_EQ(spans(cs), (std::set<std::pair<int, int>>{{1, 1}, {2, 2}, {3, 3}, {1, 2}, {2, 3}, {1, 3}}));
  EXPECT_EQ(cs[1].text, "x1 = 1\nx2 = 2");  // ordered by (start, end)
}

TEST(Candidates, SingleLine) {
  auto cs = enumerate_candidates(block_of(1), 1, python_profile());
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(cs[0].key.line_start, 1);
  EXPECT_EQ(cs[0].key.line_end, 1);
}

TEST(Candidates, CountAndDoubleLoopOracle) {
  for (int k = 1; k <= 50; ++k) {
    auto cs = enumerate_candidates(block_of(k), 1, python_profile());
    ASSERT_EQ(cs.size(), static_cast<std::size_t>(k * (k + 1) / 2));
    std::set<std::pair<int, int>> oracle;
    for (int i = 1; i <= k; ++i)
      for (int j = i; j <= k; ++j) oracle.insert({i, j});
    ASSERT_EQ(spans(cs), oracle);
  }
}

TEST(Candidates, KeysCarryAnswerAndBlock) {
  CodeBlock b = block_of(2);
  b.block_index = 3;
  auto cs = enumerate_candidates(b, 99, python_profile());
  EXPECT_EQ(cs[0].key.question_id, 99);
  EXPECT_EQ(cs[0].key.answer_id, 7);
  EXPECT_EQ(cs[0].key.block_index, 3);
  EXPECT_EQ(key_from_json(key_to_json(cs[2].key)), cs[2].key);
}

TEST(Candidates, PromptNormalization) {
  const auto& p = python_profile();
  EXPECT_EQ(normalize_snippet(">>> t = list(set(t))", p), "t = list(set(t))");
  EXPECT_EQ(normalize_snippet("x = 1", p), "x = 1");
  EXPECT_EQ(normalize_snippet("In [3]: a.append(b)", p), "a.append(b)");
  EXPECT_EQ(normalize_snippet(">>> for i in x:\n...     f(i)", p), "for i in x:\n    f(i)");
  for (std::string s : {">>> a", "In [12]: b\nOut[12]: 3", "plain"})
    EXPECT_EQ(normalize_snippet(normalize_snippet(s, p), p), normalize_snippet(s, p));
}

TEST(Candidates, StructuralValidatorExamples) {
  StructuralValidator v(python_profile());
  EXPECT_EQ(v.validate("list(set(t))"), Validity::valid);
  EXPECT_EQ(v.validate("for k in d:"), Validity::invalid);
  EXPECT_EQ(v.validate("del mydict[key]"), Validity::valid);
  EXPECT_EQ(v.validate("f(a, (b"), Validity::invalid);
  EXPECT_EQ(v.validate("s = 'abc"), Validity::invalid);
  EXPECT_EQ(v.validate("    x = 1\n    y = 2"), Validity::valid);  // common indentation removed
  EXPECT_EQ(v.validate("x = 1\n        y = 2"), Validity::invalid);
  StructuralValidator j(java_profile());
  EXPECT_EQ(j.validate("Collections.sort(list);"), Validity::valid);
  EXPECT_EQ(j.validate("if (x) {"), Validity::invalid);
  EXPECT_EQ(j.validate("/* open comment"), Validity::invalid);
}

// The structural validator agrees with a real parser on complete lines and
// on the dangling-opener cases it is designed to reject.
TEST(Candidates, StructuralValidatorAgreesWithPythonParser) {
  if (!have_python()) GTEST_SKIP() << "python3 not available";
  ExternalCommandValidator ref(kPythonAst);
  StructuralValidator v(python_profile());
  const std::vector<std::string> fixture{
      "list(set(t))", "for k in d:", "del mydict[key]", "x = [1,\n 2]", "x = [1,", "d[k] = f(a=1)",
      "if a:\n    b()", "if a:", "print('x')", "s = \"unterminated", "a = (1 +\n 2)", "while True:\n    pass",
      "import os", "def f(x):\n    return x", "def f(x):", "y = {'a': 1}", "z = foo(bar]"};
  for (const auto& s : fixture) EXPECT_EQ(v.validate(s), ref.validate(s)) << s;
}

TEST(Candidates, ExternalValidatorExitCodes) {
  ExternalCommandValidator ok("true {file}");
  ExternalCommandValidator bad("false {file}");
  ExternalCommandValidator grep_validator("grep -q set {file}");
  EXPECT_EQ(ok.validate("x"), Validity::valid);
  EXPECT_EQ(bad.validate("x"), Validity::invalid);
  EXPECT_EQ(grep_validator.validate("list(set(t))"), Validity::valid);
  EXPECT_EQ(grep_validator.validate("list(t)"), Validity::invalid);
  ExternalCommandValidator missing("/nonexistent/validator {file}");
  EXPECT_THROW(missing.validate("x"), std::runtime_error);
  ValidationStats stats;
  CandidateSnippet c;
  c.normalized_text = "x";
  EXPECT_FALSE(validate_candidate(c, missing, false, &stats));
  EXPECT_EQ(stats.crashed, 1u);
}

TEST(Candidates, PermissiveModeForUnknown) {
  struct Unsure : SnippetValidator {
    std::string name() const override { return "unsure"; }
    Validity validate(std::string_view) const override { return Validity::unknown; }
  } unsure;
  CandidateSnippet c;
  c.normalized_text = "x";
  EXPECT_FALSE(validate_candidate(c, unsure, false));
  EXPECT_TRUE(validate_candidate(c, unsure, true));
  EXPECT_THROW(make_validator("nope", python_profile()), UserError);
  EXPECT_EQ(make_validator("accept-all", python_profile())->name(), "accept-all");
}

TEST(Candidates, GenerateDropsInvalidAndCommentOnly) {
  QuestionThread t;
  t.question_id = 1;
  Answer a;
  a.answer_id = 2;
  a.rank = 1;
  a.blocks.push_back(CodeBlock{2, 0, {"for k in d:", "    print(k)", "# done"}, 1, false});
  t.answers.push_back(a);
  GenerationStats stats;
  auto cs = generate_candidates(t, StructuralValidator(python_profile()), python_profile(), false, &stats);
  std::set<std::pair<int, int>> got = spans(cs);
  EXPECT_TRUE(got.count({1, 2}));
  EXPECT_TRUE(got.count({1, 3}));
  EXPECT_TRUE(got.count({2, 2}));
  EXPECT_FALSE(got.count({1, 1}));  // dangling opener
  EXPECT_FALSE(got.count({3, 3}));  // comment only
  EXPECT_EQ(stats.enumerated, 6u);
  auto j = candidate_to_json(cs[0], t);
  auto back = candidate_from_json(j);
  EXPECT_EQ(back.key, cs[0].key);
  EXPECT_EQ(back.text, cs[0].text);
  EXPECT_EQ(span_text(a.blocks[0], 2, 3), "    print(k)\n# done");
}
