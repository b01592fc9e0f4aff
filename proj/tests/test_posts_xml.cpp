#include <gtest/gtest.h>

#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "codemine/posts_xml.hpp"
#include "codemine/synthetic.hpp"

using namespace codemine;

namespace {

std::vector<RawPost> parse(const std::string& xml, PostsReaderStats* stats = nullptr) {
  std::istringstream in(xml);
  return parse_dump(in, stats);
}

// Reference: a DOM parse of the same document.
struct DomRow {
  std::int64_t id;
  int type;
  std::optional<std::int64_t> parent;
  std::string title, body, tags;
};

std::vector<DomRow> dom_rows(const std::string& xml) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(xml);
  pt::read_xml(in, tree);
  std::vector<DomRow> out;
  for (const auto& [name, row] : tree.get_child("posts")) {
    if (name != "row") continue;
    DomRow r;
    r.id = row.get<std::int64_t>("<xmlattr>.Id");
    r.type = row.get<int>("<xmlattr>.PostTypeId");
    if (auto p = row.get_optional<std::int64_t>("<xmlattr>.ParentId")) r.parent = *p;
    r.title = row.get("<xmlattr>.Title", "");
    r.body = row.get("<xmlattr>.Body", "");
    r.tags = row.get("<xmlattr>.Tags", "");
    out.push_back(r);
  }
  return out;
}

const char* kFixture = R"(<?xml version="1.0" encoding="utf-8"?>
<posts>
  <row Id="1" PostTypeId="1" AcceptedAnswerId="2" Score="12" ViewCount="300" Title="Removing duplicates in lists" Tags="&lt;python&gt;&lt;list&gt;" Body="&lt;p&gt;How?&lt;/p&gt;" />
  <row Id="2" PostTypeId="2" ParentId="1" Score="9" Body="&lt;pre&gt;&lt;code&gt;t = list(set(t))&#xA;&lt;/code&gt;&lt;/pre&gt;" />
  <row Id="3" PostTypeId="2" ParentId="1" Score="-1" Body="&lt;p&gt;use a &amp;quot;set&amp;quot;&lt;/p&gt;" />
</posts>
)";

}  // namespace

TEST(PostsXml, QuestionRowWithTags) {
  auto posts = parse(kFixture);
  ASSERT_EQ(posts.size(), 3u);
  EXPECT_EQ(posts[0].post_type, PostType::question);
  EXPECT_EQ(*posts[0].title, "Removing duplicates in lists");
  EXPECT_EQ(posts[0].tags, (std::vector<std::string>{"python", "list"}));
  EXPECT_EQ(*posts[0].accepted_answer_id, 2);
  EXPECT_EQ(*posts[0].view_count, 300);
}

TEST(PostsXml, EmptyDocument) {
  EXPECT_TRUE(parse("<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<posts>\n</posts>\n").empty());
  EXPECT_TRUE(parse("<?xml version=\"1.0\"?><posts/>").empty());
}

TEST(PostsXml, ThreeRowFixtureMatchesDomParser) {
  auto posts = parse(kFixture);
  auto dom = dom_rows(kFixture);
  ASSERT_EQ(posts.size(), dom.size());
  for (std::size_t i = 0; i < dom.size(); ++i) {
    EXPECT_EQ(posts[i].id, dom[i].id);
    EXPECT_EQ(posts[i].post_type == PostType::question ? 1 : 2, dom[i].type);
    EXPECT_EQ(posts[i].parent_id, dom[i].parent);
    EXPECT_EQ(posts[i].body_html, dom[i].body);
  }
  EXPECT_EQ(*posts[1].parent_id, 1);
  EXPECT_EQ(*posts[2].parent_id, 1);
  EXPECT_EQ(posts[1].body_html, "<pre><code>t = list(set(t))\n</code></pre>");
  EXPECT_EQ(posts[2].score, -1);
}

TEST(PostsXml, SyntheticDumpMatchesDomParser) {
  for (std::string lang : {"python", "java"}) {
    SyntheticOptions o;
    o.language = lang;
    o.corpus_questions = 60;
    auto data = make_synthetic(o);
    auto posts = parse(data.posts_xml);
    auto dom = dom_rows(data.posts_xml);
    ASSERT_EQ(posts.size(), dom.size());
    for (std::size_t i = 0; i < dom.size(); ++i) {
      EXPECT_EQ(posts[i].id, dom[i].id);
      EXPECT_EQ(posts[i].parent_id, dom[i].parent);
      EXPECT_EQ(posts[i].body_html, dom[i].body);
      EXPECT_EQ(posts[i].title.value_or(""), dom[i].title);
    }
  }
}

TEST(PostsXml, SkipsOtherTypesAndCountsInvalidRows) {
  const std::string xml = R"(<posts>
    <row Id="1" PostTypeId="5" Score="0" Body="wiki" />
    <row Id="2" PostTypeId="1" Score="x" Title="t" Body="b" />
    <row Id="3" PostTypeId="2" Score="1" Body="no parent" />
    <row Id="4" PostTypeId="1" Score="1" Title="ok" Body="b" />
  </posts>)";
  PostsReaderStats stats;
  auto posts = parse(xml, &stats);
  ASSERT_EQ(posts.size(), 1u);
  EXPECT_EQ(posts[0].id, 4);
  EXPECT_EQ(stats.rows, 4u);
  EXPECT_EQ(stats.other_types, 1u);
  EXPECT_EQ(stats.invalid_rows, 2u);
}

TEST(PostsXml, MalformedXmlIsFatal) {
  EXPECT_THROW(parse("<posts><row Id=\"1\" PostTypeId=\"1\" </posts>"), XmlParseError);
  EXPECT_THROW(parse("<posts><row Id=\"1\" PostTypeId=\"1\" Title=\"a & b\" /></posts>"), XmlParseError);
  EXPECT_THROW(parse("<posts><row Id=\"1\""), XmlParseError);
}

TEST(PostsXml, Entities) {
  EXPECT_EQ(decode_entities("&lt;a&gt; &amp;amp; &#65;&#x42; &quot;", false), "<a> &amp; AB \"");
  EXPECT_EQ(decode_entities("&#x20AC;", false), "\xE2\x82\xAC");
  EXPECT_EQ(decode_entities("&bogus;x", true), "&bogus;x");
  EXPECT_EQ(decode_entities("&nbsp;", false), "\xC2\xA0");
  EXPECT_THROW(decode_entities("&bogus;", false), std::invalid_argument);
}

TEST(PostsXml, TagStyles) {
  EXPECT_EQ(parse_tags("<Python><list-comprehension>"),
            (std::vector<std::string>{"python", "list-comprehension"}));
  EXPECT_EQ(parse_tags("|java|spring|"), (std::vector<std::string>{"java", "spring"}));
  EXPECT_TRUE(parse_tags("").empty());
}

TEST(PostsXml, ChunkBoundariesDoNotMatter) {
  // Large bodies straddle the reader's internal buffer boundary.
  std::string body(100000, 'x');
  std::string xml = "<posts>";
  for (int i = 1; i <= 5; ++i)
    xml += "<row Id=\"" + std::to_string(i) + "\" PostTypeId=\"1\" Score=\"0\" Title=\"t\" Body=\"" + body + "\" />";
  xml += "</posts>";
  auto posts = parse(xml);
  ASSERT_EQ(posts.size(), 5u);
  for (const auto& p : posts) EXPECT_EQ(p.body_html.size(), body.size());
}
