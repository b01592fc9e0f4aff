#include "codemine/posts_xml.hpp"

#include <cctype>
#include <charconv>
#include <unordered_map>

#include "codemine/util.hpp"

namespace codemine {

namespace {

constexpr std::size_t kChunk = 1 << 16;

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

const std::unordered_map<std::string_view, std::uint32_t>& named_entities() {
  static const std::unordered_map<std::string_view, std::uint32_t> table = {
      {"lt", '<'},      {"gt", '>'},      {"amp", '&'},     {"quot", '"'},
      {"apos", '\''},   {"nbsp", 0xA0},   {"copy", 0xA9},   {"reg", 0xAE},
      {"hellip", 0x2026}, {"mdash", 0x2014}, {"ndash", 0x2013}, {"laquo", 0xAB},
      {"raquo", 0xBB},  {"lsquo", 0x2018}, {"rsquo", 0x2019}, {"ldquo", 0x201C},
      {"rdquo", 0x201D}, {"times", 0xD7}, {"middot", 0xB7}, {"deg", 0xB0},
      {"euro", 0x20AC}, {"trade", 0x2122}, {"rarr", 0x2192}, {"larr", 0x2190},
  };
  return table;
}

std::optional<std::int64_t> to_int(std::string_view s) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

bool is_name_char(int c) {
  return std::isalnum(c) || c == '_' || c == '-' || c == '.' || c == ':' || c >= 0x80;
}

}  // namespace

std::string decode_entities(std::string_view text, bool lenient) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c != '&') {
      out += c;
      continue;
    }
    std::size_t semi = text.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      if (!lenient) throw std::invalid_argument("unterminated character reference");
      out += c;
      continue;
    }
    std::string_view ref = text.substr(i + 1, semi - i - 1);
    bool ok = false;
    std::uint32_t cp = 0;
    if (!ref.empty() && ref[0] == '#') {
      std::string_view digits = ref.substr(1);
      int base = 10;
      if (!digits.empty() && (digits[0] == 'x' || digits[0] == 'X')) {
        base = 16;
        digits.remove_prefix(1);
      }
      if (!digits.empty()) {
        auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), cp, base);
        ok = ec == std::errc() && p == digits.data() + digits.size() && cp <= 0x10FFFF;
      }
    } else {
      auto it = named_entities().find(ref);
      if (it != named_entities().end()) {
        cp = it->second;
        ok = true;
      }
    }
    if (!ok) {
      if (!lenient) throw std::invalid_argument("unknown character reference &" + std::string(ref) + ";");
      out += c;
      continue;
    }
    append_utf8(out, cp);
    i = semi;
  }
  return out;
}

std::vector<std::string> parse_tags(std::string_view tags) {
  std::vector<std::string> out;
  std::string cur;
  bool inside = false;
  const bool pipe_style = !tags.empty() && tags.front() == '|';
  for (char c : tags) {
    const bool open = pipe_style ? (c == '|') : (c == '<');
    const bool close = pipe_style ? (c == '|') : (c == '>');
    if (inside && close) {
      if (!cur.empty()) out.push_back(to_lower(cur));
      cur.clear();
      inside = pipe_style;  // '|' both closes and opens
    } else if (!inside && open) {
      inside = true;
    } else if (inside) {
      cur += c;
    }
  }
  return out;
}

PostsReader::PostsReader(std::istream& in) : in_(in) {}

int PostsReader::peek() {
  if (pos_ >= buf_.size()) {
    consumed_ += buf_.size();
    buf_.resize(kChunk);
    in_.read(buf_.data(), static_cast<std::streamsize>(kChunk));
    buf_.resize(static_cast<std::size_t>(in_.gcount()));
    pos_ = 0;
    if (buf_.empty()) return -1;
  }
  return static_cast<unsigned char>(buf_[pos_]);
}

int PostsReader::get() {
  int c = peek();
  if (c >= 0) ++pos_;
  return c;
}

void PostsReader::fail(const std::string& what) const {
  throw XmlParseError(what, consumed_ + pos_);
}

void PostsReader::expect(char c) {
  if (peek() != static_cast<unsigned char>(c)) fail(std::string("expected '") + c + "'");
  ++pos_;
}

void PostsReader::skip_whitespace() {
  while (true) {
    int c = peek();
    if (c < 0 || !std::isspace(c)) return;
    ++pos_;
  }
}

void PostsReader::skip_until(std::string_view terminator) {
  std::size_t matched = 0;
  while (matched < terminator.size()) {
    int c = get();
    if (c < 0) fail("unexpected end of document, expected '" + std::string(terminator) + "'");
    if (c == static_cast<unsigned char>(terminator[matched])) {
      ++matched;
    } else {
      matched = (c == static_cast<unsigned char>(terminator[0])) ? 1 : 0;
    }
  }
}

std::string PostsReader::read_name() {
  std::string name;
  while (true) {
    int c = peek();
    if (c < 0 || !is_name_char(c)) break;
    name += static_cast<char>(c);
    ++pos_;
  }
  if (name.empty()) fail("expected a name");
  return name;
}

std::string PostsReader::read_attribute_value() {
  int quote = get();
  if (quote != '"' && quote != '\'') {
    if (quote >= 0) --pos_;
    fail("attribute value must be quoted");
  }
  std::string raw;
  while (true) {
    int c = get();
    if (c < 0) fail("unexpected end of document inside attribute value");
    if (c == quote) break;
    if (c == '<') {
      --pos_;
      fail("'<' not allowed in attribute value");
    }
    // Attribute-value normalization: literal whitespace becomes a space.
    if (c == '\n' || c == '\r' || c == '\t') c = ' ';
    raw += static_cast<char>(c);
  }
  try {
    return decode_entities(raw, false);
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
}

// Skips comments, processing instructions and DOCTYPE declarations.
void PostsReader::skip_misc() {
  while (true) {
    skip_whitespace();
    if (peek() != '<') return;
    // Need a lookahead of two characters; the buffer may be at a boundary.
    if (pos_ + 1 >= buf_.size()) {
      std::string rest = buf_.substr(pos_);
      consumed_ += pos_;
      buf_ = rest;
      pos_ = 0;
      std::string more(kChunk, '\0');
      in_.read(more.data(), static_cast<std::streamsize>(kChunk));
      more.resize(static_cast<std::size_t>(in_.gcount()));
      buf_ += more;
      if (buf_.size() < 2) return;
    }
    char next = buf_[pos_ + 1];
    if (next == '?') {
      pos_ += 2;
      skip_until("?>");
    } else if (next == '!') {
      pos_ += 2;
      if (peek() == '-') {
        expect('-');
        expect('-');
        skip_until("-->");
      } else {
        skip_until(">");
      }
    } else {
      return;
    }
  }
}

bool PostsReader::read_start_tag(std::string& name,
                                 std::vector<std::pair<std::string, std::string>>& attrs,
                                 bool& self_closing) {
  name = read_name();
  attrs.clear();
  while (true) {
    skip_whitespace();
    int c = peek();
    if (c < 0) fail("unexpected end of document inside tag <" + name + ">");
    if (c == '/') {
      ++pos_;
      expect('>');
      self_closing = true;
      return true;
    }
    if (c == '>') {
      ++pos_;
      self_closing = false;
      return true;
    }
    std::string attr = read_name();
    skip_whitespace();
    expect('=');
    skip_whitespace();
    std::string value = read_attribute_value();
    for (const auto& [k, _] : attrs) {
      if (k == attr) fail("duplicate attribute " + attr);
    }
    attrs.emplace_back(std::move(attr), std::move(value));
  }
}

void PostsReader::skip_element_content(const std::string& name) {
  int depth = 1;
  std::vector<std::string> stack{name};
  while (depth > 0) {
    int c = get();
    if (c < 0) fail("unexpected end of document inside <" + name + ">");
    if (c != '<') continue;
    --pos_;
    skip_misc();
    if (peek() != '<') continue;
    ++pos_;
    if (peek() == '/') {
      ++pos_;
      std::string end = read_name();
      skip_whitespace();
      expect('>');
      if (end != stack.back()) fail("mismatched end tag </" + end + ">");
      stack.pop_back();
      --depth;
    } else {
      std::string child;
      std::vector<std::pair<std::string, std::string>> attrs;
      bool self_closing = false;
      read_start_tag(child, attrs, self_closing);
      if (!self_closing) {
        stack.push_back(child);
        ++depth;
      }
    }
  }
}

std::optional<RawPost> PostsReader::next() {
  if (finished_) return std::nullopt;
  if (!root_open_) {
    skip_misc();
    if (peek() < 0) fail("document has no root element");
    expect('<');
    std::vector<std::pair<std::string, std::string>> attrs;
    bool self_closing = false;
    read_start_tag(root_name_, attrs, self_closing);
    if (self_closing) {
      skip_misc();
      if (peek() >= 0) fail("content after root element");
      finished_ = true;
      return std::nullopt;
    }
    root_open_ = true;
  }
  while (true) {
    skip_misc();
    int c = peek();
    if (c < 0) fail("unexpected end of document, <" + root_name_ + "> not closed");
    if (c != '<') fail("unexpected text content");
    ++pos_;
    if (peek() == '/') {
      ++pos_;
      std::string end = read_name();
      skip_whitespace();
      expect('>');
      if (end != root_name_) fail("mismatched end tag </" + end + ">");
      skip_misc();
      if (peek() >= 0) fail("content after root element");
      finished_ = true;
      return std::nullopt;
    }
    std::string name;
    std::vector<std::pair<std::string, std::string>> attrs;
    bool self_closing = false;
    read_start_tag(name, attrs, self_closing);
    if (!self_closing) skip_element_content(name);
    if (name != "row") continue;
    ++stats_.rows;
    if (auto post = convert_row(attrs)) return post;
  }
}

std::optional<RawPost> PostsReader::convert_row(
    const std::vector<std::pair<std::string, std::string>>& attrs) {
  auto find = [&](std::string_view key) -> const std::string* {
    for (const auto& [k, v] : attrs)
      if (k == key) return &v;
    return nullptr;
  };
  auto find_int = [&](std::string_view key, bool& bad) -> std::optional<std::int64_t> {
    const std::string* v = find(key);
    if (!v) return std::nullopt;
    auto parsed = to_int(*v);
    if (!parsed) bad = true;
    return parsed;
  };

  bool bad = false;
  auto type = find_int("PostTypeId", bad);
  if (bad || !type) {
    ++stats_.invalid_rows;
    return std::nullopt;
  }
  if (*type != 1 && *type != 2) {
    ++stats_.other_types;
    return std::nullopt;
  }
  RawPost post;
  post.post_type = *type == 1 ? PostType::question : PostType::answer;
  auto id = find_int("Id", bad);
  auto score = find_int("Score", bad);
  post.parent_id = find_int("ParentId", bad);
  post.view_count = find_int("ViewCount", bad);
  post.accepted_answer_id = find_int("AcceptedAnswerId", bad);
  const std::string* body = find("Body");
  const std::string* title = find("Title");
  const std::string* tags = find("Tags");

  bool missing = !id || !score || !body;
  if (post.post_type == PostType::question) {
    missing = missing || !title;
    post.parent_id.reset();
  } else {
    missing = missing || !post.parent_id;
    post.accepted_answer_id.reset();
  }
  if (bad || missing || (post.view_count && *post.view_count < 0)) {
    ++stats_.invalid_rows;
    return std::nullopt;
  }
  post.id = *id;
  post.score = *score;
  post.body_html = *body;
  if (post.post_type == PostType::question) post.title = *title;
  if (tags) post.tags = parse_tags(*tags);
  return post;
}

std::vector<RawPost> parse_dump(std::istream& in, PostsReaderStats* stats) {
  PostsReader reader(in);
  std::vector<RawPost> posts;
  while (auto p = reader.next()) posts.push_back(std::move(*p));
  if (stats) *stats = reader.stats();
  return posts;
}

}  // namespace codemine
