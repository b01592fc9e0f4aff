#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace codemine {

enum class PostType { question, answer };

/// One question or answer row of a Stack Exchange posts dump.
struct RawPost {
  std::int64_t id = 0;
  PostType post_type = PostType::question;
  std::optional<std::int64_t> parent_id;
  std::optional<std::string> title;
  std::string body_html;
  std::vector<std::string> tags;  // lowercase
  std::int64_t score = 0;
  std::optional<std::int64_t> view_count;
  std::optional<std::int64_t> accepted_answer_id;

  bool operator==(const RawPost&) const = default;
};

/// Malformed XML. Fatal: the remainder of the stream cannot be trusted.
class XmlParseError : public std::runtime_error {
 public:
  XmlParseError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " at byte " + std::to_string(offset)),
        offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

struct PostsReaderStats {
  std::uint64_t rows = 0;            // row elements seen
  std::uint64_t other_types = 0;     // PostTypeId outside {1,2}
  std::uint64_t invalid_rows = 0;    // missing or malformed required attribute
};

/// Pull parser over a posts dump. Reads the stream in fixed-size chunks, so
/// memory stays bounded by the largest single row.
class PostsReader {
 public:
  explicit PostsReader(std::istream& in);

  /// Next question/answer post, or nullopt at end of document.
  std::optional<RawPost> next();

  const PostsReaderStats& stats() const { return stats_; }

 private:
  int peek();
  int get();
  void expect(char c);
  [[noreturn]] void fail(const std::string& what) const;
  void skip_whitespace();
  void skip_until(std::string_view terminator);
  std::string read_name();
  std::string read_attribute_value();
  void skip_misc();
  void skip_element_content(const std::string& name);
  bool read_start_tag(std::string& name,
                      std::vector<std::pair<std::string, std::string>>& attrs,
                      bool& self_closing);
  std::optional<RawPost> convert_row(
      const std::vector<std::pair<std::string, std::string>>& attrs);

  std::istream& in_;
  std::string buf_;
  std::size_t pos_ = 0;
  std::uint64_t consumed_ = 0;  // bytes before buf_[0]
  bool root_open_ = false;
  bool finished_ = false;
  std::string root_name_;
  PostsReaderStats stats_;
};

/// Convenience: parse a whole document into memory.
std::vector<RawPost> parse_dump(std::istream& in, PostsReaderStats* stats = nullptr);

/// Decodes XML/HTML character references (named, decimal, hex) to UTF-8.
/// Unknown named entities are kept verbatim when `lenient` is set, otherwise
/// rejected via std::invalid_argument.
std::string decode_entities(std::string_view text, bool lenient);

/// Splits a Tags attribute ("<a><b>" or "|a|b|") into lowercase tags.
std::vector<std::string> parse_tags(std::string_view tags);

}  // namespace codemine
