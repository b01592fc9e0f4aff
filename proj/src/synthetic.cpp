#include "codemine/synthetic.hpp"

#include <algorithm>
#include <sstream>

#include "codemine/html_code.hpp"
#include "codemine/threads.hpp"
#include "codemine/util.hpp"

namespace codemine {

namespace {

enum class Kind { list, text, map, file };

struct Obj {
  Kind kind;
  const char* py_noun;
  const char* java_noun;
  const char* var;
  const char* py_setup;
  const char* java_setup;
};

const Obj kObjects[] = {
    {Kind::list, "a list of numbers", "a list of integers", "numbers", "numbers = [3, 1, 2]",
     "List<Integer> numbers = new ArrayList<>(List.of(3, 1, 2));"},
    {Kind::list, "a list of prices", "a list of prices", "prices", "prices = [9.5, 3.25, 7.0]",
     "List<Double> prices = new ArrayList<>(List.of(9.5, 3.25, 7.0));"},
    {Kind::list, "a list of scores", "an array list of scores", "scores", "scores = [70, 95, 88]",
     "List<Integer> scores = new ArrayList<>(List.of(70, 95, 88));"},
    {Kind::list, "a list of ages", "a list of ages", "ages", "ages = [31, 25, 47]",
     "List<Integer> ages = new ArrayList<>(List.of(31, 25, 47));"},
    {Kind::text, "a string", "a String", "text", "text = \"a,b,c\"", "String text = \"a,b,c\";"},
    {Kind::text, "a file name", "a file name", "filename", "filename = \"report.txt\"",
     "String filename = \"report.txt\";"},
    {Kind::text, "a user name", "a user name", "username", "username = \" Alice \"",
     "String username = \" Alice \";"},
    {Kind::text, "a sentence", "a sentence", "sentence", "sentence = \"the quick fox\"",
     "String sentence = \"the quick fox\";"},
    {Kind::map, "a dictionary", "a HashMap", "config", "config = {\"port\": 80}",
     "Map<String, Integer> config = new HashMap<>();"},
    {Kind::map, "a dict of counts", "a map of counts", "counts", "counts = {\"a\": 2, \"b\": 5}",
     "Map<String, Integer> counts = new HashMap<>();"},
    {Kind::file, "a file", "a file", "path", "path = \"data.txt\"", "String path = \"data.txt\";"},
    {Kind::file, "a log file", "a log file", "logfile", "logfile = \"app.log\"",
     "String logfile = \"app.log\";"},
};

struct Impl {
  std::vector<const char*> lines;
  bool expression = false;  // may be wrapped as `result = ...`
};

struct Op {
  Kind kind;
  std::vector<const char*> phrases;  // {o} is the object noun
  std::vector<Impl> python;
  std::vector<Impl> java;
  const char* py_import = nullptr;
  const char* java_import = nullptr;
};

const std::vector<Op>& ops() {
  static const std::vector<Op> table = {
      {Kind::list, {"sort {o}", "sort {o} in ascending order"},
       {{{"sorted({v})"}, true}, {{"{v}.sort()"}, false}},
       {{{"Collections.sort({v});"}, false}, {{"{v}.sort(null);"}, false}},
       nullptr, "import java.util.Collections;"},
      {Kind::list, {"reverse {o}", "reverse the order of {o}"},
       {{{"{v}[::-1]"}, true}, {{"list(reversed({v}))"}, true}},
       {{{"Collections.reverse({v});"}, false}},
       nullptr, "import java.util.Collections;"},
      {Kind::list, {"find the maximum of {o}", "get the largest element of {o}"},
       {{{"max({v})"}, true}},
       {{{"Collections.max({v})"}, true}, {{"{v}.stream().max(Comparator.naturalOrder()).get()"}, true}},
       nullptr, "import java.util.Collections;"},
      {Kind::list, {"find the minimum of {o}", "get the smallest element of {o}"},
       {{{"min({v})"}, true}},
       {{{"Collections.min({v})"}, true}},
       nullptr, "import java.util.Collections;"},
      {Kind::list, {"sum {o}", "calculate the total of {o}"},
       {{{"sum({v})"}, true}, {{"functools.reduce(operator.add, {v})"}, true}},
       {{{"{v}.stream().mapToDouble(x -> x).sum()"}, true}},
       "import functools, operator", nullptr},
      {Kind::list, {"count the elements in {o}", "get the length of {o}"},
       {{{"len({v})"}, true}},
       {{{"{v}.size()"}, true}}},
      {Kind::list, {"remove duplicates from {o}", "get the unique values of {o}"},
       {{{"list(set({v}))"}, true}, {{"list(dict.fromkeys({v}))"}, true}},
       {{{"new ArrayList<>(new HashSet<>({v}))"}, true}, {{"{v}.stream().distinct().collect(Collectors.toList())"}, true}},
       nullptr, "import java.util.HashSet;"},
      {Kind::list, {"append an item to {o}", "add an element to {o}"},
       {{{"{v}.append(item)"}, false}},
       {{{"{v}.add(item);"}, false}}},
      {Kind::list, {"copy {o}", "make a copy of {o}"},
       {{{"{v}.copy()"}, true}, {{"list({v})"}, true}},
       {{{"new ArrayList<>({v})"}, true}}},
      {Kind::list, {"shuffle {o}", "randomly shuffle {o}"},
       {{{"random.shuffle({v})"}, false}},
       {{{"Collections.shuffle({v});"}, false}},
       "import random", "import java.util.Collections;"},
      {Kind::text, {"split {o} on commas", "split {o} by a delimiter"},
       {{{"{v}.split(\",\")"}, true}},
       {{{"{v}.split(\",\")"}, true}}},
      {Kind::text, {"convert {o} to uppercase", "make {o} upper case"},
       {{{"{v}.upper()"}, true}},
       {{{"{v}.toUpperCase()"}, true}}},
      {Kind::text, {"convert {o} to lowercase", "make {o} lower case"},
       {{{"{v}.lower()"}, true}},
       {{{"{v}.toLowerCase()"}, true}}},
      {Kind::text, {"strip whitespace from {o}", "trim {o}"},
       {{{"{v}.strip()"}, true}},
       {{{"{v}.trim()"}, true}, {{"{v}.strip()"}, true}}},
      {Kind::text, {"replace a character in {o}", "replace text in {o}"},
       {{{"{v}.replace(\"a\", \"b\")"}, true}},
       {{{"{v}.replace('a', 'b')"}, true}}},
      {Kind::text, {"check if {o} starts with a prefix", "test whether {o} begins with a prefix"},
       {{{"{v}.startswith(prefix)"}, true}},
       {{{"{v}.startsWith(prefix)"}, true}}},
      {Kind::text, {"convert {o} to bytes", "encode {o} as utf-8"},
       {{{"{v}.encode(\"utf-8\")"}, true}},
       {{{"{v}.getBytes(StandardCharsets.UTF_8)"}, true}},
       nullptr, "import java.nio.charset.StandardCharsets;"},
      {Kind::map, {"get the keys of {o}", "list the keys in {o}"},
       {{{"list({v}.keys())"}, true}},
       {{{"{v}.keySet()"}, true}}},
      {Kind::map, {"check if a key exists in {o}", "test whether {o} contains a key"},
       {{{"key in {v}"}, true}},
       {{{"{v}.containsKey(key)"}, true}}},
      {Kind::map, {"get a value from {o} with a default", "read a key from {o} with a fallback value"},
       {{{"{v}.get(key, 0)"}, true}},
       {{{"{v}.getOrDefault(key, 0)"}, true}}},
      {Kind::map, {"iterate over {o}", "loop over the entries of {o}"},
       {{{"for key, value in {v}.items():", "    print(key, value)"}, false}},
       {{{"for (Map.Entry<String, Integer> e : {v}.entrySet()) {",
          "    System.out.println(e.getKey() + e.getValue());", "}"}, false}}},
      {Kind::map, {"delete a key from {o}", "remove an entry from {o}"},
       {{{"del {v}[key]"}, false}, {{"{v}.pop(key, None)"}, false}},
       {{{"{v}.remove(key);"}, false}}},
      {Kind::file, {"read all lines of {o}", "read {o} line by line"},
       {{{"with open({v}) as f:", "    lines = f.readlines()"}, false}},
       {{{"List<String> lines = Files.readAllLines(Paths.get({v}));"}, false}},
       nullptr, "import java.nio.file.*;"},
      {Kind::file, {"check if {o} exists", "test whether {o} exists"},
       {{{"os.path.exists({v})"}, true}, {{"os.path.isfile({v})"}, true}},
       {{{"new File({v}).exists()"}, true}, {{"Files.exists(Paths.get({v}))"}, true}},
       "import os", "import java.io.File;"},
      {Kind::file, {"delete {o}", "remove {o} from disk"},
       {{{"os.remove({v})"}, false}},
       {{{"Files.delete(Paths.get({v}));"}, false}},
       "import os", "import java.nio.file.*;"},
      {Kind::file, {"write a string to {o}", "save text to {o}"},
       {{{"with open({v}, \"w\") as f:", "    f.write(data)"}, false}},
       {{{"Files.writeString(Paths.get({v}), data);"}, false}},
       nullptr, "import java.nio.file.*;"},
  };
  return table;
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t p = 0; (p = s.find(from, p)) != std::string::npos; p += to.size()) s.replace(p, from.size(), to);
  return s;
}

std::string xml_attr(const std::string& s) { return replace_all(escape_html(s), "\n", "&#xA;"); }

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[static_cast<std::size_t>(rng.below(v.size()))];
}

class Generator {
 public:
  explicit Generator(const SyntheticOptions& o) : opt_(o), rng_(mix(o.seed ^ 0x5e7e71cULL)) {
    if (o.language != "python" && o.language != "java")
      throw UserError("synthetic data exists for python and java, not " + o.language);
    java_ = o.language == "java";
    next_id_ = o.first_id;
    xml_ << "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<posts>\n";
  }

  SyntheticDataset run() {
    // Interleave annotated and corpus questions so ids carry no signal.
    std::vector<bool> annotated(static_cast<std::size_t>(opt_.annotated_questions), true);
    annotated.resize(annotated.size() + static_cast<std::size_t>(opt_.corpus_questions), false);
    rng_.shuffle(annotated);
    for (bool a : annotated) a ? annotated_question() : corpus_question();
    // an answer whose question is not in the dump
    answer_row(next_id_++, 999999999, 3, {"Try this:"}, {{"x = 1"}});
    xml_ << "</posts>\n";
    out_.posts_xml = xml_.str();
    return std::move(out_);
  }

 private:
  const Obj& object_for(Kind k) {
    std::vector<const Obj*> fit;
    for (const auto& o : kObjects)
      if (o.kind == k) fit.push_back(&o);
    return *pick(rng_, fit);
  }

  std::string title_for(const Op& op, const Obj& obj) {
    std::string phrase = replace_all(pick(rng_, op.phrases), "{o}", java_ ? obj.java_noun : obj.py_noun);
    const std::string lang = java_ ? "Java" : "Python";
    std::string t;
    switch (rng_.below(4)) {
      case 0: t = "How to " + phrase + " in " + lang + "?"; break;
      case 1: t = "How do I " + phrase + "?"; break;
      case 2: t = "Best way to " + phrase + " in " + lang; break;
      default:
        t = phrase + " in " + lang;
        t[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(t[0])));
        if (!is_howto_title(t)) t = "How can I " + phrase + "?";
    }
    return t;
  }

  std::vector<std::string> core_lines(const Op& op, const Obj& obj, const Impl& impl) {
    std::vector<std::string> lines;
    for (const char* l : impl.lines) lines.push_back(replace_all(l, "{v}", obj.var));
    if (impl.expression) {
      const bool assign = rng_.below(2) == 0;
      if (java_)
        lines[0] = assign ? "var result = " + lines[0] + ";" : "System.out.println(" + lines[0] + ");";
      else if (assign)
        lines[0] = "result = " + lines[0];
    }
    (void)op;
    return lines;
  }

  const Impl& impl_for(const Op& op) { return pick(rng_, java_ ? op.java : op.python); }
  const char* import_for(const Op& op) const { return java_ ? op.java_import : op.py_import; }
  std::string setup_for(const Obj& obj) const { return java_ ? obj.java_setup : obj.py_setup; }
  std::string print_line() const { return java_ ? "System.out.println(result);" : "print(result)"; }

  const Op& random_op(Kind k, const Op* except) {
    std::vector<const Op*> fit;
    for (const auto& op : ops())
      if (op.kind == k && &op != except) fit.push_back(&op);
    return *pick(rng_, fit);
  }

  struct Laid {
    std::vector<std::vector<std::string>> blocks;
    LineSpan gold;
  };

  // Places the core lines among optional import/setup/print lines.
  Laid layout(const Op& op, const Obj& obj, const std::vector<std::string>& core) {
    Laid out;
    std::vector<std::string> block;
    const char* imp = import_for(op);
    const auto style = rng_.below(6);
    if (style == 5) {
      out.blocks.push_back({setup_for(obj)});
      block = core;
      if (rng_.below(2)) block.push_back(print_line());
      out.gold = {1, 1, static_cast<int>(core.size())};
      out.blocks.push_back(block);
      return out;
    }
    if (imp && (style == 3 || style == 4)) block.push_back(imp);
    if (style == 1 || style == 2 || style == 3) block.push_back(setup_for(obj));
    const int start = static_cast<int>(block.size()) + 1;
    block.insert(block.end(), core.begin(), core.end());
    if (style == 2 || style == 4) block.push_back(print_line());
    out.gold = {0, start, start + static_cast<int>(core.size()) - 1};
    out.blocks.push_back(block);
    return out;
  }

  void question_row(std::int64_t id, const std::string& title, const std::string& tags, std::int64_t views,
                    std::int64_t score, std::optional<std::int64_t> accepted, const std::string& body) {
    xml_ << "  <row Id=\"" << id << "\" PostTypeId=\"1\"";
    if (accepted) xml_ << " AcceptedAnswerId=\"" << *accepted << "\"";
    xml_ << " Score=\"" << score << "\" ViewCount=\"" << views << "\" Body=\"" << xml_attr(body)
         << "\" Title=\"" << xml_attr(title) << "\" Tags=\"" << xml_attr(tags) << "\" />\n";
  }

  void answer_row(std::int64_t id, std::int64_t parent, std::int64_t score, std::vector<std::string> prose,
                  const std::vector<std::vector<std::string>>& blocks) {
    std::string body;
    for (std::size_t i = 0; i < std::max(prose.size(), blocks.size()); ++i) {
      if (i < prose.size()) body += "<p>" + escape_html(prose[i]) + "</p>\n";
      if (i < blocks.size()) body += render_code_block_html(blocks[i]) + "\n";
    }
    xml_ << "  <row Id=\"" << id << "\" PostTypeId=\"2\" ParentId=\"" << parent << "\" Score=\"" << score
         << "\" Body=\"" << xml_attr(body) << "\" />\n";
  }

  std::string tags() const { return java_ ? "<java><collections>" : "<python><list>"; }

  void annotated_question() {
    const Op& op = pick(rng_, ops());
    const Obj& obj = object_for(op.kind);
    const std::int64_t qid = next_id_++;
    const std::string title = title_for(op, obj);

    struct Planned {
      std::int64_t id;
      std::int64_t score;
      Laid laid;
      bool gold;
    };
    std::vector<Planned> answers;
    answers.push_back({next_id_++, 0, layout(op, obj, core_lines(op, obj, impl_for(op))), true});
    if (rng_.below(10) < 6)
      answers.push_back({next_id_++, 0, layout(op, obj, core_lines(op, obj, impl_for(op))), true});
    // at most three answers, so every one is shown to annotators
    const int distractors = answers.size() == 2 ? 1 : 1 + static_cast<int>(rng_.below(2));
    for (int d = 0; d < distractors; ++d) {
      const Op& other = random_op(op.kind, &op);
      answers.push_back({next_id_++, 0, layout(other, obj, core_lines(other, obj, impl_for(other))), false});
    }
    for (auto& a : answers) a.score = static_cast<std::int64_t>(rng_.below(a.gold ? 40 : 15));

    std::optional<std::int64_t> accepted;
    const auto roll = rng_.below(10);
    if (roll < 7)
      accepted = answers[0].id;
    else if (roll < 8)
      accepted = answers.back().id;

    question_row(qid, title, tags(), 2000 + static_cast<std::int64_t>(rng_.below(50000)), 5, accepted,
                 "<p>I have " + std::string(java_ ? obj.java_noun : obj.py_noun) + " and need help.</p>");
    for (const auto& a : answers) {
      answer_row(a.id, qid, a.score, {"You can do it like this:", "Or split up:"}, a.laid.blocks);
      if (!a.gold) continue;
      Annotation ann;
      ann.question_id = qid;
      ann.answer_id = a.id;
      ann.intent = title;
      ann.snippet_spans = {a.laid.gold};
      ann.status = AnnotationStatus::ok;
      ann.annotator = "synthetic";
      ann.timestamp = "2018-01-01T00:00:00Z";
      out_.gold.push_back(std::move(ann));
    }
    out_.annotated_ids.push_back(qid);
    if (accepted) {
      const Planned& acc = *accepted == answers[0].id ? answers[0] : answers.back();
      if (acc.laid.blocks.size() == 1) ++out_.expected_corpus_pairs;
    }
  }

  // Question for the correspondence corpus, with some rows the builder must skip.
  void corpus_question() {
    const Op& op = pick(rng_, ops());
    const Obj& obj = object_for(op.kind);
    const std::int64_t qid = next_id_++;
    std::string title = title_for(op, obj);
    std::string qtags = tags();
    bool counted = true;

    const auto noise = rng_.below(100);
    std::vector<std::string> code = core_lines(op, obj, impl_for(op));
    if (rng_.below(3) == 0) code.insert(code.begin(), setup_for(obj));
    if (rng_.below(5) == 0) code.push_back(print_line());
    std::vector<std::vector<std::string>> blocks{code};
    if (noise < 6) {
      blocks.push_back({print_line()});  // two blocks: not a corpus pair
      counted = false;
    } else if (noise < 10) {
      title = std::string("Why is ") + (java_ ? obj.java_noun : obj.py_noun) + " not working?";
      counted = false;
    } else if (noise < 13) {
      qtags = java_ ? "<kotlin>" : "<ruby>";
      counted = false;
    }
    const bool no_accept = noise >= 13 && noise < 19;
    if (no_accept) counted = false;
    const bool buried = noise >= 19 && noise < 24;  // accepted answer outside the top three

    const std::int64_t aid = next_id_++;
    std::vector<std::int64_t> others;
    const int n_others = buried ? 3 : static_cast<int>(rng_.below(2));
    for (int i = 0; i < n_others; ++i) others.push_back(next_id_++);
    question_row(qid, title, qtags, 10 + static_cast<std::int64_t>(rng_.below(1500)), 1,
                 no_accept ? std::nullopt : std::optional<std::int64_t>(aid), "<p>Thanks.</p>");
    answer_row(aid, qid, buried ? 0 : 2 + static_cast<std::int64_t>(rng_.below(20)), {"Use this:"}, blocks);
    for (auto o : others) {
      const Op& other = random_op(op.kind, &op);
      answer_row(o, qid, buried ? 5 : static_cast<std::int64_t>(rng_.below(3)), {"Alternatively"},
                 {core_lines(other, obj, impl_for(other))});
    }
    if (counted) ++out_.expected_corpus_pairs;
  }

  SyntheticOptions opt_;
  Rng rng_;
  bool java_ = false;
  std::int64_t next_id_ = 0;
  std::ostringstream xml_;
  SyntheticDataset out_;
};

}  // namespace

SyntheticDataset make_synthetic(const SyntheticOptions& options) { return Generator(options).run(); }

}  // namespace codemine
