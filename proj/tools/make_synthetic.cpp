// Writes a synthetic Posts.xml and its gold annotations.jsonl.
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "codemine/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"generate a synthetic dump with planted gold snippets"};
  codemine::SyntheticOptions o;
  std::string out_dir;
  app.add_option("--language", o.language)->check(CLI::IsMember({"python", "java"}));
  app.add_option("--seed", o.seed);
  app.add_option("--annotated", o.annotated_questions);
  app.add_option("--corpus", o.corpus_questions);
  app.add_option("--first-id", o.first_id);
  app.add_option("--out", out_dir, "output directory")->required();
  CLI11_PARSE(app, argc, argv);
  try {
    auto data = codemine::make_synthetic(o);
    std::filesystem::path dir(out_dir);
    codemine::write_file((dir / "Posts.xml").string(), data.posts_xml);
    codemine::write_file((dir / "annotations.jsonl").string(), codemine::render_annotations(data.gold));
    std::cerr << data.annotated_ids.size() << " annotated questions, " << data.gold.size()
              << " gold snippets, " << data.expected_corpus_pairs << " corpus pairs expected\n";
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
