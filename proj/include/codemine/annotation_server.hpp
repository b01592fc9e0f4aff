#pragma once

#include <map>
#include <string>
#include <vector>

#include "codemine/annotation.hpp"
#include "codemine/threads.hpp"

namespace httplib {
class Server;
}

namespace codemine {

/// HTTP/JSON API for the annotation front end. Request handling is exposed
/// separately from the socket layer so it can be driven directly.
class AnnotationService {
 public:
  AnnotationService(std::vector<QuestionThread> threads, SamplingPlan plan, AnnotationStore& store);

  struct Response {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
  };

  Response next_question(const std::string& annotator) const;
  Response get_question(std::int64_t question_id) const;
  Response post_annotation(const std::string& body, bool overwrite);
  /// JSON lines of stored annotations; with `gold_only`, status ok only.
  Response export_annotations(bool gold_only) const;
  Response progress() const;

  void mount(httplib::Server& server);

 private:
  std::map<std::int64_t, QuestionThread> threads_;
  SamplingPlan plan_;
  AnnotationStore& store_;
};

/// Blocks serving on host:port until the process is stopped.
void run_annotation_server(AnnotationService& service, const std::string& host, int port);

}  // namespace codemine
