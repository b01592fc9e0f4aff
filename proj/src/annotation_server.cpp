#include "codemine/annotation_server.hpp"

#include <charconv>
#include <set>

#include <httplib.h>

namespace codemine {

namespace {

AnnotationService::Response json_response(int status, const json& body) {
  return {status, body.dump(), "application/json"};
}

AnnotationService::Response error_response(int status, const std::string& message) {
  return json_response(status, {{"error", message}});
}

bool truthy(const std::string& v) { return v == "1" || v == "true" || v == "yes"; }

}  // namespace

AnnotationService::AnnotationService(std::vector<QuestionThread> threads, SamplingPlan plan,
                                     AnnotationStore& store)
    : plan_(std::move(plan)), store_(store) {
  for (auto& t : threads) threads_.emplace(t.question_id, std::move(t));
}

AnnotationService::Response AnnotationService::next_question(const std::string& annotator) const {
  if (trim(annotator).empty()) return error_response(400, "annotator query parameter is required");
  for (std::int64_t id : plan_.order()) {
    auto it = threads_.find(id);
    if (it == threads_.end() || store_.finished(id, annotator)) continue;
    return get_question(id);
  }
  return {204, "", "application/json"};
}

AnnotationService::Response AnnotationService::get_question(std::int64_t question_id) const {
  auto it = threads_.find(question_id);
  if (it == threads_.end())
    return error_response(404, "unknown question " + std::to_string(question_id));
  json j = thread_to_json(it->second);
  j["intent"] = it->second.intent;
  return json_response(200, j);
}

AnnotationService::Response AnnotationService::post_annotation(const std::string& body, bool overwrite) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    return error_response(400, std::string("request body is not valid JSON: ") + e.what());
  }
  std::vector<FieldError> errors;
  Annotation a = annotation_from_json(j, errors);
  auto field_errors = [](const std::vector<FieldError>& errs) {
    json list = json::array();
    for (const auto& e : errs) list.push_back({{"field", e.field}, {"message", e.message}});
    return json_response(422, {{"errors", list}});
  };
  if (!errors.empty()) return field_errors(errors);
  auto it = threads_.find(a.question_id);
  if (it == threads_.end()) return error_response(404, "unknown question " + std::to_string(a.question_id));
  errors = validate_annotation(a, &it->second);
  if (!errors.empty()) return field_errors(errors);
  switch (store_.put(a, overwrite)) {
    case AnnotationStore::PutResult::conflict:
      return error_response(409, "annotation for question " + std::to_string(a.question_id) +
                                     ", answer " + std::to_string(a.answer_id) + " by " +
                                     a.annotator + " already exists; pass overwrite=true to replace");
    case AnnotationStore::PutResult::replaced:
      return json_response(200, {{"result", "replaced"}, {"annotation", annotation_to_json(a)}});
    case AnnotationStore::PutResult::created:
      break;
  }
  return json_response(201, {{"result", "created"}, {"annotation", annotation_to_json(a)}});
}

AnnotationService::Response AnnotationService::export_annotations(bool gold_only) const {
  return {200, render_annotations(gold_only ? store_.export_gold() : store_.all()),
          "application/x-ndjson"};
}

AnnotationService::Response AnnotationService::progress() const {
  std::size_t finished = 0;
  std::set<std::int64_t> seen;
  for (const auto& a : store_.all())
    if (a.status != AnnotationStatus::not_sure && seen.insert(a.question_id).second) ++finished;
  return json_response(200, {{"plan_questions", plan_.order().size()},
                             {"annotated_questions", finished},
                             {"annotations", store_.size()},
                             {"by_status", store_.counts_by_status()}});
}

void AnnotationService::mount(httplib::Server& server) {
  auto send = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    if (!r.body.empty()) res.set_content(r.body, r.content_type);
  };
  server.Get("/api/questions/next", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, next_question(req.get_param_value("annotator")));
  });
  server.Get(R"(/api/questions/(-?\d+))", [this, send](const httplib::Request& req, httplib::Response& res) {
    std::int64_t id = 0;
    const std::string s = req.matches[1];
    auto [_, ec] = std::from_chars(s.data(), s.data() + s.size(), id);
    if (ec != std::errc{}) {
      send(res, error_response(404, "unknown question " + s));
      return;
    }
    send(res, get_question(id));
  });
  server.Post("/api/annotations", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, post_annotation(req.body, truthy(req.get_param_value("overwrite"))));
  });
  server.Get("/api/export", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, export_annotations(req.get_param_value("status") == "ok"));
  });
  server.Get("/api/progress", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, progress());
  });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(json{{"error", what}}.dump(), "application/json");
  });
}

void run_annotation_server(AnnotationService& service, const std::string& host, int port) {
  httplib::Server server;
  service.mount(server);
  if (!server.listen(host, port))
    throw UserError("cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace codemine
