#include <gtest/gtest.h>

#include <thread>

#include <httplib.h>

#include "codemine/annotation_server.hpp"

using namespace codemine;

namespace {

QuestionThread make_thread(std::int64_t id, std::int64_t views) {
  QuestionThread t;
  t.question_id = id;
  t.intent = "How to do thing " + std::to_string(id);
  t.view_count = views;
  for (int r = 1; r <= 2; ++r) {
    Answer a;
    a.answer_id = id * 10 + r;
    a.rank = r;
    a.accepted = r == 1;
    a.blocks.push_back(CodeBlock{a.answer_id, 0, {"x = 1", "f(x)", "print(x)"}, r, a.accepted});
    t.answers.push_back(a);
  }
  return t;
}

json annotation_body(std::int64_t q, const std::string& annotator, int line_end = 2) {
  Annotation a;
  a.question_id = q;
  a.answer_id = q * 10 + 1;
  a.intent = "How to do thing " + std::to_string(q);
  a.snippet_spans = {{0, 2, line_end}};
  a.annotator = annotator;
  a.timestamp = "2018-05-01T00:00:00Z";
  return annotation_to_json(a);
}

// A real server on an ephemeral port, driven through an HTTP client.
class HttpTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::vector<QuestionThread> threads{make_thread(1, 500), make_thread(2, 900), make_thread(3, 10)};
    auto plan = build_sampling_plan(threads, "python", 1, 2, 5);
    service_ = std::make_unique<AnnotationService>(threads, plan, store_);
    service_->mount(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }

  httplib::Result post(const json& body, bool overwrite = false) {
    return client_->Post(overwrite ? "/api/annotations?overwrite=true" : "/api/annotations", body.dump(),
                         "application/json");
  }

  AnnotationStore store_;
  std::unique_ptr<AnnotationService> service_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::unique_ptr<httplib::Client> client_;
};

}  // namespace

TEST_F(HttpTest, NextFollowsPlanAndSkipsFinished) {
  auto r = client_->Get("/api/questions/next?annotator=a");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  auto j = json::parse(r->body);
  EXPECT_EQ(j["question_id"], 2);  // most viewed first
  EXPECT_EQ(j["intent"], "How to do thing 2");
  EXPECT_EQ(j["answers"].size(), 2u);
  EXPECT_EQ(j["answers"][0]["blocks"][0]["lines"].size(), 3u);

  ASSERT_EQ(post(annotation_body(2, "a"))->status, 201);
  EXPECT_EQ(json::parse(client_->Get("/api/questions/next?annotator=a")->body)["question_id"], 1);
  EXPECT_EQ(json::parse(client_->Get("/api/questions/next?annotator=b")->body)["question_id"], 2);
  ASSERT_EQ(post(annotation_body(1, "a"))->status, 201);
  ASSERT_EQ(post(annotation_body(3, "a"))->status, 201);
  EXPECT_EQ(client_->Get("/api/questions/next?annotator=a")->status, 204);
  EXPECT_EQ(client_->Get("/api/questions/next")->status, 400);
}

TEST_F(HttpTest, GetQuestion) {
  EXPECT_EQ(client_->Get("/api/questions/3")->status, 200);
  auto r = client_->Get("/api/questions/42");
  EXPECT_EQ(r->status, 404);
  EXPECT_TRUE(json::parse(r->body).contains("error"));
}

TEST_F(HttpTest, PostThenExportIsByteIdentical) {
  const json body = annotation_body(1, "ann");
  auto r = post(body);
  ASSERT_EQ(r->status, 201);
  auto e = client_->Get("/api/export");
  ASSERT_EQ(e->status, 200);
  EXPECT_EQ(e->body, body.dump() + "\n");
  EXPECT_EQ(client_->Get("/api/export?status=ok")->body, body.dump() + "\n");
}

TEST_F(HttpTest, ValidationErrors) {
  auto r = post(annotation_body(1, "ann", 9));
  ASSERT_EQ(r->status, 422);
  auto errors = json::parse(r->body)["errors"];
  ASSERT_FALSE(errors.empty());
  EXPECT_EQ(errors[0]["field"], "snippet_spans[0].line_end");

  json na = annotation_body(1, "ann");
  na["status"] = "not-applicable";
  r = post(na);
  EXPECT_EQ(r->status, 422);

  json unknown = annotation_body(1, "ann");
  unknown["extra"] = true;
  EXPECT_EQ(post(unknown)->status, 422);

  EXPECT_EQ(client_->Post("/api/annotations", "{not json", "application/json")->status, 400);
  EXPECT_EQ(post(annotation_body(77, "ann"))->status, 404);
  EXPECT_EQ(client_->Get("/api/export")->body, "");
}

TEST_F(HttpTest, ConflictAndOverwrite) {
  ASSERT_EQ(post(annotation_body(1, "ann"))->status, 201);
  EXPECT_EQ(post(annotation_body(1, "ann"))->status, 409);  // a resubmitted draft is delivered once
  auto r = post(annotation_body(1, "ann", 3), true);
  EXPECT_EQ(r->status, 200);
  auto lines = client_->Get("/api/export")->body;
  EXPECT_EQ(std::count(lines.begin(), lines.end(), '\n'), 1);
  EXPECT_NE(lines.find("\"line_end\":3"), std::string::npos);
}

TEST_F(HttpTest, ExportFiltersStatusAndProgress) {
  ASSERT_EQ(post(annotation_body(1, "a"))->status, 201);
  json unsure = annotation_body(2, "a");
  unsure["status"] = "not-sure";
  ASSERT_EQ(post(unsure)->status, 201);
  json na = annotation_body(3, "a");
  na["status"] = "not-applicable";
  na["snippet_spans"] = json::array();
  na["answer_id"] = 0;
  ASSERT_EQ(post(na)->status, 201);
  auto all = client_->Get("/api/export")->body;
  auto gold = client_->Get("/api/export?status=ok")->body;
  EXPECT_EQ(std::count(all.begin(), all.end(), '\n'), 3);
  EXPECT_EQ(std::count(gold.begin(), gold.end(), '\n'), 1);
  auto p = json::parse(client_->Get("/api/progress")->body);
  EXPECT_EQ(p["plan_questions"], 3);
  EXPECT_EQ(p["annotations"], 3);
  EXPECT_EQ(p["annotated_questions"], 2);
  EXPECT_EQ(p["by_status"]["not-sure"], 1);
  // question 2 was only marked not-sure, so it is offered again
  EXPECT_EQ(json::parse(client_->Get("/api/questions/next?annotator=a")->body)["question_id"], 2);
}

TEST_F(HttpTest, ConcurrentPostsAreAllStored) {
  std::vector<std::thread> workers;
  std::atomic<int> created{0};
  for (int w = 0; w < 8; ++w)
    workers.emplace_back([&, w] {
      httplib::Client c("127.0.0.1", port_);
      for (std::int64_t q = 1; q <= 3; ++q) {
        auto r = c.Post("/api/annotations", annotation_body(q, "w" + std::to_string(w)).dump(), "application/json");
        if (r && r->status == 201) ++created;
      }
    });
  for (auto& t : workers) t.join();
  EXPECT_EQ(created.load(), 24);
  EXPECT_EQ(store_.size(), 24u);
}
