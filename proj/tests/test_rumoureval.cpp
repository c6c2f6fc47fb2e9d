#include <doctest.h>

#include <fstream>

#include "fixtures.hpp"
#include "stance/error.hpp"
#include "stance/rumoureval.hpp"

using namespace stance;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write(const fs::path& p, const json& doc) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << doc.dump();
}

json tweet(const std::string& id, const std::string& text, const char* reply_to = nullptr) {
  json t = {{"id_str", id}, {"text", text}, {"entities", {{"urls", json::array()}}}};
  t["in_reply_to_status_id_str"] = reply_to ? json(reply_to) : json(nullptr);
  return t;
}

// event/100: 100 <- 101 <- 103, 100 <- 102; event/200: lone source.
void make_layout(const fs::path& root) {
  const fs::path t1 = root / "germanwings" / "100";
  json src = tweet("100", "Plane down http://t.co/x");
  src["entities"]["urls"] = json::array({{{"url", "http://t.co/x"}}});
  src["extended_entities"] = {{"media", json::array({{{"id", 1}}})}};
  write(t1 / "source-tweet" / "100.json", src);
  write(t1 / "replies" / "101.json", tweet("101", "really?", "100"));
  write(t1 / "replies" / "102.json", tweet("102", "no way", "100"));
  write(t1 / "replies" / "103.json", tweet("103", "yes", "999"));  // structure.json knows better
  write(t1 / "structure.json", {{"100", {{"101", {{"103", json::array()}}}, {"102", json::array()}}}});

  const fs::path t2 = root / "sydneysiege" / "200";
  write(t2 / "source-tweet" / "200.json", tweet("200", "Hostages"));
  write(t2 / "replies" / "201.json", tweet("201", "orphan", "555"));

  write(root / "ottawa" / "300" / "source-tweet" / "300.json", tweet("300", "unlabeled thread"));
}

}  // namespace

TEST_CASE("import a RumourEval layout") {
  fixtures::TempDir dir("import");
  make_layout(dir.path() / "data");
  write(dir.path() / "train.json", {{"100", "support"}, {"101", "query"}, {"102", "deny"}, {"103", "comment"}});
  write(dir.path() / "dev.json", {{"200", "support"}, {"201", "comment"}});

  ImportOptions opts;
  opts.data_roots = {dir.path() / "data"};
  opts.train_labels = dir.path() / "train.json";
  opts.dev_labels = dir.path() / "dev.json";
  const ImportResult r = import_rumoureval(opts);
  REQUIRE(r.split.train.size() == 1);
  REQUIRE(r.split.dev.size() == 1);
  CHECK(r.split.test.empty());
  CHECK(r.skipped_threads == 1);
  CHECK(r.reattached_replies == 1);

  const ConversationThread& t = r.split.train[0];
  CHECK(t.thread_id() == "100");
  CHECK(t.source().id == "100");
  CHECK(t.source().has_url);
  CHECK(t.source().has_media);
  CHECK(*t.post(t.index_of("103")).parent_id == "101");
  CHECK(post_depth(t, "103") == 2);
  CHECK(t.post(t.index_of("102")).label == StanceLabel::Deny);
  CHECK(decompose_branches(t).size() == 2);

  const ConversationThread& d = r.split.dev[0];
  CHECK(*d.post(d.index_of("201")).parent_id == "200");
}

TEST_CASE("import errors") {
  fixtures::TempDir dir("import_err");
  const fs::path t = dir.path() / "data" / "e" / "1";
  write(t / "source-tweet" / "1.json", tweet("1", "a"));
  write(t / "source-tweet" / "2.json", tweet("2", "b"));
  CHECK_THROWS_AS(import_thread_dir(t, {}), Error);

  const fs::path u = dir.path() / "data2" / "e" / "5";
  write(u / "source-tweet" / "5.json", tweet("5", "a"));
  CHECK_THROWS_AS(import_thread_dir(u, {{"5", "agree"}}), Error);
}
