// Copyright 2026 The tclab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Drives the tclab binary end to end.

#include <gtest/gtest.h>
#include <httplib.h>
#include <unistd.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "tracecorona/scenario.hpp"
#include "tracecorona/wire.hpp"

namespace tc {
namespace {

namespace fs = std::filesystem;

const fs::path kSource(TC_SOURCE_DIR);

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("tclab_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Result tclab(const std::string& args) {
    const fs::path out = dir_ / "stdout", err = dir_ / "stderr";
    const std::string cmd = std::string(TCLAB_BIN) + " " + args + " >" + out.string() + " 2>" +
                            err.string();
    const int status = std::system(cmd.c_str());
    return Result{WEXITSTATUS(status), slurp(out), slurp(err)};
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }

  static std::string scenario(const std::string& name) {
    return (kSource / "scenarios" / (name + ".json")).string();
  }

  fs::path dir_;
};

TEST_F(Cli, RunHonestPair) {
  const Result r = tclab("run --config " + scenario("honest_pair"));
  ASSERT_EQ(r.code, 0) << r.err;
  const ScenarioReport report = parse_report(r.out);
  EXPECT_EQ(report.notifications.size(), 1u);
  EXPECT_EQ(report.scenario, "honest_pair");
}

TEST_F(Cli, MalformedConfigExitsTwoWithFieldPath) {
  std::ifstream in(scenario("honest_pair"));
  std::string text{std::istreambuf_iterator<char>(in), {}};
  text.replace(text.find("\"end\": 37200"), 12, "\"end\": \"soon\"");
  const fs::path bad = dir_ / "bad.json";
  std::ofstream(bad) << text;
  const Result r = tclab("run --config " + bad.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("colocations[0].end"), std::string::npos) << r.err;
  EXPECT_EQ(tclab("run --config " + (dir_ / "missing.json").string()).code, 2);
}

TEST_F(Cli, SchemeOverrideFlipsTheRelayOutcome) {
  const Result dec = tclab("run --config " + scenario("relay_r1") + " --scheme decentralized");
  const Result tcr = tclab("run --config " + scenario("relay_r1") + " --scheme tracecorona");
  ASSERT_EQ(dec.code, 0) << dec.err;
  ASSERT_EQ(tcr.code, 0) << tcr.err;
  EXPECT_GT(parse_report(dec.out).attack_success_rate, 0.0);
  EXPECT_EQ(parse_report(tcr.out).attack_success_rate, 0.0);
  EXPECT_EQ(tclab("run --config " + scenario("relay_r1") + " --scheme magic").code, 2);
}

TEST_F(Cli, SeedOverride) {
  const Result r = tclab("run --config " + scenario("honest_pair") + " --seed 99");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(parse_report(r.out).seed, 99u);
}

TEST_F(Cli, ParallelJobsMatchSerialRuns) {
  const std::vector<std::string> names = {"honest_pair", "relay_r1", "kiss_replay", "s1"};
  std::string args = "run --jobs 4 --out " + (dir_ / "out").string();
  for (const auto& n : names) args += " --config " + scenario(n);
  ASSERT_EQ(tclab(args).code, 0);
  for (const auto& n : names) {
    const Result single = tclab("run --config " + scenario(n));
    EXPECT_EQ(slurp(dir_ / "out" / (n + ".json")), single.out) << n;
  }
}

TEST_F(Cli, ReportMatrixAcrossBundledScenarios) {
  std::string args = "run --jobs 8 --out " + (dir_ / "reports").string();
  for (const auto& e : fs::directory_iterator(kSource / "scenarios")) {
    args += " --config " + e.path().string();
  }
  ASSERT_EQ(tclab(args).code, 0);
  std::string reports;
  for (const auto& e : fs::directory_iterator(dir_ / "reports")) reports += " " + e.path().string();
  const Result r = tclab("report" + reports);
  ASSERT_EQ(r.code, 0) << r.err;

  std::istringstream lines(r.out);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(lines, line) && !line.empty()) rows.push_back(line);
  ASSERT_EQ(rows.size(), 4u) << r.out;
  EXPECT_EQ(rows[1].rfind("centralized", 0), 0u);
  EXPECT_EQ(rows[2].rfind("decentralized", 0), 0u);
  EXPECT_EQ(rows[3].rfind("tracecorona", 0), 0u);
  const auto cells = [](const std::string& row) {
    std::istringstream in(row);
    std::vector<std::string> out;
    for (std::string c; in >> c;) out.push_back(c);
    return out;
  };
  const auto dec = cells(rows[2]);
  const auto tcr = cells(rows[3]);
  EXPECT_EQ(dec[1], "vulnerable");
  EXPECT_EQ(dec[3], "vulnerable");
  EXPECT_EQ(tcr[1], "resist");
  EXPECT_EQ(tcr[3], "resist");
  EXPECT_NE(r.out.find("44.8"), std::string::npos);
  EXPECT_NE(r.out.find("43.0"), std::string::npos);
  EXPECT_NE(r.out.find("35840"), std::string::npos);

  const Result again = tclab("report" + reports);
  EXPECT_EQ(again.out, r.out);
}

TEST_F(Cli, ReportEdgeCases) {
  const fs::path one = dir_ / "one.json";
  ASSERT_EQ(tclab("run --config " + scenario("honest_pair") + " --out " + one.string()).code, 0);
  const Result single = tclab("report " + one.string());
  ASSERT_EQ(single.code, 0);
  EXPECT_EQ(single.out.substr(0, single.out.find("\n\n")).find("tracecorona"),
            single.out.find("tracecorona"));
  EXPECT_EQ(std::count(single.out.begin(), single.out.begin() + single.out.find("\n\n"), '\n'),
            1);
  EXPECT_EQ(tclab("report").code, 2);
  EXPECT_EQ(tclab("report " + (dir_ / "nope.json").string()).code, 2);
}

TEST_F(Cli, VerifyVectors) {
  const Result r = tclab("verify-vectors");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
  EXPECT_NE(r.out.find("ok   ecdh.token"), std::string::npos);

  std::ifstream in(kSource / "tests" / "vectors" / "crypto_vectors.json");
  std::string text{std::istreambuf_iterator<char>(in), {}};
  const auto at = text.find("\"slot_0\": \"") + 11;
  text[at] = text[at] == '0' ? '1' : '0';
  std::ofstream(dir_ / "v.json") << text;
  const Result bad = tclab("verify-vectors --vectors " + (dir_ / "v.json").string());
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.out.find("FAIL tempid.decentralized.slot_0"), std::string::npos);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(tclab("").code, 2);
  EXPECT_EQ(tclab("run --config " + scenario("honest_pair") + " --bogus").code, 2);
  EXPECT_EQ(tclab("frobnicate").code, 2);
  EXPECT_EQ(tclab("--help").code, 0);
}

TEST_F(Cli, KeysAndAttack) {
  const Result ids = tclab("keys --tek f0e1d2c3b4a5968778695a4b3c2d1e0f --day 18500");
  ASSERT_EQ(ids.code, 0);
  EXPECT_EQ(std::count(ids.out.begin(), ids.out.end(), '\n'), 144);
  EXPECT_NE(ids.out.find("0 e8e4a02949b89e60f26847e6bec8a7da"), std::string::npos);
  EXPECT_EQ(tclab("keys --tek zz").code, 2);
  const Result frames = tclab("keys --seed 3 --frames 2");
  EXPECT_EQ(std::count(frames.out.begin(), frames.out.end(), '\n'), 2);

  const Result a = tclab("attack --config " + scenario("relay_r2"));
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_NE(a.out.find("relay_twoway"), std::string::npos);
  EXPECT_NE(a.out.find("attack_success_rate="), std::string::npos);
}

TEST_F(Cli, ServeIngestAndDumpStats) {
  const int port = 20000 + ::getpid() % 20000;
  const fs::path log = dir_ / "server.log";
  std::thread server([&] {
    tclab("serve --port " + std::to_string(port) + " --log " + log.string());
  });
  httplib::Client client("127.0.0.1", port);
  bool up = false;
  for (int i = 0; i < 100 && !up; ++i) {
    up = static_cast<bool>(client.Get("/stats"));
    if (!up) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  ASSERT_TRUE(up);

  const auto tan = client.Post("/tan", "user-1", "text/plain");
  ASSERT_TRUE(tan);
  SeededRng rng(5);
  InfectedUploadRequest up_req{tan->body, {}};
  for (int i = 0; i < 3; ++i) {
    const auto s = rng.bytes<32>();
    up_req.records.push_back({token_hash(s), encrypt_metadata(s, 1000 + i), RecordTag::direct});
  }
  const Bytes body = encode(up_req);
  const auto as_string = [](const Bytes& b) { return std::string(b.begin(), b.end()); };
  auto res = client.Post("/upload/infected", as_string(body), "application/octet-stream");
  ASSERT_TRUE(res);
  EXPECT_TRUE(decode_upload_result(Bytes(res->body.begin(), res->body.end())).accepted());
  res = client.Post("/upload/infected", as_string(body), "application/octet-stream");
  EXPECT_EQ(decode_upload_result(Bytes(res->body.begin(), res->body.end())).status,
            UploadStatus::invalid_tan);
  EXPECT_EQ(client.Post("/upload/infected", "xx", "application/octet-stream")->status, 400);

  EXPECT_EQ(client.Post("/epoch", "", "text/plain")->body, "1");
  res = client.Post("/feed", as_string(encode_feed_request(0)), "application/octet-stream");
  ASSERT_TRUE(res);
  const PublishedFeed feed = decode_feed(Bytes(res->body.begin(), res->body.end()));
  EXPECT_EQ(feed.records.size(), 3u);
  EXPECT_NE(client.Get("/stats")->body.find("\"infected_uploads\": 1"), std::string::npos);
  client.Post("/shutdown", "", "text/plain");
  server.join();

  const fs::path feed_file = dir_ / "feed.bin";
  std::ofstream(feed_file, std::ios::binary) << res->body;
  const fs::path copy = dir_ / "copy.log";
  const Result ingest = tclab("ingest " + feed_file.string() + " --log " + copy.string());
  ASSERT_EQ(ingest.code, 0) << ingest.err;
  EXPECT_EQ(std::count(ingest.out.begin(), ingest.out.end(), '\n'), 3);

  for (const auto& l : {log, copy}) {
    const Result dump = tclab("dump-stats --log " + l.string());
    ASSERT_EQ(dump.code, 0) << dump.err;
    EXPECT_NE(dump.out.find("\"records\": 3"), std::string::npos) << dump.out;
  }
  EXPECT_EQ(tclab("dump-stats --log " + (dir_ / "none.log").string()).code, 2);
  std::ofstream(dir_ / "junk.bin") << "junk";
  EXPECT_EQ(tclab("ingest " + (dir_ / "junk.bin").string()).code, 2);
}

}  // namespace
}  // namespace tc
