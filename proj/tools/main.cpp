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

// tclab: run scenarios, serve the tracing-server API, inspect feeds and
// logs, compare reports, check golden vectors.
//
// Exit codes: 0 success, 1 runtime failure, 2 bad input (config, usage,
// missing files).

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <mutex>
#include <sstream>
#include <thread>

#include "matrix.hpp"
#include "tracecorona/simnet.hpp"
#include "tracecorona/tracing_server.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace tc::cli {
namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kBadInput = 2;

struct BadInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("tclab");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* level = std::getenv("TC_LOG_LEVEL");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BadInput("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_file(const fs::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary);
  out << data;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

// ---- run / attack ----

struct RunOptions {
  std::vector<std::string> configs;
  std::optional<std::uint64_t> seed;
  std::string scheme;
  std::string out;
  unsigned jobs = 1;
  bool summary = false;
};

ScenarioConfig load_with_overrides(const std::string& path, const RunOptions& o) {
  ScenarioConfig c = load_config(path);
  if (o.seed) c.seed = *o.seed;
  if (!o.scheme.empty()) {
    const auto s = scheme_from_string(o.scheme);
    if (!s) throw ConfigError("scheme", "unknown scheme '" + o.scheme + "'");
    c.scheme = *s;
  }
  c.validate();
  return c;
}

int cmd_run(const RunOptions& o) {
  std::vector<ScenarioConfig> configs;
  for (const auto& path : o.configs) {
    try {
      configs.push_back(load_with_overrides(path, o));
    } catch (const ConfigError& e) {
      spdlog::error("{}: {}", path, e.what());
      std::cerr << path << ": " << e.what() << "\n";
      return kBadInput;
    }
  }
  const bool many = configs.size() > 1;
  if (many && o.out.empty()) {
    std::cerr << "several configs need --out DIR\n";
    return kBadInput;
  }
  if (many) fs::create_directories(o.out);

  std::vector<std::string> rendered(configs.size());
  std::vector<std::string> errors(configs.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        spdlog::info("running {} ({})", configs[i].name, to_string(configs[i].scheme));
        const ScenarioReport r = run_scenario(configs[i]);
        rendered[i] = o.summary ? render_summary(r) : render_report(r);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned j = 0; j < std::max(1u, o.jobs); ++j) pool.emplace_back(worker);
  pool.clear();

  int rc = kOk;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    if (!errors[i].empty()) {
      std::cerr << o.configs[i] << ": " << errors[i] << "\n";
      rc = kFailure;
      continue;
    }
    if (many) {
      write_file(fs::path(o.out) / (fs::path(o.configs[i]).stem().string() + ".json"),
                 rendered[i]);
    } else if (!o.out.empty()) {
      write_file(o.out, rendered[i]);
    } else {
      std::cout << rendered[i];
    }
  }
  return rc;
}

int cmd_attack(const RunOptions& o) {
  ScenarioConfig c;
  try {
    c = load_with_overrides(o.configs.front(), o);
  } catch (const ConfigError& e) {
    std::cerr << o.configs.front() << ": " << e.what() << "\n";
    return kBadInput;
  }
  const ScenarioReport r = run_scenario(c);
  std::printf("%-14s %-14s %9s %9s %7s %13s\n", "adversary", "kind", "attempts", "successes",
              "tokens", "victims/frame");
  for (const auto& a : r.adversaries) {
    std::printf("%-14s %-14s %9llu %9llu %7llu %13llu\n", a.name.c_str(), a.kind.c_str(),
                static_cast<unsigned long long>(a.attempts),
                static_cast<unsigned long long>(a.successes),
                static_cast<unsigned long long>(a.tokens_established),
                static_cast<unsigned long long>(a.max_victims_per_frame));
  }
  std::printf("scheme=%s false_notifications=%llu attack_success_rate=%.4f\n",
              r.scheme.c_str(), static_cast<unsigned long long>(r.false_notification_count),
              r.attack_success_rate);
  return kOk;
}

// ---- report ----

int cmd_report(const std::vector<std::string>& paths, const std::string& out) {
  if (paths.empty()) {
    std::cerr << "report: no input reports\n";
    return kBadInput;
  }
  std::vector<ScenarioReport> reports;
  for (const auto& p : paths) {
    try {
      reports.push_back(parse_report(read_file(p)));
    } catch (const BadInput& e) {
      std::cerr << e.what() << "\n";
      return kBadInput;
    } catch (const std::exception& e) {
      std::cerr << p << ": " << e.what() << "\n";
      return kBadInput;
    }
  }
  const std::string text =
      render_matrix(comparison_matrix(reports)) + "\n" + render_payload_table(reports);
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file(out, text);
  }
  return kOk;
}

// ---- serve ----

json stats_json(const ServerStats& s) {
  return json{{"active_users", s.active_users},
              {"infected_uploads", s.infected_uploads},
              {"records_published", s.records_published},
              {"second_level_uploads", s.second_level_uploads},
              {"superspreader_flags", s.superspreader_flags},
              {"notifications_reported", s.notifications_reported}};
}

int cmd_serve(const std::string& host, int port, const std::string& log, std::uint64_t seed) {
  HealthAuthority ha(HealthAuthorityOptions{.seed = SeededRng(seed).substream("ha")(), .tan_expiry = std::nullopt});
  TracingServerOptions options;
  if (!log.empty()) options.log_path = log;
  TracingServer server(ha, options);
  SeededRng shuffle = SeededRng(seed).substream("shuffle");
  std::mutex shuffle_mu;

  httplib::Server http;
  const auto binary = [](httplib::Response& res, const Bytes& body) {
    res.set_content(std::string(body.begin(), body.end()), "application/octet-stream");
  };
  const auto bytes_of = [](const httplib::Request& req) {
    return Bytes(req.body.begin(), req.body.end());
  };
  const auto guarded = [](auto handler) {
    return [handler](const httplib::Request& req, httplib::Response& res) {
      try {
        handler(req, res);
      } catch (const WireError& e) {
        res.status = 400;
        res.set_content(e.what(), "text/plain");
      }
    };
  };

  http.Post("/tan", [&](const httplib::Request& req, httplib::Response& res) {
    const Tan tan = ha.issue_tan(req.body, 0);
    res.set_content(tan.value, "text/plain");
  });
  http.Post("/upload/infected", guarded([&](const auto& req, auto& res) {
              const auto m = decode_infected(bytes_of(req));
              binary(res, encode(server.upload_infected(m.tan, m.records)));
            }));
  http.Post("/upload/second-level", guarded([&](const auto& req, auto& res) {
              const auto m = decode_second_level(bytes_of(req));
              binary(res, encode(server.upload_second_level(m.proof, m.records)));
            }));
  http.Post("/upload/superspreader", guarded([&](const auto& req, auto& res) {
              const auto m = decode_superspreader(bytes_of(req));
              binary(res, encode(server.upload_superspreader_proof(m.proofs, m.records)));
            }));
  http.Post("/feed", guarded([&](const auto& req, auto& res) {
              const std::int64_t since = decode_feed_request(bytes_of(req));
              std::lock_guard lock(shuffle_mu);
              binary(res, encode(server.fetch_feed(since, shuffle)));
            }));
  http.Post("/epoch", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(std::to_string(server.advance_epoch()), "text/plain");
  });
  http.Post("/notification", [&](const httplib::Request&, httplib::Response& res) {
    server.report_notification();
    res.status = 204;
  });
  http.Post("/active", [&](const httplib::Request& req, httplib::Response& res) {
    server.report_active_user(bytes_of(req));
    res.status = 204;
  });
  http.Get("/stats", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(stats_json(server.stats_snapshot()).dump(2), "application/json");
  });
  http.Post("/shutdown", [&](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
    http.stop();
  });

  spdlog::info("listening on {}:{}", host, port);
  if (!http.listen(host, port)) {
    std::cerr << "cannot listen on " << host << ":" << port << "\n";
    return kFailure;
  }
  return kOk;
}

// ---- ingest / dump-stats ----

int cmd_ingest(const std::vector<std::string>& files, const std::string& log) {
  if (files.empty()) {
    std::cerr << "ingest: no feed files\n";
    return kBadInput;
  }
  std::ofstream out;
  if (!log.empty()) out.open(log, std::ios::app);
  for (const auto& path : files) {
    PublishedFeed feed;
    try {
      const std::string raw = read_file(path);
      feed = decode_feed(Bytes(raw.begin(), raw.end()));
    } catch (const std::exception& e) {
      std::cerr << path << ": " << e.what() << "\n";
      return kBadInput;
    }
    for (const auto& r : feed.records) {
      std::cout << json{{"hash", to_hex(r.hash)},
                        {"tag", to_string(r.tag)},
                        {"ciphertext", to_hex(r.ciphertext)},
                        {"feed_epoch", feed.feed_epoch}}
                       .dump()
                << "\n";
      if (out.is_open()) out << encode_log_line(StoredRecord{r, feed.feed_epoch - 1}) << "\n";
    }
  }
  return kOk;
}

int cmd_dump_stats(const std::string& log) {
  if (!fs::exists(log)) {
    std::cerr << "no such log: " << log << "\n";
    return kBadInput;
  }
  HealthAuthority ha;
  TracingServerOptions options;
  options.log_path = log;
  TracingServer server(ha, options);
  const auto records = server.stored_records();
  std::map<std::string, std::uint64_t> tags;
  std::int64_t last_epoch = -1;
  for (const auto& s : records) {
    ++tags[std::string(to_string(s.record.tag))];
    last_epoch = std::max(last_epoch, s.epoch);
  }
  json j{{"records", records.size()},
         {"by_tag", tags},
         {"last_epoch", last_epoch},
         {"stats", stats_json(server.stats_snapshot())}};
  std::cout << j.dump(2) << "\n";
  return kOk;
}

// ---- keys ----

int cmd_keys(std::uint64_t seed, int frames, const std::string& tek_hex, std::int64_t day) {
  if (!tek_hex.empty()) {
    Tek tek;
    try {
      tek = array_from_hex<16>(tek_hex);
    } catch (const std::exception& e) {
      std::cerr << "bad --tek: " << e.what() << "\n";
      return kBadInput;
    }
    const auto ids = derive_tempids_decentralized(tek, day);
    for (std::size_t i = 0; i < ids.size(); ++i) std::cout << i << " " << to_hex(ids[i]) << "\n";
    return kOk;
  }
  SeededRng rng(seed);
  for (int f = 0; f < frames; ++f) {
    const FrameKeyPair kp = generate_frame_keypair(f, rng);
    std::cout << "frame " << f << " public " << to_hex(kp.public_key) << "\n";
  }
  return kOk;
}

// ---- verify-vectors ----

int cmd_verify_vectors(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const std::exception& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return kBadInput;
  }
  int failures = 0;
  const auto check = [&](const std::string& name, const std::string& got, const json& want) {
    const bool ok = got == want.get<std::string>();
    std::cout << (ok ? "ok   " : "FAIL ") << name << "\n";
    failures += !ok;
  };
  const auto s = [](const json& v) { return v.get<std::string>(); };

  const auto& e = j.at("ecdh");
  const auto da = array_from_hex<48>(s(e.at("private_a")));
  const auto db = array_from_hex<48>(s(e.at("private_b")));
  check("ecdh.public_a", to_hex(public_key_from_private(da)), e.at("public_a"));
  check("ecdh.public_b", to_hex(public_key_from_private(db)), e.at("public_b"));
  const auto token = derive_token(da, array_from_hex<48>(s(e.at("public_b"))));
  check("ecdh.token", to_hex(token), e.at("token"));
  check("ecdh.token_reverse",
        to_hex(derive_token(db, array_from_hex<48>(s(e.at("public_a"))))), e.at("token"));
  check("ecdh.token_hash", to_hex(token_hash(token)), e.at("token_hash"));

  const auto& m = j.at("metadata");
  check("metadata.ciphertext",
        to_hex(encrypt_metadata(array_from_hex<32>(s(m.at("token"))),
                                m.at("start_time").get<std::int64_t>())),
        m.at("ciphertext"));

  const auto& c = j.at("tempid_centralized");
  check("tempid.centralized",
        to_hex(derive_tempid_centralized(from_hex(s(c.at("user_id"))), c.at("t_k"))),
        c.at("tempid"));
  const auto& bt = j.at("tempid_bluetrace");
  check("tempid.bluetrace",
        to_hex(derive_tempid_bluetrace(from_hex(s(bt.at("user_id"))), bt.at("t_k"),
                                       array_from_hex<16>(s(bt.at("iv"))),
                                       from_hex(s(bt.at("auth_tag"))),
                                       array_from_hex<32>(s(bt.at("master_key"))))),
        bt.at("tempid"));
  const auto& d = j.at("tempid_decentralized");
  const auto ids =
      derive_tempids_decentralized(array_from_hex<16>(s(d.at("tek"))), d.at("day"));
  check("tempid.decentralized.slot_0", to_hex(ids.front()), d.at("slot_0"));
  check("tempid.decentralized.slot_143", to_hex(ids.back()), d.at("slot_143"));
  return failures == 0 ? kOk : kFailure;
}

}  // namespace
}  // namespace tc::cli

int main(int argc, char** argv) {
  using namespace tc::cli;
  setup_logging();

  CLI::App app{"tclab: contact tracing protocol lab"};
  app.require_subcommand(1);

  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "Run scenarios and write reports");
  run->add_option("--config", run_opts.configs, "Scenario config (repeatable)")->required();
  run->add_option("--seed", run_opts.seed, "Override the root seed");
  run->add_option("--scheme", run_opts.scheme, "Override the scheme");
  run->add_option("--out", run_opts.out, "Report file, or directory for several configs");
  run->add_option("--jobs", run_opts.jobs, "Scenarios run in parallel")
      ->check(CLI::Range(1u, 256u));
  run->add_flag("--summary", run_opts.summary, "Emit key=value summary instead of JSON");

  RunOptions attack_opts;
  auto* attack = app.add_subcommand("attack", "Run a scenario and print adversary outcomes");
  attack->add_option("--config", attack_opts.configs, "Scenario config")
      ->required()
      ->expected(1);
  attack->add_option("--seed", attack_opts.seed, "Override the root seed");
  attack->add_option("--scheme", attack_opts.scheme, "Override the scheme");

  std::vector<std::string> report_paths;
  std::string report_out;
  auto* report = app.add_subcommand("report", "Compare scenario reports");
  report->add_option("reports", report_paths, "Report files");
  report->add_option("--out", report_out, "Write the tables here");

  std::string host = "127.0.0.1";
  int port = 8080;
  std::string serve_log;
  std::uint64_t serve_seed = 1;
  auto* serve = app.add_subcommand("serve", "Serve the tracing-server wire API over HTTP");
  serve->add_option("--host", host);
  serve->add_option("--port", port)->check(CLI::Range(0, 65535));
  serve->add_option("--log", serve_log, "Append-only record log");
  serve->add_option("--seed", serve_seed, "Seed for TANs and feed shuffling");

  std::vector<std::string> feed_files;
  std::string ingest_log;
  auto* ingest = app.add_subcommand("ingest", "Decode feed files; optionally append to a log");
  ingest->add_option("feeds", feed_files, "Encoded feed files");
  ingest->add_option("--log", ingest_log, "Server log to append to");

  std::string dump_log;
  auto* dump = app.add_subcommand("dump-stats", "Replay a server log and print statistics");
  dump->add_option("--log", dump_log)->required();

  std::uint64_t key_seed = 1;
  int key_frames = 1;
  std::string tek;
  std::int64_t tek_day = 0;
  auto* keys = app.add_subcommand("keys", "Print frame keys or the identifiers of a daily key");
  keys->add_option("--seed", key_seed);
  keys->add_option("--frames", key_frames)->check(CLI::Range(1, 10000));
  keys->add_option("--tek", tek, "Daily key (hex)");
  keys->add_option("--day", tek_day, "Unix day of the daily key");

#ifdef TC_DEFAULT_VECTORS
  std::string vectors = TC_DEFAULT_VECTORS;
#else
  std::string vectors = "tests/vectors/crypto_vectors.json";
#endif
  auto* verify = app.add_subcommand("verify-vectors", "Recompute the golden crypto vectors");
  verify->add_option("--vectors", vectors);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*attack) return cmd_attack(attack_opts);
    if (*report) return cmd_report(report_paths, report_out);
    if (*serve) return cmd_serve(host, port, serve_log, serve_seed);
    if (*ingest) return cmd_ingest(feed_files, ingest_log);
    if (*dump) return cmd_dump_stats(dump_log);
    if (*keys) return cmd_keys(key_seed, key_frames, tek, tek_day);
    if (*verify) return cmd_verify_vectors(vectors);
  } catch (const BadInput& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
