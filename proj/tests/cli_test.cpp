// Copyright 2026 The xylid Authors. All Rights Reserved.
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

// Drives the installed-style `xylid` binary as a user would.
#include <gtest/gtest.h>
#include <json.hpp>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>

extern char** environ;

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

struct Outcome {
  int exit_code = -1;
  std::string out;
};

Outcome run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " XYLID_CLI " " + args + " 2>/dev/null";
  Outcome r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf;
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), p)) r.out.append(buf.data(), n);
  const int status = ::pclose(p);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// A `xylid serve` child process that is stopped with SIGTERM.
class ServeProcess {
 public:
  explicit ServeProcess(const std::vector<std::string>& args) {
    int fds[2];
    if (::pipe(fds) != 0) return;
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, fds[1], 1);
    posix_spawn_file_actions_addclose(&actions, fds[0]);
    std::vector<std::string> all{XYLID_CLI, "serve"};
    all.insert(all.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : all) argv.push_back(a.data());
    argv.push_back(nullptr);
    if (posix_spawn(&pid_, XYLID_CLI, &actions, nullptr, argv.data(), environ) != 0) pid_ = -1;
    posix_spawn_file_actions_destroy(&actions);
    ::close(fds[1]);
    out_ = ::fdopen(fds[0], "r");
  }
  ~ServeProcess() {
    stop();
    if (out_) std::fclose(out_);
  }
  std::string line() {
    char buf[1024];
    if (!out_ || !std::fgets(buf, sizeof buf, out_)) return {};
    return buf;
  }
  int stop() {
    if (pid_ <= 0) return exit_code_;
    ::kill(pid_, SIGTERM);
    int status = 0;
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
    exit_code_ = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return exit_code_;
  }

 private:
  pid_t pid_ = -1;
  FILE* out_ = nullptr;
  int exit_code_ = -1;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::random_device rd;
    dir_ = fs::temp_directory_path() / ("xylid-cli-" + std::to_string(rd()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  void make_model() {
    ASSERT_EQ(run("synth-dataset --classes 3 --per-class 5 --width 128 --height 128 --seed 2 --out " + p("data")).exit_code, 0);
    ASSERT_EQ(run("train --data " + p("data") + " --out " + p("m.xylm") + " --version cli-1").exit_code, 0);
  }
  fs::path some_image() const {
    for (const auto& d : fs::directory_iterator(dir_ / "data"))
      if (d.is_directory())
        for (const auto& e : fs::directory_iterator(d.path())) return e.path();
    return {};
  }

  fs::path dir_;
};

TEST_F(CliTest, HelpAndUsageErrors) {
  const Outcome help = run("--help");
  EXPECT_EQ(help.exit_code, 0);
  for (const char* sub : {"synth-dataset", "train", "evaluate", "serve", "capture", "sync", "gallery", "info", "identify"})
    EXPECT_NE(help.out.find(sub), std::string::npos) << sub;
  EXPECT_EQ(run("").exit_code, 2);
  EXPECT_EQ(run("frobnicate").exit_code, 2);
  EXPECT_EQ(run("info --no-such-flag").exit_code, 2);
  EXPECT_EQ(run("info --format yaml").exit_code, 2);
}

TEST_F(CliTest, InfoHumanAndJson) {
  const Outcome human = run("info merbau");
  EXPECT_EQ(human.exit_code, 0);
  EXPECT_NE(human.out.find("Merbau"), std::string::npos);
  const Outcome json = run("info merbau --format json");
  ASSERT_EQ(json.exit_code, 0);
  EXPECT_EQ(Json::parse(json.out)["class_id"], "merbau");
  const Outcome all = run("info --format json");
  EXPECT_EQ(Json::parse(all.out)["classes"].size(), 60u);
  const Outcome missing = run("info x --format json");
  EXPECT_EQ(missing.exit_code, 1);
  EXPECT_EQ(Json::parse(missing.out)["error_code"], "not_found");
}

TEST_F(CliTest, TrainEvaluateAndEnvOverride) {
  make_model();
  EXPECT_TRUE(fs::exists(dir_ / "data" / "manifest.tsv"));
  const Outcome eval = run("evaluate --model " + p("m.xylm") + " --data " + p("data") + " --format json");
  ASSERT_EQ(eval.exit_code, 0);
  const Json j = Json::parse(eval.out);
  EXPECT_EQ(j["model_version"], "cli-1");
  EXPECT_GE(j["report"]["top2"].get<double>(), j["report"]["top1"].get<double>());
  EXPECT_EQ(run("evaluate --model " + p("m.xylm") + " --data " + p("data") + " --split 0").exit_code, 2);
  EXPECT_EQ(run("evaluate --model " + p("none.xylm") + " --data " + p("data")).exit_code, 1);

  // Environment supplies the flag; an explicit flag wins over it.
  const Outcome env = run("synth-dataset --classes 2 --width 64 --height 64 --out " + p("d2") + " --format json",
                      "XYLID_PER_CLASS=2");
  ASSERT_EQ(env.exit_code, 0);
  EXPECT_EQ(Json::parse(env.out)["images"], 4);
  const Outcome both = run("synth-dataset --classes 2 --per-class 1 --width 64 --height 64 --out " + p("d3") + " --format json",
                       "XYLID_PER_CLASS=5");
  EXPECT_EQ(Json::parse(both.out)["images"], 2);
}

TEST_F(CliTest, ServeIdentifyCaptureSyncGallery) {
  make_model();
  ServeProcess serve({"--model", p("m.xylm"), "--store", p("server"), "--listen", "127.0.0.1:0", "--format", "json"});
  const std::string first = serve.line();
  ASSERT_FALSE(first.empty());
  const std::string url = Json::parse(first)["url"];

  const Outcome id = run("identify --server " + url + " --image " + some_image().string() + " --format json");
  ASSERT_EQ(id.exit_code, 0);
  const Json r = Json::parse(id.out);
  EXPECT_EQ(r["model_version"], "cli-1");
  EXPECT_EQ(r["predictions"].size(), 2u);
  EXPECT_TRUE(r.contains("wall_ms"));

  const std::string store = " --store " + p("field");
  for (int i = 0; i < 2; ++i) {
    const Outcome c = run("capture" + store + " --image " + some_image().string() + " --device-id bench --format json");
    ASSERT_EQ(c.exit_code, 0);
    EXPECT_EQ(Json::parse(c.out)["state"], "QUEUED");
  }
  EXPECT_EQ(run("capture" + store + " --image " + p("m.xylm")).exit_code, 1);
  const Outcome s = run("sync" + store + " --server " + url + " --format json");
  ASSERT_EQ(s.exit_code, 0);
  EXPECT_EQ(Json::parse(s.out)["identified"], 2);
  const Outcome g = run("gallery" + store + " --state IDENTIFIED --format json");
  ASSERT_EQ(g.exit_code, 0);
  EXPECT_EQ(Json::parse(g.out)["count"], 2);
  const Outcome human = run("gallery" + store);
  EXPECT_NE(human.out.find("IDENTIFIED"), std::string::npos);

  EXPECT_EQ(serve.stop(), 0);
  EXPECT_EQ(run("identify --server " + url + " --image " + some_image().string() + " --timeout-ms 1000").exit_code, 1);
}

TEST_F(CliTest, ServeRefusesMissingModel) {
  ServeProcess serve({"--model", p("none.xylm"), "--store", p("server"), "--listen", "127.0.0.1:0"});
  serve.line();
  EXPECT_EQ(serve.stop(), 1);
}

}  // namespace
