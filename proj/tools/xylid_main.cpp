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

// xylid: command-line front end.  Talks to the library only through the C
// API in xylid/xylid.h.
//
// Exit codes: 0 success, 1 operational failure, 2 usage error.
// Every flag can also come from XYLID_<FLAG> (upper case, dashes become
// underscores); explicit flags win over the environment.

#include <CLI11.hpp>
#include <json.hpp>

#include <signal.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "xylid/xylid.h"

namespace {

using Json = nlohmann::ordered_json;

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Failure {
  xylid_status status;
  std::string message;
};

struct Output {
  std::string format = "human";
  bool json() const { return format == "json"; }
};

// Owns a string handed out by the C library.
std::string take(char* s) {
  std::string out = s ? s : "";
  xylid_string_free(s);
  return out;
}

void check(xylid_status st) {
  if (st != XYLID_OK) throw Failure{st, xylid_last_error()};
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{XYLID_E_NOT_FOUND, "cannot read " + path};
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string env_name(const std::string& flag) {
  std::string out = "XYLID_";
  for (char c : flag) out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

template <typename T>
CLI::Option* flag(CLI::App* app, const std::string& name, T& value, const std::string& help) {
  return app->add_option("--" + name, value, help)->envname(env_name(name))->capture_default_str();
}

void add_format(CLI::App* app, Output& out) {
  flag(app, "format", out.format, "Output format")->check(CLI::IsMember({"human", "json"}));
}

void print_json(const std::string& body) { std::cout << Json::parse(body).dump() << "\n"; }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string hostname() {
  char buf[256] = {};
  if (::gethostname(buf, sizeof buf - 1) != 0 || !buf[0]) return "field-device";
  return buf;
}

void print_record_row(const Json& r) {
  std::string top;
  if (!r["result"].is_null()) {
    for (const auto& p : r["result"]["predictions"]) {
      if (!top.empty()) top += ", ";
      top += p["trade_name"].get<std::string>() + " " + fmt("%.2f", p["probability"].get<double>());
    }
  } else if (!r["last_error"].is_null()) {
    top = "error: " + r["last_error"].get<std::string>();
  }
  std::printf("%-36s  %-10s  %2d  %-24s  %s\n", r["capture_id"].get<std::string>().c_str(),
              r["state"].get<std::string>().c_str(), r["attempts"].get<int>(),
              r["captured_at"].get<std::string>().c_str(), top.c_str());
}

int serve_until_signal(const std::string& config, const Output& out) {
  // Block the shutdown signals before any server thread exists so that only
  // sigwait() below ever sees them.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  xylid_server* raw = nullptr;
  check(xylid_server_create(config.c_str(), &raw));
  std::unique_ptr<xylid_server, decltype(&xylid_server_free)> server(raw, xylid_server_free);
  check(xylid_server_start(server.get()));
  const Json cfg = Json::parse(config);
  const std::string url =
      "http://" + cfg["host"].get<std::string>() + ":" + std::to_string(xylid_server_port(server.get()));
  if (out.json()) {
    std::cout << Json{{"status", "listening"}, {"url", url}}.dump() << std::endl;
  } else {
    std::cout << "listening on " << url << std::endl;
  }
  int sig = 0;
  sigwait(&set, &sig);
  check(xylid_server_stop(server.get()));
  if (out.json()) {
    std::cout << Json{{"status", "stopped"}, {"signal", sig}}.dump() << std::endl;
  } else {
    std::cout << "stopped" << std::endl;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xylid: macroscopic timber identification toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(xylid_version()));
  Output out;
  std::function<void()> action;

  // synth-dataset
  struct {
    int classes = 60, per_class = 100, sibling_pairs = 0, width = 256, height = 256;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::string dir;
  } sy;
  auto* synth = app.add_subcommand("synth-dataset", "Generate a procedural texture dataset");
  flag(synth, "classes", sy.classes, "Number of classes")->check(CLI::Range(2, 60));
  flag(synth, "per-class", sy.per_class, "Images per class")->check(CLI::PositiveNumber);
  flag(synth, "sibling-pairs", sy.sibling_pairs, "Near-identical class pairs")->check(CLI::NonNegativeNumber);
  flag(synth, "seed", sy.seed, "Dataset seed");
  flag(synth, "width", sy.width, "Image width")->check(CLI::Range(64, 4096));
  flag(synth, "height", sy.height, "Image height")->check(CLI::Range(64, 4096));
  flag(synth, "threads", sy.threads, "Worker threads (0 = all cores)");
  flag(synth, "out", sy.dir, "Output directory")->required();
  add_format(synth, out);
  synth->callback([&] {
    action = [&] {
      const Json opts{{"classes", sy.classes}, {"per_class", sy.per_class}, {"sibling_pairs", sy.sibling_pairs},
                      {"seed", sy.seed},       {"width", sy.width},         {"height", sy.height},
                      {"threads", sy.threads}};
      char* res = nullptr;
      check(xylid_synth_dataset(sy.dir.c_str(), opts.dump().c_str(), &res));
      const std::string body = take(res);
      if (out.json()) return print_json(body);
      const Json j = Json::parse(body);
      std::printf("wrote %zu images of %zu classes to %s (%.1f s)\n", j["images"].get<std::size_t>(),
                  j["classes"].get<std::size_t>(), sy.dir.c_str(), j["seconds"].get<double>());
      for (const auto& p : j["sibling_pairs"]) {
        std::printf("sibling pair: %s / %s (%s)\n", p["a"].get<std::string>().c_str(),
                    p["b"].get<std::string>().c_str(), p["family"].get<std::string>().c_str());
      }
    };
  });

  // train
  struct {
    std::string data, taxonomy, model, version;
    double lr = 0.1, l2 = 1e-4, split = 0.2;
    int epochs = 200, batch = 32;
    std::uint64_t seed = 0, split_seed = 0;
    unsigned threads = 0;
  } tr;
  auto* trn = app.add_subcommand("train", "Train a classifier on a dataset directory");
  flag(trn, "data", tr.data, "Dataset directory")->required();
  flag(trn, "taxonomy", tr.taxonomy, "Taxonomy file (default: <data>/taxonomy.tsv)");
  flag(trn, "out", tr.model, "Model file to write")->required();
  flag(trn, "epochs", tr.epochs, "Training epochs")->check(CLI::NonNegativeNumber);
  flag(trn, "learning-rate", tr.lr, "SGD learning rate")->check(CLI::PositiveNumber);
  flag(trn, "batch-size", tr.batch, "Mini-batch size")->check(CLI::PositiveNumber);
  flag(trn, "l2", tr.l2, "L2 penalty")->check(CLI::NonNegativeNumber);
  flag(trn, "seed", tr.seed, "Training seed");
  flag(trn, "split", tr.split, "Held-out fraction excluded from training")->check(CLI::Range(0.0, 0.99));
  flag(trn, "split-seed", tr.split_seed, "Seed of the held-out split (match evaluate --seed)");
  flag(trn, "version", tr.version, "Model version string (default: content digest)");
  flag(trn, "threads", tr.threads, "Worker threads (0 = all cores)");
  add_format(trn, out);
  trn->callback([&] {
    action = [&] {
      Json opts{{"learning_rate", tr.lr}, {"epochs", tr.epochs}, {"batch_size", tr.batch},
                {"l2", tr.l2},            {"seed", tr.seed},     {"split", tr.split},
                {"split_seed", tr.split_seed}, {"threads", tr.threads}};
      if (!tr.version.empty()) opts["version"] = tr.version;
      if (!tr.taxonomy.empty()) opts["taxonomy"] = tr.taxonomy;
      char* res = nullptr;
      check(xylid_train(tr.data.c_str(), tr.model.c_str(), opts.dump().c_str(), &res));
      const std::string body = take(res);
      const Json j = Json::parse(body);
      for (const auto& w : j["warnings"]) std::cerr << "xylid: warning: " << w.get<std::string>() << "\n";
      if (out.json()) return print_json(body);
      std::printf("model %s -> %s\n", j["model_version"].get<std::string>().c_str(), tr.model.c_str());
      std::printf("classes %zu, training examples %zu (held out %zu)\n", j["classes"].get<std::size_t>(),
                  j["n_train"].get<std::size_t>(), j["n_held_out"].get<std::size_t>());
      std::printf("train loss %.4f, train accuracy %.4f\n", j["train_loss"].get<double>(),
                  j["train_accuracy"].get<double>());
      std::printf("features %.1f s, training %.1f s\n", j["feature_seconds"].get<double>(),
                  j["train_seconds"].get<double>());
    };
  });

  // evaluate
  struct {
    std::string model, data, taxonomy;
    double split = 0.2;
    std::uint64_t seed = 0;
    unsigned threads = 0;
  } ev;
  auto* eva = app.add_subcommand("evaluate", "Score a model on the held-out split of a dataset");
  flag(eva, "model", ev.model, "Model file")->required();
  flag(eva, "data", ev.data, "Dataset directory")->required();
  flag(eva, "taxonomy", ev.taxonomy, "Taxonomy file (default: <data>/taxonomy.tsv)");
  flag(eva, "split", ev.split, "Held-out fraction")
      ->check(CLI::Validator(
          [](std::string& s) { return std::stod(s) > 0 && std::stod(s) < 1 ? "" : "split must lie in (0, 1)"; },
          "(0,1)"));
  flag(eva, "seed", ev.seed, "Split seed");
  flag(eva, "threads", ev.threads, "Worker threads (0 = all cores)");
  add_format(eva, out);
  eva->callback([&] {
    action = [&] {
      Json opts{{"split", ev.split}, {"seed", ev.seed}, {"threads", ev.threads}};
      if (!ev.taxonomy.empty()) opts["taxonomy"] = ev.taxonomy;
      char* res = nullptr;
      char* text = nullptr;
      check(xylid_evaluate(ev.model.c_str(), ev.data.c_str(), opts.dump().c_str(), &res, &text));
      const std::string body = take(res);
      const std::string table = take(text);
      if (out.json()) return print_json(body);
      std::cout << table;
    };
  });

  // serve
  struct {
    std::string model, store = "xylid-store", listen = "127.0.0.1:8080", taxonomy;
    std::size_t k = 2, max_image_bytes = 8u << 20;
  } sv;
  auto* srv = app.add_subcommand("serve", "Run the identification service until SIGINT/SIGTERM");
  flag(srv, "model", sv.model, "Model file (optional; without it the service reports degraded)");
  flag(srv, "store", sv.store, "Result store directory");
  flag(srv, "listen", sv.listen, "host:port (port 0 picks a free port)");
  flag(srv, "k", sv.k, "Predictions per result")->check(CLI::PositiveNumber);
  flag(srv, "max-image-bytes", sv.max_image_bytes, "Upload limit")->check(CLI::Range(std::size_t{64} << 10, std::size_t{1} << 30));
  flag(srv, "taxonomy", sv.taxonomy, "Taxonomy file (default: bundled)");
  add_format(srv, out);
  int serve_exit = 0;
  srv->callback([&] {
    const auto colon = sv.listen.rfind(':');
    if (colon == std::string::npos) throw CLI::ValidationError("--listen", "expected host:port");
    int port = 0;
    try {
      port = std::stoi(sv.listen.substr(colon + 1));
    } catch (const std::exception&) {
      throw CLI::ValidationError("--listen", "port is not a number");
    }
    const Json cfg{{"host", sv.listen.substr(0, colon)}, {"port", port},     {"model_path", sv.model},
                   {"store_dir", sv.store},               {"k", sv.k},        {"max_image_bytes", sv.max_image_bytes},
                   {"taxonomy", sv.taxonomy}};
    action = [&, cfg] { serve_exit = serve_until_signal(cfg.dump(), out); };
  });

  // capture
  struct {
    std::string store = "xylid-field", image, device = hostname();
    double magnification = 0;
  } ca;
  auto* cap = app.add_subcommand("capture", "Record an image into the offline queue");
  flag(cap, "store", ca.store, "Field store directory");
  flag(cap, "image", ca.image, "PNG or JPEG file")->required();
  flag(cap, "device-id", ca.device, "Device identifier");
  flag(cap, "magnification", ca.magnification, "Lens magnification (0 = unknown)")->check(CLI::NonNegativeNumber);
  add_format(cap, out);

  // sync
  struct {
    std::string store = "xylid-field", server = "http://127.0.0.1:8080";
    int max_attempts = 8, base = 500, cap = 30000, timeout = 10000;
    double jitter = 0.2;
    std::optional<std::uint64_t> seed;
  } sn;
  auto* syn = app.add_subcommand("sync", "Upload queued captures to the service");
  flag(syn, "store", sn.store, "Field store directory");
  flag(syn, "server", sn.server, "Service base URL");
  flag(syn, "max-attempts", sn.max_attempts, "Attempts per capture (0 = unbounded)")->check(CLI::NonNegativeNumber);
  flag(syn, "backoff-base-ms", sn.base, "First retry delay")->check(CLI::NonNegativeNumber);
  flag(syn, "backoff-cap-ms", sn.cap, "Largest retry delay")->check(CLI::NonNegativeNumber);
  flag(syn, "jitter", sn.jitter, "Relative jitter in [0, 1)")->check(CLI::Range(0.0, 0.999999));
  flag(syn, "timeout-ms", sn.timeout, "Per-request timeout")->check(CLI::PositiveNumber);
  syn->add_option("--seed", sn.seed, "Jitter seed")->envname("XYLID_SEED");
  add_format(syn, out);

  // gallery
  struct {
    std::string store = "xylid-field", state;
  } ga;
  auto* gal = app.add_subcommand("gallery", "List captures, newest first");
  flag(gal, "store", ga.store, "Field store directory");
  flag(gal, "state", ga.state, "Only show one state")
      ->check(CLI::IsMember({"CAPTURED", "QUEUED", "UPLOADING", "IDENTIFIED", "FAILED"}, CLI::ignore_case));
  add_format(gal, out);

  // info
  struct {
    std::string class_id, taxonomy;
  } in;
  auto* inf = app.add_subcommand("info", "Show wood information (no argument: list all classes)");
  inf->add_option("class_id", in.class_id, "Class id, e.g. merbau");
  flag(inf, "taxonomy", in.taxonomy, "Taxonomy file (default: bundled)");
  add_format(inf, out);

  // identify
  struct {
    std::string server = "http://127.0.0.1:8080", image, device = hostname();
    int timeout = 10000;
  } id;
  auto* idn = app.add_subcommand("identify", "One-shot identification against a running service");
  flag(idn, "server", id.server, "Service base URL");
  flag(idn, "image", id.image, "PNG or JPEG file")->required();
  flag(idn, "device-id", id.device, "Device identifier");
  flag(idn, "timeout-ms", id.timeout, "Request timeout")->check(CLI::PositiveNumber);
  add_format(idn, out);

  const auto open_store = [](const std::string& root) {
    xylid_store* raw = nullptr;
    char* report = nullptr;
    check(xylid_store_open(root.c_str(), &raw, &report));
    const Json r = Json::parse(take(report));
    if (!r["warning"].is_null()) std::cerr << "xylid: warning: " << r["warning"].get<std::string>() << "\n";
    return std::unique_ptr<xylid_store, decltype(&xylid_store_free)>(raw, xylid_store_free);
  };

  cap->callback([&] {
    action = [&] {
      const auto store = open_store(ca.store);
      const auto bytes = read_bytes(ca.image);
      char* res = nullptr;
      check(xylid_store_capture(store.get(), bytes.data(), bytes.size(), ca.device.c_str(), ca.magnification, &res));
      const std::string body = take(res);
      if (out.json()) return print_json(body);
      const Json j = Json::parse(body);
      std::printf("captured %s (%s)\n", j["capture_id"].get<std::string>().c_str(),
                  j["state"].get<std::string>().c_str());
    };
  });
  syn->callback([&] {
    action = [&] {
      const auto store = open_store(sn.store);
      Json cfg{{"server_url", sn.server},     {"max_attempts", sn.max_attempts}, {"backoff_base_ms", sn.base},
               {"backoff_cap_ms", sn.cap},    {"jitter_fraction", sn.jitter},    {"request_timeout_ms", sn.timeout}};
      if (sn.seed) cfg["seed"] = *sn.seed;
      char* res = nullptr;
      check(xylid_store_sync(store.get(), cfg.dump().c_str(), &res));
      const std::string body = take(res);
      if (out.json()) return print_json(body);
      const Json j = Json::parse(body);
      std::printf("identified %zu, failed %zu, remaining %zu (%zu uploads, %.1f s)\n",
                  j["identified"].get<std::size_t>(), j["failed"].get<std::size_t>(),
                  j["remaining"].get<std::size_t>(), j["uploads"].get<std::size_t>(), j["seconds"].get<double>());
    };
  });
  gal->callback([&] {
    action = [&] {
      const auto store = open_store(ga.store);
      std::string state = ga.state;
      for (auto& c : state) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      char* res = nullptr;
      check(xylid_store_gallery(store.get(), state.empty() ? nullptr : state.c_str(), &res));
      const std::string body = take(res);
      if (out.json()) return print_json(body);
      const Json j = Json::parse(body);
      if (j["records"].empty()) {
        std::printf("no captures\n");
        return;
      }
      for (const auto& r : j["records"]) print_record_row(r);
    };
  });
  inf->callback([&] {
    action = [&] {
      const char* tax = in.taxonomy.empty() ? nullptr : in.taxonomy.c_str();
      char* res = nullptr;
      if (in.class_id.empty()) {
        check(xylid_taxonomy_json(tax, &res));
        const std::string body = take(res);
        if (out.json()) return print_json(body);
        const Json j = Json::parse(body);
        std::printf("taxonomy %s, %zu classes\n", j["version"].get<std::string>().c_str(),
                    j["count"].get<std::size_t>());
        for (const auto& c : j["classes"]) {
          std::printf("  %-22s %s\n", c["class_id"].get<std::string>().c_str(),
                      c["trade_name"].get<std::string>().c_str());
        }
        return;
      }
      check(xylid_wood_info_json(tax, in.class_id.c_str(), &res));
      const std::string body = take(res);
      if (out.json()) return print_json(body);
      const Json j = Json::parse(body);
      const auto text = [&](const char* key) { return j[key].is_null() ? std::string("unknown") : j[key].get<std::string>(); };
      std::printf("%s (%s)\n", j["trade_name"].get<std::string>().c_str(), j["class_id"].get<std::string>().c_str());
      std::printf("genus:  %s\nfamily: %s\n", text("genus").c_str(), text("family").c_str());
      if (!j["description"].is_null() && !j["description"].get<std::string>().empty()) {
        std::printf("\n%s\n", j["description"].get<std::string>().c_str());
      }
    };
  });
  idn->callback([&] {
    action = [&] {
      const auto bytes = read_bytes(id.image);
      const auto t0 = std::chrono::steady_clock::now();
      char* res = nullptr;
      check(xylid_identify_remote(id.server.c_str(), bytes.data(), bytes.size(), id.device.c_str(), id.timeout, &res));
      Json j = Json::parse(take(res));
      j["wall_ms"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      if (out.json()) return print_json(j.dump());
      int rank = 0;
      for (const auto& p : j["predictions"]) {
        std::printf("%d. %-24s %.4f\n", ++rank, p["trade_name"].get<std::string>().c_str(),
                    p["probability"].get<double>());
      }
      std::printf("model %s, server %.0f ms, wall time %.0f ms\n", j["model_version"].get<std::string>().c_str(),
                  j["server_latency_ms"].get<double>(), j["wall_ms"].get<double>());
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  try {
    if (action) action();
    return serve_exit;
  } catch (const Failure& f) {
    if (out.json()) {
      std::cout << Json{{"error_code", xylid_status_name(f.status)}, {"message", f.message}}.dump() << "\n";
    }
    std::cerr << "xylid: error: " << f.message << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "xylid: error: " << e.what() << "\n";
    return kExitFailure;
  }
}
