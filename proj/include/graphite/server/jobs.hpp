#pragma once

#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <string_view>
#include <thread>

#include "../community.hpp"
#include "../graph.hpp"
#include "../layout.hpp"
#include "../sampler.hpp"
#include "blob_store.hpp"
#include "catalogue.hpp"

namespace graphite::server {

/// Full layout pipeline on one input document: optional sampling, layout,
/// community detection, annotated serialization. Pure and deterministic.
inline std::string compute_annotated_layout(std::string_view document, const JobParams& params) {
  Graph g = load_graph(document).graph;
  if (params.sample) g = sample(g, *params.sample).graph;
  if (g.empty()) throw ValidationError("graph is empty after sampling");
  const auto positions = run_layout(g, params.layout);
  const auto communities = detect_communities(g, params.community_seed);
  return serialize_annotated(g, positions, communities.partition);
}

inline std::string input_key(const std::string& id) { return "inputs/" + id + ".json"; }
inline std::string result_key(const std::string& id) { return "results/" + id + ".json"; }

/// Worker body: runs in the forked child with its own catalogue and blob
/// handles. Returns the process exit code.
inline int run_worker(const fs::path& data_dir, const std::string& id) {
  JobCatalogue catalogue(data_dir / "jobs");
  DirectoryBlobStore blobs(data_dir / "blobs");
  try {
    catalogue.transition(id, JobState::Running);
    const auto job = catalogue.find(id);
    const auto input = blobs.get(input_key(id));
    if (!job || !input) throw Error("job input missing");
    const std::string result = compute_annotated_layout(*input, job->params);
    catalogue.transition(id, JobState::Uploading);
    blobs.put(result_key(id), result);
    catalogue.transition(id, JobState::Done, [&](LayoutJob& j) {
      j.result_ref = result_key(id);
      j.finished_at = now_ms();
    });
    return 0;
  } catch (const std::exception& e) {
    try {
      catalogue.transition(id, JobState::Failed, [&](LayoutJob& j) {
        j.error = e.what();
        j.finished_at = now_ms();
      });
    } catch (...) {
    }
    return 1;
  }
}

/// Accepts layout jobs, forks one worker process per job and tracks them
/// through the durable catalogue.
class JobManager {
 public:
  explicit JobManager(fs::path data_dir)
      : data_dir_(std::move(data_dir)), catalogue_(data_dir_ / "jobs"), blobs_(data_dir_ / "blobs") {
    recover();
    reaper_ = std::thread([this] { reap_loop(); });
  }

  JobManager(const JobManager&) = delete;
  JobManager& operator=(const JobManager&) = delete;

  /// Kills any worker still running; those jobs end up Failed.
  ~JobManager() {
    {
      std::lock_guard lock(mu_);
      stopping_ = true;
      for (const auto& [pid, id] : workers_) ::kill(pid, SIGKILL);
    }
    cv_.notify_all();
    reaper_.join();
    for (const auto& [pid, id] : workers_) {
      int status = 0;
      ::waitpid(pid, &status, 0);
      settle(id, status);
    }
  }

  /// Validates the document synchronously, persists the job as Queued and
  /// forks its worker.
  std::string submit(std::string_view document, const JobParams& params) {
    params.validate();
    load_graph(document);  // throws ParseError / ValidationError: no job is created

    std::string id;
    do {
      id = random_id();
    } while (catalogue_.contains(id));

    blobs_.put(input_key(id), document);
    LayoutJob job;
    job.id = id;
    job.params = params;
    job.submitted_at = now_ms();
    catalogue_.create(job);

    std::lock_guard lock(mu_);
    std::fflush(nullptr);
    const pid_t pid = ::fork();
    if (pid < 0) {
      catalogue_.transition(id, JobState::Failed, [](LayoutJob& j) { j.error = "fork failed"; });
      return id;
    }
    if (pid == 0) ::_exit(run_worker(data_dir_, id));
    workers_.emplace(pid, id);
    return id;
  }

  LayoutJob status(const std::string& id) const {
    auto job = catalogue_.find(id);
    if (!job) throw NotFound("unknown job '" + id + "'");
    return *job;
  }

  /// The stored annotated document; Conflict unless the job is Done.
  std::string fetch_result(const std::string& id) const {
    const LayoutJob job = status(id);
    if (job.state != JobState::Done || !job.result_ref) {
      throw Conflict("job '" + id + "' is " + to_string(job.state), to_string(job.state));
    }
    auto bytes = blobs_.get(*job.result_ref);
    if (!bytes) throw Error("result blob missing for job '" + id + "'");
    return *bytes;
  }

  /// Blocks until the job is terminal or `timeout` passes.
  bool wait(const std::string& id, std::chrono::milliseconds timeout) const {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      if (is_terminal(status(id).state)) return true;
      if (std::chrono::steady_clock::now() >= deadline) return false;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }

  std::optional<pid_t> worker_pid(const std::string& id) const {
    std::lock_guard lock(mu_);
    for (const auto& [pid, job] : workers_) {
      if (job == id) return pid;
    }
    return std::nullopt;
  }

  std::vector<LayoutJob> list() const { return catalogue_.list(); }
  const fs::path& data_dir() const noexcept { return data_dir_; }

 private:
  static std::string random_id() {
    static thread_local std::mt19937_64 gen{std::random_device{}()};
    static constexpr char kHex[] = "0123456789abcdef";
    std::string id(32, '0');
    for (auto& c : id) c = kHex[gen() & 15];
    return id;
  }

  /// Jobs left non-terminal by a previous server process can never finish.
  void recover() {
    for (const auto& job : catalogue_.list()) {
      if (is_terminal(job.state)) continue;
      try {
        catalogue_.transition(job.id, JobState::Failed, [](LayoutJob& j) {
          j.error = "interrupted: server restarted before the worker finished";
          j.finished_at = now_ms();
        });
      } catch (const Conflict&) {
      }
    }
  }

  void settle(const std::string& id, int status) {
    auto job = catalogue_.find(id);
    if (!job || is_terminal(job->state)) return;
    std::string why = WIFSIGNALED(status) ? "worker killed by signal " + std::to_string(WTERMSIG(status))
                                          : "worker exited with status " + std::to_string(WEXITSTATUS(status));
    try {
      catalogue_.transition(id, JobState::Failed, [&](LayoutJob& j) {
        j.error = why;
        j.finished_at = now_ms();
      });
    } catch (const Conflict&) {
    }
  }

  void reap_loop() {
    std::unique_lock lock(mu_);
    while (!stopping_) {
      for (auto it = workers_.begin(); it != workers_.end();) {
        int status = 0;
        const pid_t r = ::waitpid(it->first, &status, WNOHANG);
        if (r == it->first) {
          settle(it->second, status);
          it = workers_.erase(it);
        } else {
          ++it;
        }
      }
      cv_.wait_for(lock, std::chrono::milliseconds(20));
    }
  }

  fs::path data_dir_;
  JobCatalogue catalogue_;
  DirectoryBlobStore blobs_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<pid_t, std::string> workers_;
  bool stopping_{false};
  std::thread reaper_;
};

}  // namespace graphite::server
