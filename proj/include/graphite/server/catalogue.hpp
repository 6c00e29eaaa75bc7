#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "../error.hpp"
#include "../layout.hpp"
#include "../sampler.hpp"
#include "fs_util.hpp"

namespace graphite::server {

enum class JobState { Queued, Running, Uploading, Done, Failed };

inline const char* to_string(JobState s) {
  switch (s) {
    case JobState::Queued: return "queued";
    case JobState::Running: return "running";
    case JobState::Uploading: return "uploading";
    case JobState::Done: return "done";
    case JobState::Failed: return "failed";
  }
  return "unknown";
}

inline JobState job_state_from(const std::string& s) {
  for (auto st : {JobState::Queued, JobState::Running, JobState::Uploading, JobState::Done, JobState::Failed}) {
    if (s == to_string(st)) return st;
  }
  throw ValidationError("unknown job state '" + s + "'");
}

inline bool is_terminal(JobState s) { return s == JobState::Done || s == JobState::Failed; }

/// Queued -> Running -> Uploading -> Done, or any non-terminal state -> Failed.
inline bool transition_allowed(JobState from, JobState to) {
  if (is_terminal(from)) return false;
  if (to == JobState::Failed) return true;
  return static_cast<int>(to) == static_cast<int>(from) + 1;
}

struct JobParams {
  LayoutParams layout;
  std::optional<SampleSpec> sample;
  std::uint64_t community_seed{0};

  nlohmann::json to_json() const {
    nlohmann::json j = {{"iterations", layout.max_iterations},
                        {"cooling", layout.cooling_exponent},
                        {"volume_side", layout.volume_side},
                        {"seed", layout.rng_seed},
                        {"community_seed", community_seed}};
    if (layout.initial_temperature) j["initial_temperature"] = *layout.initial_temperature;
    if (sample) {
      j["sample"] = {{"scheme", scheme_name(sample->scheme)},
                     {"p", sample->p},
                     {"fraction", sample->target_fraction},
                     {"seed", sample->rng_seed}};
    }
    return j;
  }

  static JobParams from_json(const nlohmann::json& j) {
    JobParams p;
    p.layout.max_iterations = j.value("iterations", p.layout.max_iterations);
    p.layout.cooling_exponent = j.value("cooling", p.layout.cooling_exponent);
    p.layout.volume_side = j.value("volume_side", p.layout.volume_side);
    p.layout.rng_seed = j.value("seed", p.layout.rng_seed);
    if (j.contains("initial_temperature")) p.layout.initial_temperature = j["initial_temperature"].get<double>();
    p.community_seed = j.value("community_seed", p.community_seed);
    if (j.contains("sample")) {
      const auto& s = j["sample"];
      SampleSpec spec;
      spec.scheme = parse_scheme(s.at("scheme").get<std::string>());
      spec.p = s.value("p", spec.p);
      spec.target_fraction = s.value("fraction", spec.target_fraction);
      spec.rng_seed = s.value("seed", spec.rng_seed);
      p.sample = spec;
    }
    return p;
  }

  void validate() const {
    layout.validate();
    if (sample) sample->validate();
  }
};

inline std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

struct LayoutJob {
  std::string id;
  JobState state{JobState::Queued};
  JobParams params;
  std::int64_t submitted_at{0};
  std::optional<std::int64_t> finished_at;
  std::optional<std::string> result_ref;
  std::optional<std::string> error;

  nlohmann::json to_json() const {
    nlohmann::json j = {{"job_id", id},
                        {"state", to_string(state)},
                        {"params", params.to_json()},
                        {"submitted_at", submitted_at}};
    if (finished_at) j["finished_at"] = *finished_at;
    if (result_ref) j["result_ref"] = *result_ref;
    if (error) j["error"] = *error;
    return j;
  }

  static LayoutJob from_json(const nlohmann::json& j) {
    LayoutJob job;
    job.id = j.at("job_id").get<std::string>();
    job.state = job_state_from(j.at("state").get<std::string>());
    job.params = JobParams::from_json(j.at("params"));
    job.submitted_at = j.at("submitted_at").get<std::int64_t>();
    if (j.contains("finished_at")) job.finished_at = j["finished_at"].get<std::int64_t>();
    if (j.contains("result_ref")) job.result_ref = j["result_ref"].get<std::string>();
    if (j.contains("error")) job.error = j["error"].get<std::string>();
    return job;
  }
};

/// Durable job records, one JSON file per job, each replaced atomically.
/// Several processes may share a directory as long as each job has a single
/// writer at a time (the server before fork and after reaping, the worker
/// in between).
class JobCatalogue {
 public:
  explicit JobCatalogue(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void create(const LayoutJob& job) {
    std::lock_guard lock(mu_);
    if (fs::exists(path_for(job.id))) throw ValidationError("job id '" + job.id + "' already used");
    write_file_atomic(path_for(job.id), job.to_json().dump());
  }

  std::optional<LayoutJob> find(const std::string& id) const {
    std::lock_guard lock(mu_);
    return load(id);
  }

  bool contains(const std::string& id) const { return find(id).has_value(); }

  /// Moves a job to `to`, applying `edit` to the record first. Throws
  /// Conflict if the persisted state does not allow the transition.
  LayoutJob transition(const std::string& id, JobState to, const std::function<void(LayoutJob&)>& edit = {}) {
    std::lock_guard lock(mu_);
    auto job = load(id);
    if (!job) throw NotFound("unknown job '" + id + "'");
    if (!transition_allowed(job->state, to)) {
      throw Conflict(std::string("job cannot move from ") + to_string(job->state) + " to " + to_string(to),
                     to_string(job->state));
    }
    job->state = to;
    if (edit) edit(*job);
    write_file_atomic(path_for(id), job->to_json().dump());
    return *job;
  }

  std::vector<LayoutJob> list() const {
    std::lock_guard lock(mu_);
    std::vector<LayoutJob> out;
    for (const auto& entry : fs::directory_iterator(dir_)) {
      const auto name = entry.path().filename().string();
      if (name.starts_with(".") || entry.path().extension() != ".json") continue;
      if (auto job = load(entry.path().stem().string())) out.push_back(std::move(*job));
    }
    std::sort(out.begin(), out.end(), [](const LayoutJob& a, const LayoutJob& b) {
      return a.submitted_at < b.submitted_at || (a.submitted_at == b.submitted_at && a.id < b.id);
    });
    return out;
  }

 private:
  static bool valid_id(const std::string& id) {
    if (id.empty() || id.size() > 64) return false;
    for (char c : id) {
      if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-')) return false;
    }
    return true;
  }

  fs::path path_for(const std::string& id) const {
    if (!valid_id(id)) throw NotFound("invalid job id '" + id + "'");
    return dir_ / (id + ".json");
  }

  std::optional<LayoutJob> load(const std::string& id) const {
    if (!valid_id(id)) return std::nullopt;
    auto text = read_file(path_for(id));
    if (!text) return std::nullopt;
    return LayoutJob::from_json(nlohmann::json::parse(*text));
  }

  fs::path dir_;
  mutable std::mutex mu_;
};

}  // namespace graphite::server
