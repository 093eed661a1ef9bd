// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "protoseq/dataset.hpp"
#include "protoseq/model.hpp"

namespace protoseq {

struct HttpRequest {
  std::string method; // GET, POST
  std::string path;   // without query string
  std::map<std::string, std::string> query;
  std::string body;
};

struct HttpResponse {
  int status = 200;
  std::string body; // JSON
};

enum class JobStatus : std::uint8_t { Queued, Running, Done, Failed };
const char *job_status_name(JobStatus s);

struct SteeringJob {
  std::string id;
  JobStatus status = JobStatus::Queued;
  std::size_t epoch = 0;
  std::size_t total_epochs = 0;
  std::string checkpoint; // committed path once done
  std::string error;
};

struct ServiceOptions {
  std::string checkpoint_path; // commits go here; empty keeps changes in memory
  std::string journal_path;    // edit journal; empty disables it
  std::size_t explain_top = 3;
  std::uint64_t finetune_seed = 1;
};

/// Request handling for the /v1 steering API. Readers work on an immutable
/// snapshot of the committed model; edits and fine-tune jobs go through one
/// writer at a time. See docs/api.md for the wire schema.
class SteeringService {
public:
  SteeringService(PrototypeModel model, Dataset train_data, ServiceOptions options = {});
  ~SteeringService();
  SteeringService(const SteeringService &) = delete;
  SteeringService &operator=(const SteeringService &) = delete;

  HttpResponse handle(const HttpRequest &request);

  std::shared_ptr<const PrototypeModel> snapshot() const;
  std::optional<SteeringJob> job(const std::string &id) const;
  /// Blocks until no fine-tune job is queued or running.
  void wait_idle();

private:
  HttpResponse list_prototypes() const;
  HttpResponse prototype_neighbors(const std::string &id, const HttpRequest &req) const;
  HttpResponse predict(const HttpRequest &req) const;
  HttpResponse post_edit(const HttpRequest &req);
  HttpResponse start_finetune(const HttpRequest &req);
  HttpResponse get_job(const std::string &id) const;
  void run_job(std::string id, std::size_t epochs);
  void commit(std::shared_ptr<const PrototypeModel> next);

  Dataset data_;
  ServiceOptions options_;

  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const PrototypeModel> current_;

  std::mutex writer_mutex_; // serializes edits, job launch and commits
  mutable std::mutex jobs_mutex_;
  std::condition_variable jobs_cv_;
  std::map<std::string, SteeringJob> jobs_;
  std::atomic<bool> job_active_{false};
  std::size_t next_job_ = 1;
  std::thread worker_;
};

/// "host:port" from PROTOSEQ_BIND, else 127.0.0.1:8080.
std::pair<std::string, int> bind_address_from_env();
std::pair<std::string, int> parse_bind_address(const std::string &text);

/// Serves `service` over HTTP until the process is stopped. Returns false if
/// the address cannot be bound.
bool serve_http(SteeringService &service, const std::string &host, int port);

} // namespace protoseq
