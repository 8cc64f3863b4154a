#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "stance/evaluation.hpp"
#include "stance/pipeline.hpp"

namespace stance {

struct ServiceConfig {
  ClassifierConfig classifier;
  // Directory for the per-rumour annotation logs; empty disables persistence.
  std::filesystem::path state_dir;
  std::size_t snapshot_history = 64;
  std::size_t default_page_size = 50;
  std::size_t max_page_size = 500;
};

struct ServiceResponse {
  int status = 200;
  std::string body;  // JSON
};

// Request handling for the annotation workflow, independent of the HTTP
// transport. Every accepted annotation produces a new immutable snapshot.
class AnnotationService {
 public:
  AnnotationService(std::vector<Rumour> rumours, FeatureResources resources,
                    ServiceConfig config);
  ~AnnotationService();
  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  ServiceResponse list_rumours() const;
  ServiceResponse get_messages(const std::string& rumour_id,
                               const std::optional<std::string>& cursor,
                               const std::optional<std::string>& limit) const;
  ServiceResponse post_annotation(const std::string& rumour_id, const std::string& body);
  ServiceResponse get_result(const std::string& rumour_id,
                             const std::optional<std::string>& revision) const;

  std::optional<std::int64_t> current_revision(const std::string& rumour_id) const;
  std::size_t rumour_count() const noexcept { return states_.size(); }

 private:
  struct Snapshot;
  struct RumourState;

  RumourState* find(const std::string& rumour_id) const;
  std::shared_ptr<const Snapshot> build_snapshot(
      RumourState& state, std::int64_t revision,
      std::map<std::string, std::pair<Stance, std::int64_t>> annotations) const;
  void publish(RumourState& state, std::shared_ptr<const Snapshot> snap) const;
  void replay_log(RumourState& state);

  FeatureResources resources_;
  ServiceConfig config_;
  std::vector<std::unique_ptr<RumourState>> states_;
  std::unordered_map<std::string, std::size_t> index_;
};

// HTTP+JSON front end:
//   GET  /rumours
//   GET  /rumours/{id}/messages?cursor=&limit=
//   POST /rumours/{id}/annotations   {"id": ..., "stance": ..., "expected_revision": ...}
//   GET  /rumours/{id}/result?revision=
class HttpFrontend {
 public:
  explicit HttpFrontend(AnnotationService& service);
  ~HttpFrontend();

  // Binds and returns the port; port 0 picks a free one. Returns -1 on failure.
  int bind(const std::string& host, int port);
  // Blocks until stop() is called.
  bool listen_after_bind();
  void stop();
  bool is_running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace stance
