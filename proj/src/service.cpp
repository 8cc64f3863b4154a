#include "stance/service.hpp"

#include <charconv>
#include <fstream>
#include <iostream>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace stance {

using ordered_json = nlohmann::ordered_json;

struct AnnotationService::Snapshot {
  std::int64_t revision = 0;
  // message id -> (stance, revision at which it was last written)
  std::map<std::string, std::pair<Stance, std::int64_t>> annotations;
  std::optional<RumourPrediction> prediction;
  std::optional<MetricSet> metrics;
  std::size_t evaluated = 0;
};

struct AnnotationService::RumourState {
  Rumour rumour;
  PreparedRumour prepared;
  std::unordered_map<std::string, std::size_t> message_index;
  std::filesystem::path log_path;

  std::mutex write_mutex;  // serializes annotations, guards cache
  AffinityCache cache;

  mutable std::mutex snapshot_mutex;
  std::deque<std::shared_ptr<const Snapshot>> history;
  std::shared_ptr<const Snapshot> current;

  std::shared_ptr<const Snapshot> latest() const {
    std::lock_guard<std::mutex> lock(snapshot_mutex);
    return current;
  }
};

namespace {

ServiceResponse reply(int status, const ordered_json& body) {
  return {status, body.dump()};
}

ServiceResponse error_reply(int status, const std::string& message) {
  ordered_json j;
  j["error"] = message;
  return reply(status, j);
}

std::optional<std::int64_t> parse_integer(const std::string& text) {
  std::int64_t v = 0;
  const char* end = text.data() + text.size();
  auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) return std::nullopt;
  return v;
}

// Percent-encodes everything outside [A-Za-z0-9._-] so that any rumour id
// maps to a distinct file name.
std::string log_file_name(const std::string& rumour_id) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : rumour_id) {
    if (std::isalnum(c) || c == '.' || c == '_' || c == '-') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 15]);
    }
  }
  if (out.empty() || out == "." || out == "..") out = "%" + out;
  return out + ".annotations.jsonl";
}

std::optional<Stance> stance_from_json(const nlohmann::json& v) {
  if (v.is_number_integer()) return stance_from_int(v.get<long long>());
  if (v.is_string()) return parse_stance(v.get<std::string>());
  return std::nullopt;
}

ordered_json metrics_json(const std::optional<MetricSet>& m) {
  if (!m) return nullptr;
  ordered_json j;
  j["accuracy"] = m->accuracy;
  j["weighted_accuracy"] = m->weighted_accuracy;
  j["f1_macro"] = m->f1_macro;
  j["log_loss"] = m->log_loss;
  return j;
}

}  // namespace

// ---------------------------------------------------------------------------

AnnotationService::AnnotationService(std::vector<Rumour> rumours,
                                     FeatureResources resources, ServiceConfig config)
    : resources_(resources), config_(std::move(config)) {
  config_.classifier.validate();
  if (config_.snapshot_history < 1) throw ParameterError("snapshot history must be >= 1");
  if (!config_.state_dir.empty()) std::filesystem::create_directories(config_.state_dir);

  for (auto& r : rumours) {
    if (index_.count(r.rumour_id))
      throw DataError("duplicate rumour id " + r.rumour_id);
    auto state = std::make_unique<RumourState>();
    state->rumour = std::move(r);
    state->rumour.sort_messages();
    for (std::size_t i = 0; i < state->rumour.messages.size(); ++i)
      state->message_index.emplace(state->rumour.messages[i].id, i);
    state->prepared = prepare_rumour(state->rumour, config_.classifier.space, resources_);
    if (!config_.state_dir.empty())
      state->log_path = config_.state_dir / log_file_name(state->rumour.rumour_id);

    auto empty = std::make_shared<Snapshot>();
    state->current = empty;
    state->history.push_back(empty);
    replay_log(*state);

    index_.emplace(state->rumour.rumour_id, states_.size());
    states_.push_back(std::move(state));
  }
}

AnnotationService::~AnnotationService() = default;

AnnotationService::RumourState* AnnotationService::find(const std::string& rumour_id) const {
  auto it = index_.find(rumour_id);
  return it == index_.end() ? nullptr : states_[it->second].get();
}

std::optional<std::int64_t> AnnotationService::current_revision(
    const std::string& rumour_id) const {
  const RumourState* s = find(rumour_id);
  if (!s) return std::nullopt;
  return s->latest()->revision;
}

std::shared_ptr<const AnnotationService::Snapshot> AnnotationService::build_snapshot(
    RumourState& state, std::int64_t revision,
    std::map<std::string, std::pair<Stance, std::int64_t>> annotations) const {
  auto snap = std::make_shared<Snapshot>();
  snap->revision = revision;
  snap->annotations = std::move(annotations);
  if (snap->annotations.empty()) return snap;

  std::vector<std::pair<std::size_t, Stance>> seeds;
  for (const auto& [id, entry] : snap->annotations)
    seeds.emplace_back(state.message_index.at(id), entry.first);
  std::sort(seeds.begin(), seeds.end());
  snap->prediction = classify_prepared(state.prepared, seeds, config_.classifier, &state.cache);

  std::vector<Stance> truth;
  std::vector<Stance> pred;
  std::vector<std::size_t> rows;
  for (std::size_t m : state.prepared.plan.participants) {
    const Message& msg = state.rumour.messages[m];
    if (!msg.gold_stance || snap->annotations.count(msg.id)) continue;
    truth.push_back(*msg.gold_stance);
    pred.push_back(*snap->prediction->stance[m]);
    rows.push_back(m);
  }
  if (!truth.empty()) {
    LabelMatrix probs(static_cast<Index>(rows.size()), kNumClasses);
    for (std::size_t i = 0; i < rows.size(); ++i)
      probs.row(static_cast<Index>(i)) =
          snap->prediction->probs.row(static_cast<Index>(rows[i]));
    snap->metrics = compute_metrics(truth, pred, probs);
    snap->evaluated = truth.size();
  }
  return snap;
}

void AnnotationService::publish(RumourState& state,
                                std::shared_ptr<const Snapshot> snap) const {
  std::lock_guard<std::mutex> lock(state.snapshot_mutex);
  state.current = snap;
  state.history.push_back(std::move(snap));
  while (state.history.size() > config_.snapshot_history) state.history.pop_front();
}

void AnnotationService::replay_log(RumourState& state) {
  if (state.log_path.empty() || !std::filesystem::exists(state.log_path)) return;
  std::ifstream in(state.log_path);
  std::map<std::string, std::pair<Stance, std::int64_t>> annotations;
  std::int64_t revision = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = state.log_path.string() + ":" + std::to_string(line_no);
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("stance") ||
        !j.contains("revision") || !j["revision"].is_number_integer()) {
      std::cerr << "warning: " << where << ": unreadable annotation log entry skipped\n";
      continue;
    }
    const auto stance = stance_from_json(j["stance"]);
    const std::string id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
    auto msg = state.message_index.find(id);
    if (!stance || msg == state.message_index.end() ||
        state.prepared.row_of_message[msg->second] < 0) {
      std::cerr << "warning: " << where << ": annotation for unknown message or class skipped\n";
      continue;
    }
    const std::int64_t rev = j["revision"].get<std::int64_t>();
    revision = std::max(revision, rev);
    annotations[id] = {*stance, rev};
  }
  if (revision == 0) return;
  publish(state, build_snapshot(state, revision, std::move(annotations)));
  std::cerr << "restored " << state.latest()->annotations.size() << " annotations for rumour "
            << state.rumour.rumour_id << " at revision " << revision << "\n";
}

// ---------------------------------------------------------------------------

namespace {

ordered_json summary_json(const Rumour& rumour, const std::optional<RumourPrediction>& pred,
                          const std::optional<MetricSet>& metrics, std::size_t evaluated) {
  std::size_t counts[kNumClasses] = {0, 0, 0};
  std::size_t unassigned = 0;
  for (std::size_t m = 0; m < rumour.messages.size(); ++m) {
    if (pred && pred->stance[m]) {
      ++counts[column_of(*pred->stance[m])];
    } else {
      ++unassigned;
    }
  }
  ordered_json j;
  ordered_json c;
  for (Stance s : kAllStances) c[std::string(to_string(s))] = counts[column_of(s)];
  c["unassigned"] = unassigned;
  j["class_counts"] = c;
  j["metrics"] = metrics_json(metrics);
  j["evaluated"] = evaluated;
  if (pred) {
    j["iterations"] = pred->iterations;
    j["converged"] = pred->converged;
    if (pred->sigma_used > 0.0) j["sigma_used"] = pred->sigma_used;
    j["warning"] = pred->warning ? ordered_json(*pred->warning) : ordered_json(nullptr);
  }
  return j;
}

}  // namespace

ServiceResponse AnnotationService::list_rumours() const {
  ordered_json list = ordered_json::array();
  for (const auto& s : states_) {
    const auto snap = s->latest();
    ordered_json e;
    e["id"] = s->rumour.rumour_id;
    e["claim"] = s->rumour.claim;
    e["message_count"] = s->rumour.messages.size();
    e["annotated_count"] = snap->annotations.size();
    e["revision"] = snap->revision;
    list.push_back(std::move(e));
  }
  ordered_json j;
  j["rumours"] = std::move(list);
  return reply(200, j);
}

ServiceResponse AnnotationService::get_messages(const std::string& rumour_id,
                                                const std::optional<std::string>& cursor,
                                                const std::optional<std::string>& limit) const {
  const RumourState* state = find(rumour_id);
  if (!state) return error_reply(404, "unknown rumour '" + rumour_id + "'");
  std::int64_t offset = 0;
  std::int64_t count = static_cast<std::int64_t>(config_.default_page_size);
  if (cursor) {
    auto v = parse_integer(*cursor);
    if (!v || *v < 0) return error_reply(400, "cursor must be a non-negative integer");
    offset = *v;
  }
  if (limit) {
    auto v = parse_integer(*limit);
    if (!v || *v < 1) return error_reply(400, "limit must be a positive integer");
    count = std::min<std::int64_t>(*v, static_cast<std::int64_t>(config_.max_page_size));
  }

  const auto snap = state->latest();
  const auto& msgs = state->rumour.messages;
  const auto total = static_cast<std::int64_t>(msgs.size());
  const std::int64_t begin = std::min(offset, total);
  const std::int64_t end = std::min(begin + count, total);

  ordered_json page = ordered_json::array();
  for (std::int64_t i = begin; i < end; ++i) {
    const auto m = static_cast<std::size_t>(i);
    const Message& msg = msgs[m];
    ordered_json e;
    e["id"] = msg.id;
    e["timestamp"] = format_iso8601(msg.timestamp);
    e["text"] = msg.text;
    e["is_retweet"] = msg.is_retweet;
    e["retweet_of"] = msg.retweet_of ? ordered_json(*msg.retweet_of) : ordered_json(nullptr);
    e["language"] = msg.language;
    e["thread_id"] = msg.thread_id ? ordered_json(*msg.thread_id) : ordered_json(nullptr);
    auto ann = snap->annotations.find(msg.id);
    e["annotation"] = ann == snap->annotations.end() ? ordered_json(nullptr)
                                                     : ordered_json(value_of(ann->second.first));
    e["seed"] = ann != snap->annotations.end();
    e["annotatable"] = state->prepared.row_of_message[m] >= 0;
    if (snap->prediction && snap->prediction->stance[m]) {
      const auto row = snap->prediction->probs.row(static_cast<Index>(m));
      e["stance"] = value_of(*snap->prediction->stance[m]);
      e["probs"] = {row[0], row[1], row[2]};
      e["inherited"] = static_cast<bool>(snap->prediction->inherited[m]);
    } else {
      e["stance"] = nullptr;
      e["probs"] = nullptr;
      e["inherited"] = false;
    }
    page.push_back(std::move(e));
  }

  ordered_json j;
  j["rumour_id"] = rumour_id;
  j["revision"] = snap->revision;
  j["total"] = total;
  j["cursor"] = begin;
  j["next_cursor"] = end < total ? ordered_json(end) : ordered_json(nullptr);
  j["messages"] = std::move(page);
  return reply(200, j);
}

ServiceResponse AnnotationService::post_annotation(const std::string& rumour_id,
                                                   const std::string& body) {
  RumourState* state = find(rumour_id);
  if (!state) return error_reply(404, "unknown rumour '" + rumour_id + "'");

  nlohmann::json req = nlohmann::json::parse(body, nullptr, false);
  if (req.is_discarded() || !req.is_object())
    return error_reply(400, "request body must be a JSON object");
  if (!req.contains("id") || !(req["id"].is_string() || req["id"].is_number_integer()))
    return error_reply(400, "field 'id' (message id) is required");
  if (!req.contains("stance")) return error_reply(422, "field 'stance' is required");
  const std::string id = req["id"].is_string() ? req["id"].get<std::string>() : req["id"].dump();
  const auto stance = stance_from_json(req["stance"]);
  if (!stance)
    return error_reply(422, "stance must be -1, 0, 1 or against, neutral, supporting");
  std::optional<std::int64_t> expected;
  if (req.contains("expected_revision") && !req["expected_revision"].is_null()) {
    if (!req["expected_revision"].is_number_integer())
      return error_reply(400, "expected_revision must be an integer");
    expected = req["expected_revision"].get<std::int64_t>();
  }

  auto msg_it = state->message_index.find(id);
  if (msg_it == state->message_index.end())
    return error_reply(404, "unknown message '" + id + "' in rumour '" + rumour_id + "'");
  if (state->prepared.row_of_message[msg_it->second] < 0)
    return error_reply(422, "message '" + id +
                                "' is not classified directly (linked retweet or non-English)");

  std::lock_guard<std::mutex> write_lock(state->write_mutex);
  const auto current = state->latest();
  auto ann_it = current->annotations.find(id);
  if (expected) {
    const bool ahead = *expected > current->revision;
    const bool overwritten = ann_it != current->annotations.end() &&
                             ann_it->second.second > *expected &&
                             ann_it->second.first != *stance;
    if (ahead || overwritten) {
      ordered_json j;
      j["error"] = ahead ? "expected_revision is newer than the current revision"
                         : "message was annotated differently after expected_revision";
      j["current_revision"] = current->revision;
      j["current_stance"] = ann_it == current->annotations.end()
                                ? ordered_json(nullptr)
                                : ordered_json(value_of(ann_it->second.first));
      j["retry"] = "refetch, then resend with expected_revision = current_revision";
      return reply(409, j);
    }
  }

  const std::int64_t revision = current->revision + 1;
  auto annotations = current->annotations;
  annotations[id] = {*stance, revision};
  std::shared_ptr<const Snapshot> snap;
  try {
    snap = build_snapshot(*state, revision, std::move(annotations));
  } catch (const ParameterError& e) {
    return error_reply(422, e.what());
  } catch (const Error& e) {
    return error_reply(500, e.what());
  }

  if (!state->log_path.empty()) {
    std::ofstream log(state->log_path, std::ios::app);
    ordered_json entry;
    entry["revision"] = revision;
    entry["id"] = id;
    entry["stance"] = value_of(*stance);
    log << entry.dump() << "\n";
    log.flush();
    if (!log) return error_reply(500, "cannot append to " + state->log_path.string());
  }
  publish(*state, snap);

  ordered_json j;
  j["rumour_id"] = rumour_id;
  j["revision"] = revision;
  j["annotated_count"] = snap->annotations.size();
  j["summary"] = summary_json(state->rumour, snap->prediction, snap->metrics, snap->evaluated);
  return reply(200, j);
}

ServiceResponse AnnotationService::get_result(const std::string& rumour_id,
                                              const std::optional<std::string>& revision) const {
  const RumourState* state = find(rumour_id);
  if (!state) return error_reply(404, "unknown rumour '" + rumour_id + "'");
  std::shared_ptr<const Snapshot> snap;
  if (revision) {
    auto v = parse_integer(*revision);
    if (!v) return error_reply(400, "revision must be an integer");
    std::lock_guard<std::mutex> lock(state->snapshot_mutex);
    for (const auto& s : state->history) {
      if (s->revision == *v) snap = s;
    }
    if (!snap)
      return error_reply(404, "revision " + *revision + " is unknown or no longer retained");
  } else {
    snap = state->latest();
  }

  ordered_json j;
  j["rumour_id"] = rumour_id;
  j["revision"] = snap->revision;
  j["message_count"] = state->rumour.messages.size();
  j["annotated_count"] = snap->annotations.size();
  j["assignments"] = snap->prediction ? prediction_json(state->rumour, *snap->prediction)
                                      : ordered_json::array();
  ordered_json summary =
      summary_json(state->rumour, snap->prediction, snap->metrics, snap->evaluated);
  for (auto& [key, value] : summary.items()) j[key] = value;
  return reply(200, j);
}

// ---------------------------------------------------------------------------

struct HttpFrontend::Impl {
  AnnotationService& service;
  httplib::Server server;

  explicit Impl(AnnotationService& s) : service(s) {}
};

namespace {

std::optional<std::string> query(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return std::nullopt;
  return req.get_param_value(key);
}

void send(httplib::Response& res, const ServiceResponse& r) {
  res.status = r.status;
  res.set_content(r.body, "application/json");
}

}  // namespace

HttpFrontend::HttpFrontend(AnnotationService& service)
    : impl_(std::make_unique<Impl>(service)) {
  auto& srv = impl_->server;
  auto& svc = impl_->service;
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});
  srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.status = 204;
  });
  srv.Get("/rumours", [&svc](const httplib::Request&, httplib::Response& res) {
    send(res, svc.list_rumours());
  });
  srv.Get(R"(/rumours/([^/]+)/messages)",
          [&svc](const httplib::Request& req, httplib::Response& res) {
            send(res, svc.get_messages(req.matches[1], query(req, "cursor"),
                                       query(req, "limit")));
          });
  srv.Post(R"(/rumours/([^/]+)/annotations)",
           [&svc](const httplib::Request& req, httplib::Response& res) {
             send(res, svc.post_annotation(req.matches[1], req.body));
           });
  srv.Get(R"(/rumours/([^/]+)/result)",
          [&svc](const httplib::Request& req, httplib::Response& res) {
            send(res, svc.get_result(req.matches[1], query(req, "revision")));
          });
  srv.set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
          std::rethrow_exception(ep);
        } catch (const std::exception& e) {
          what = e.what();
        } catch (...) {
        }
        ordered_json j;
        j["error"] = what;
        res.status = 500;
        res.set_content(j.dump(), "application/json");
      });
  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    ordered_json j;
    j["error"] = res.status == 404 ? "no such endpoint" : httplib::status_message(res.status);
    res.set_content(j.dump(), "application/json");
  });
}

HttpFrontend::~HttpFrontend() { stop(); }

int HttpFrontend::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpFrontend::listen_after_bind() { return impl_->server.listen_after_bind(); }

void HttpFrontend::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

bool HttpFrontend::is_running() const { return impl_->server.is_running(); }

}  // namespace stance
