#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "rtamp/sim/session.hpp"

namespace rtamp::service {

enum class Status { Idle, Running, Paused, Done, Failed };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Idle: return "idle";
    case Status::Running: return "running";
    case Status::Paused: return "paused";
    case Status::Done: return "done";
    default: return "failed";
  }
}

/// Conflicting lifecycle command; mapped to HTTP 409.
class Conflict : public Error {
public:
  using Error::Error;
};

/// One session driven by its own loop thread. All access to the session goes through `mu`.
class LiveSession {
public:
  using Clock = std::chrono::steady_clock;

  LiveSession(std::string id, std::unique_ptr<sim::Session> session)
      : id_(std::move(id)), owned_(std::move(session)), session_(*owned_) {
    touch();
  }

  ~LiveSession() {
    {
      std::lock_guard lock(mu_);
      shutdown_ = true;
    }
    cv_.notify_all();
    if (runner_.joinable()) runner_.join();
  }

  const std::string& id() const noexcept { return id_; }

  void start() {
    std::lock_guard lock(mu_);
    touch();
    if (status_ != Status::Idle) throw Conflict(std::string("cannot start a session that is ") + to_string(status_));
    status_ = Status::Running;
    runner_ = std::thread([this] { loop(); });
  }

  void pause() { transition(Status::Running, Status::Paused, "pause"); }
  void resume() { transition(Status::Paused, Status::Running, "resume"); }

  void set_speed(double speed) {
    if (!(speed > 0) || speed > 10000) throw ValidationError({"speed: must be in (0, 10000]"});
    std::lock_guard lock(mu_);
    touch();
    if (status_ == Status::Done || status_ == Status::Failed) throw Conflict("session has ended");
    speed_ = speed;
    cv_.notify_all();
  }

  /// Checks the event against the current world and queues it for the next tick boundary.
  /// Returns the simulated time at which it applies.
  double intervene(sim::InterventionEvent e) {
    std::lock_guard lock(mu_);
    touch();
    if (status_ != Status::Running && status_ != Status::Paused)
      throw Conflict(std::string("interventions need a running or paused session, not ") + to_string(status_));
    sim::SimWorld probe = session_.world();
    probe.inject(e);  // throws UnresolvableEvent / HeldObjectConflict
    e.time = session_.clock();
    session_.schedule(e);
    return e.time;
  }

  nlohmann::json handle() const {
    std::lock_guard lock(mu_);
    return handle_locked();
  }

  nlohmann::json snapshot() const {
    std::lock_guard lock(mu_);
    return snapshot_locked();
  }

  std::string trace_jsonl() const {
    std::lock_guard lock(mu_);
    return session_.trace_jsonl();
  }

  std::string bt_dot() const {
    std::lock_guard lock(mu_);
    return session_.tree().to_dot();
  }

  nlohmann::json bt_json() const {
    std::lock_guard lock(mu_);
    return session_.tree().to_json();
  }

  std::optional<std::string> pa_dot() const {
    std::lock_guard lock(mu_);
    if (auto g = session_.planner().last_graph()) return g->to_dot();
    return std::nullopt;
  }

  nlohmann::json plan_json() const {
    std::lock_guard lock(mu_);
    if (const auto& p = session_.current_plan()) return plan_to_json(*p);
    return {{"schema", "v1"}, {"cost", nullptr}, {"steps", nlohmann::json::array()}};
  }

  /// Waits until there are events past `after`, the session ends, or the timeout elapses.
  /// Returns the new events and whether the stream is complete.
  std::pair<std::vector<nlohmann::json>, bool> wait_events(std::size_t after, std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return session_.trace().size() > after || ended() || shutdown_; });
    std::vector<nlohmann::json> out;
    const auto& tr = session_.trace();
    for (std::size_t i = after; i < tr.size(); ++i) out.push_back(tr[i]);
    return {std::move(out), ended() || shutdown_};
  }

  bool idle_for(std::chrono::seconds ttl) const {
    std::lock_guard lock(mu_);
    return status_ != Status::Running && Clock::now() - last_activity_ > ttl;
  }

  Status status() const {
    std::lock_guard lock(mu_);
    return status_;
  }

private:
  bool ended() const { return status_ == Status::Done || status_ == Status::Failed; }
  void touch() { last_activity_ = Clock::now(); }

  void transition(Status from, Status to, const char* verb) {
    std::lock_guard lock(mu_);
    touch();
    if (status_ != from) throw Conflict(std::string("cannot ") + verb + " a session that is " + to_string(status_));
    status_ = to;
    cv_.notify_all();
  }

  nlohmann::json handle_locked() const {
    return {{"schema", "v1"},
            {"id", id_},
            {"status", to_string(status_)},
            {"speed", speed_},
            {"t", session_.clock()},
            {"scenario", session_.scenario().name},
            {"events", session_.trace().size()},
            {"metrics", session_.metrics().to_json()}};
  }

  nlohmann::json snapshot_locked() const {
    const auto& w = session_.world();
    const auto& g = w.geometry();
    nlohmann::json objects = nlohmann::json::object(), regions = nlohmann::json::object(),
                   trays = nlohmann::json::object();
    for (const auto& [o, p] : g.objects) objects[o] = {p.x, p.y, p.z};
    for (const auto& [id, r] : g.regions) regions[id] = {{"center", {r.center.x, r.center.y, r.center.z}}, {"radius", r.radius}};
    for (const auto& [id, t] : g.trays) {
      nlohmann::json docks = nlohmann::json::object();
      for (const auto& [d, p] : t.docks) docks[d] = {p.x, p.y, p.z};
      trays[id] = {{"dock", t.dock}, {"docks", docks}, {"radius", t.radius}};
    }
    nlohmann::json world{{"objects", objects}, {"regions", regions}, {"trays", trays}};
    if (const auto& act = w.active())
      world["active"] = {{"action", act->spec.name()}, {"progress", act->progress()}};
    return {{"schema", "v1"}, {"t", session_.clock()}, {"status", to_string(status_)}, {"world", world},
            {"bt", session_.tree().to_json()}};
  }

  void loop() {
    std::unique_lock lock(mu_);
    while (!shutdown_) {
      if (status_ == Status::Paused) {
        cv_.wait(lock, [&] { return shutdown_ || status_ != Status::Paused; });
        continue;
      }
      if (status_ != Status::Running) break;
      const bool more = session_.step();
      cv_.notify_all();
      if (!more) {
        status_ = session_.metrics().success ? Status::Done : Status::Failed;
        touch();
        cv_.notify_all();
        break;
      }
      const auto pause = std::chrono::duration<double>(session_.dt() / speed_);
      cv_.wait_for(lock, pause, [&] { return shutdown_; });
    }
  }

  std::string id_;
  std::unique_ptr<sim::Session> owned_;
  sim::Session& session_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::thread runner_;
  Status status_ = Status::Idle;
  double speed_ = 1.0;
  bool shutdown_ = false;
  Clock::time_point last_activity_;
};

struct ServiceConfig {
  std::chrono::seconds idle_ttl{3600};
  std::chrono::milliseconds stream_poll{250};
  double snapshot_period_s = 0.5;  // simulated seconds between world snapshots on the stream
};

/// In-memory session registry plus the HTTP routes.
class Service {
public:
  explicit Service(ServiceConfig config = {}) : config_(config) { routes(); }

  httplib::Server& http() noexcept { return server_; }

  bool listen(const std::string& host, int port) { return server_.listen(host, port); }
  int bind_any_port(const std::string& host) { return server_.bind_to_any_port(host); }
  bool listen_after_bind() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  bool running() const { return server_.is_running(); }

  std::shared_ptr<LiveSession> create(const nlohmann::json& body) {
    const auto& doc = body.contains("scenario") ? body["scenario"] : body;
    Scenario sc = scenario_from_json(doc);
    sim::SessionConfig cfg;
    std::vector<sim::InterventionEvent> script;
    if (body.contains("config")) {
      const auto& c = body["config"];
      cfg.planner = sim::planner_config(normalize(c.value("planner", "astar_exp")), c.value("graph", "partial"));
      cfg.bt = sim::parse_bt_variant(normalize(c.value("bt", "online_action")));
    } else {
      cfg.planner = sim::planner_config("astar_exp");
    }
    if (body.contains("script")) script = sim::script_from_json(body["script"]);
    std::lock_guard lock(mu_);
    evict_locked();
    const std::string id = "s" + std::to_string(++counter_);
    auto live = std::make_shared<LiveSession>(id, std::make_unique<sim::Session>(std::move(sc), cfg, std::move(script)));
    sessions_[id] = live;
    return live;
  }

  std::shared_ptr<LiveSession> find(const std::string& id) {
    std::lock_guard lock(mu_);
    evict_locked();
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

private:
  static std::string normalize(std::string s) {
    std::replace(s.begin(), s.end(), '-', '_');
    return s;
  }

  void evict_locked() {
    for (auto it = sessions_.begin(); it != sessions_.end();)
      it = it->second->idle_for(config_.idle_ttl) ? sessions_.erase(it) : std::next(it);
  }

  static void send_json(httplib::Response& res, int code, const nlohmann::json& body) {
    res.status = code;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int code, const std::string& kind, const std::string& message,
                         const std::vector<std::string>& problems = {}) {
    nlohmann::json body{{"schema", "v1"}, {"error", kind}, {"message", message}};
    if (!problems.empty()) body["problems"] = problems;
    send_json(res, code, body);
  }

  // Runs a handler, mapping library errors onto status codes.
  template <typename Fn>
  static void guarded(httplib::Response& res, Fn fn) {
    try {
      fn();
    } catch (const ValidationError& e) {
      send_error(res, 422, "validation", e.what(), e.problems());
    } catch (const Conflict& e) {
      send_error(res, 409, "conflict", e.what());
    } catch (const HeldObjectConflict& e) {
      send_error(res, 409, "held_object_conflict", e.what());
    } catch (const UnresolvableEvent& e) {
      send_error(res, 422, "unresolvable_event", e.what());
    } catch (const nlohmann::json::exception& e) {
      send_error(res, 400, "bad_request", e.what());
    } catch (const Error& e) {
      send_error(res, 422, "error", e.what());
    }
  }

  template <typename Fn>
  void with_session(const httplib::Request& req, httplib::Response& res, Fn fn) {
    auto live = find(req.matches[1]);
    if (!live) return send_error(res, 404, "not_found", "no session '" + std::string(req.matches[1]) + "'");
    guarded(res, [&] { fn(*live); });
  }

  void routes() {
    auto& s = server_;
    s.Post("/v1/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        nlohmann::json body;
        try {
          body = nlohmann::json::parse(req.body);
        } catch (const nlohmann::json::parse_error& e) {
          throw ValidationError({std::string("$: ") + e.what()});
        }
        send_json(res, 201, create(body)->handle());
      });
    });
    s.Get("/v1/sessions", [this](const httplib::Request&, httplib::Response& res) {
      nlohmann::json list = nlohmann::json::array();
      std::lock_guard lock(mu_);
      evict_locked();
      for (const auto& [id, live] : sessions_) list.push_back(live->handle());
      send_json(res, 200, {{"schema", "v1"}, {"sessions", list}});
    });
    s.Get(R"(/v1/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      with_session(req, res, [&](LiveSession& l) { send_json(res, 200, l.handle()); });
    });
    s.Delete(R"(/v1/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      std::shared_ptr<LiveSession> victim;
      {
        std::lock_guard lock(mu_);
        auto it = sessions_.find(req.matches[1]);
        if (it == sessions_.end()) return send_error(res, 404, "not_found", "no such session");
        victim = it->second;
        sessions_.erase(it);
      }
      send_json(res, 200, {{"schema", "v1"}, {"deleted", victim->id()}});
    });

    const auto command = [this](const char* path, auto action) {
      server_.Post(path, [this, action](const httplib::Request& req, httplib::Response& res) {
        with_session(req, res, [&](LiveSession& l) {
          action(l, req);
          send_json(res, 200, l.handle());
        });
      });
    };
    command(R"(/v1/sessions/([^/]+)/start)", [](LiveSession& l, const httplib::Request&) { l.start(); });
    command(R"(/v1/sessions/([^/]+)/pause)", [](LiveSession& l, const httplib::Request&) { l.pause(); });
    command(R"(/v1/sessions/([^/]+)/resume)", [](LiveSession& l, const httplib::Request&) { l.resume(); });
    command(R"(/v1/sessions/([^/]+)/speed)", [](LiveSession& l, const httplib::Request& req) {
      const auto body = nlohmann::json::parse(req.body);
      if (!body.contains("speed") || !body["speed"].is_number()) throw ValidationError({"speed: required number"});
      l.set_speed(body["speed"].get<double>());
    });

    s.Post(R"(/v1/sessions/([^/]+)/interventions)", [this](const httplib::Request& req, httplib::Response& res) {
      with_session(req, res, [&](LiveSession& l) {
        auto e = sim::event_from_json(nlohmann::json::parse(req.body));
        const double at = l.intervene(e);
        send_json(res, 202, {{"schema", "v1"}, {"accepted", true}, {"kind", e.kind()}, {"apply_at", at}});
      });
    });

    s.Get(R"(/v1/sessions/([^/]+)/trace)", [this](const httplib::Request& req, httplib::Response& res) {
      with_session(req, res, [&](LiveSession& l) { res.set_content(l.trace_jsonl(), "application/x-ndjson"); });
    });
    s.Get(R"(/v1/sessions/([^/]+)/snapshot)", [this](const httplib::Request& req, httplib::Response& res) {
      with_session(req, res, [&](LiveSession& l) { send_json(res, 200, l.snapshot()); });
    });
    s.Get(R"(/v1/sessions/([^/]+)/plan)", [this](const httplib::Request& req, httplib::Response& res) {
      with_session(req, res, [&](LiveSession& l) { send_json(res, 200, l.plan_json()); });
    });
    s.Get(R"(/v1/sessions/([^/]+)/bt)", [this](const httplib::Request& req, httplib::Response& res) {
      with_session(req, res, [&](LiveSession& l) { send_json(res, 200, l.bt_json()); });
    });
    s.Get(R"(/v1/sessions/([^/]+)/bt\.dot)", [this](const httplib::Request& req, httplib::Response& res) {
      with_session(req, res, [&](LiveSession& l) { res.set_content(l.bt_dot(), "text/vnd.graphviz"); });
    });
    s.Get(R"(/v1/sessions/([^/]+)/pa\.dot)", [this](const httplib::Request& req, httplib::Response& res) {
      with_session(req, res, [&](LiveSession& l) {
        if (auto dot = l.pa_dot()) res.set_content(*dot, "text/vnd.graphviz");
        else send_error(res, 404, "not_found", "no product graph yet");
      });
    });

    s.Get(R"(/v1/sessions/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
      auto live = find(req.matches[1]);
      if (!live) return send_error(res, 410, "gone", "session not found or evicted");
      std::size_t next = 0;
      const std::string last = req.has_header("Last-Event-ID") ? req.get_header_value("Last-Event-ID")
                                                                 : req.get_param_value("last_event_id");
      if (!last.empty()) {
        try {
          next = static_cast<std::size_t>(std::stoull(last)) + 1;
        } catch (const std::exception&) {
          return send_error(res, 400, "bad_request", "Last-Event-ID must be an integer");
        }
      }
      auto cursor = std::make_shared<std::size_t>(next);
      auto last_snapshot = std::make_shared<double>(-1e9);
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider(
          "text/event-stream",
          [this, live, cursor, last_snapshot](std::size_t, httplib::DataSink& sink) {
            auto [events, complete] = live->wait_events(*cursor, config_.stream_poll);
            std::string chunk;
            for (const auto& e : events) {
              chunk += "id: " + std::to_string(e["seq"].get<std::size_t>()) + "\nevent: " + e["type"].get<std::string>() +
                       "\ndata: " + e.dump() + "\n\n";
              ++*cursor;
            }
            const auto snap = live->snapshot();
            if (snap["t"].get<double>() - *last_snapshot >= config_.snapshot_period_s || complete) {
              *last_snapshot = snap["t"].get<double>();
              chunk += "event: snapshot\ndata: " + snap.dump() + "\n\n";
            }
            if (!chunk.empty() && !sink.write(chunk.data(), chunk.size())) return false;
            if (complete) {
              sink.done();
              return false;
            }
            return true;
          });
    });
  }

  ServiceConfig config_;
  httplib::Server server_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<LiveSession>> sessions_;
  std::uint64_t counter_ = 0;
};

}  // namespace rtamp::service
