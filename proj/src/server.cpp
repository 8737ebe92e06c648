#include <chrono>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include <httplib.h>

#include "ucert/server.hpp"

namespace ucert {

using nlohmann::json;

namespace {

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

bool truthy(std::string_view v) { return v == "1" || v == "true" || v == "yes" || v == "on"; }

FaultConfig apply_variant(std::string_view variant) {
  auto f = FaultConfig::preset(variant);
  if (!f) throw std::invalid_argument("unknown server variant '" + std::string(variant) + "'");
  return *f;
}

void enable_bug(FaultConfig& f, std::string_view bug) {
  if (!f.enable(bug)) throw std::invalid_argument("unknown bug '" + std::string(bug) + "'");
}

}  // namespace

ServerConfig ServerConfig::from_env(ServerConfig c) {
  if (auto v = env("UCERT_HOST")) c.host = *v;
  if (auto v = env("UCERT_PORT")) c.port = std::stoi(*v);
  if (auto v = env("UCERT_VARIANT")) c.faults = apply_variant(*v);
  if (auto v = env("UCERT_BUGS")) {
    std::string_view rest = *v;
    while (!rest.empty()) {
      auto comma = rest.find(',');
      auto bug = rest.substr(0, comma);
      if (!bug.empty()) enable_bug(c.faults, bug);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
  }
  if (auto v = env("UCERT_ENABLE_RESET")) c.enable_reset = truthy(*v);
  return c;
}

ServerConfig ServerConfig::from_file(const std::string& path, ServerConfig c) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open server config '" + path + "'");
  json j = json::parse(in);
  if (j.contains("host")) c.host = j["host"].get<std::string>();
  if (j.contains("port")) c.port = j["port"].get<int>();
  if (j.contains("variant")) c.faults = apply_variant(j["variant"].get<std::string>());
  if (j.contains("bugs"))
    for (const auto& b : j["bugs"]) enable_bug(c.faults, b.get<std::string>());
  if (j.contains("enable_reset")) c.enable_reset = j["enable_reset"].get<bool>();
  return c;
}

DesServer::DesServer(ServerConfig config)
    : config_(std::move(config)), store_(config_.faults), http_(std::make_unique<httplib::Server>()) {
  auto& svr = *http_;
  svr.set_tcp_nodelay(true);
  svr.set_keep_alive_max_count(1000000);

  auto post = [this, &svr](const char* path, ApiResponse (SessionStore::*op)(const json&),
                           const char* error_label) {
    svr.Post(path, [this, op, error_label](const httplib::Request& req, httplib::Response& res) {
      json body = json::parse(req.body, nullptr, false);
      ApiResponse r;
      if (body.is_discarded() || !body.is_object())
        r = {400, {{"error", "request body must be a JSON object"}, {"response", {error_label}}}};
      else
        r = (store_.*op)(body);
      res.status = r.status;
      res.set_content(r.body.dump(), "application/json");
    });
  };
  post("/create_session", &SessionStore::create_session, "c_e");
  post("/join_session", &SessionStore::join_session, "j_e");
  post("/send_data", &SessionStore::send_data, "s_e");
  post("/receive_data", &SessionStore::receive_data, "r_e");
  post("/end_session", &SessionStore::end_session, "e_e");

  svr.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    ApiResponse r = store_.get_session_status(req.matches[1].str());
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  });
  svr.Post("/reset", [this](const httplib::Request&, httplib::Response& res) {
    if (!config_.enable_reset) {
      res.status = 403;
      res.set_content(R"({"error":"reset endpoint disabled","response":["reset_e"]})", "application/json");
      return;
    }
    store_.reset();
    res.set_content(R"({"response":["reset_a"]})", "application/json");
  });
}

DesServer::~DesServer() { stop(); }

void DesServer::bind() {
  if (port_ >= 0) return;
  if (config_.port == 0) {
    port_ = http_->bind_to_any_port(config_.host);
  } else {
    port_ = http_->bind_to_port(config_.host, config_.port) ? config_.port : -1;
  }
  if (port_ < 0)
    throw std::runtime_error("cannot bind " + config_.host + ":" + std::to_string(config_.port));
}

int DesServer::start() {
  bind();
  thread_ = std::thread([this] { http_->listen_after_bind(); });
  auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
  while (!http_->is_running() && std::chrono::steady_clock::now() < deadline)
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  return port_;
}

void DesServer::run() {
  bind();
  http_->listen_after_bind();
}

void DesServer::stop() {
  if (http_) http_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string DesServer::base_url() const {
  return "http://" + config_.host + ":" + std::to_string(port_);
}

}  // namespace ucert
