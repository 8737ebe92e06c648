#include <algorithm>
#include <cstdio>
#include <map>
#include <random>

#include "ucert/server.hpp"

namespace ucert {

using nlohmann::json;

std::optional<FaultConfig> FaultConfig::preset(std::string_view name) {
  if (name == "fixed" || name == "custom") return fixed();
  if (name == "new") return all();
  return std::nullopt;
}

bool FaultConfig::enable(std::string_view bug) {
  if (bug.starts_with("bug_")) bug.remove_prefix(4);
  if (bug == kBugNames[0]) bug_join_after_partial_end = true;
  else if (bug == kBugNames[1]) bug_receive_ignores_flag = true;
  else if (bug == kBugNames[2]) bug_create_skips_validation = true;
  else return false;
  return true;
}

std::vector<std::string> FaultConfig::enabled() const {
  std::vector<std::string> out;
  if (bug_join_after_partial_end) out.emplace_back(kBugNames[0]);
  if (bug_receive_ignores_flag) out.emplace_back(kBugNames[1]);
  if (bug_create_skips_validation) out.emplace_back(kBugNames[2]);
  return out;
}

std::string FaultConfig::describe() const {
  if (*this == fixed()) return "fixed";
  if (*this == all()) return "new";
  std::string out = "custom:";
  for (const auto& b : enabled()) out += (out.back() == ':' ? "" : "+") + b;
  return out;
}

std::vector<std::string> ApiResponse::labels() const {
  if (!body.is_object() || !body.contains("response") || !body["response"].is_array()) return {};
  std::vector<std::string> out;
  for (const auto& l : body["response"])
    if (l.is_string()) out.push_back(l.get<std::string>());
  return out;
}

namespace {

enum class Role { initiator, invitee };

struct Variable {
  int flag = 0;
  std::optional<json> data;
  std::int64_t size = 0;  // 0: unchecked (only in sessions created without validation)
};

struct Session {
  std::string initiator_id;
  std::string invitee_id;
  bool initiator_present = true;
  bool invitee_present = false;
  bool invitee_joined = false;
  bool partial_end = false;
  std::optional<Role> departed;
  std::map<std::int64_t, Variable> variables;

  std::optional<Role> present_role(const std::string& client) const {
    if (initiator_present && client == initiator_id) return Role::initiator;
    if (invitee_present && client == invitee_id) return Role::invitee;
    return std::nullopt;
  }
};

ApiResponse reply(int status, std::initializer_list<const char*> labels, json extra = json::object()) {
  extra["response"] = json::array();
  for (const char* l : labels) extra["response"].push_back(l);
  return {status, std::move(extra)};
}

ApiResponse error(int status, const char* label, std::string message) {
  return reply(status, {label}, {{"error", std::move(message)}});
}

std::optional<std::string> string_field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j[key].is_string()) return std::nullopt;
  auto s = j[key].get<std::string>();
  if (s.empty()) return std::nullopt;
  return s;
}

std::optional<std::int64_t> int_field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j[key].is_number_integer()) return std::nullopt;
  return j[key].get<std::int64_t>();
}

std::optional<std::vector<std::int64_t>> int_list(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j[key].is_array()) return std::nullopt;
  std::vector<std::int64_t> out;
  for (const auto& v : j[key]) {
    if (!v.is_number_integer()) return std::nullopt;
    out.push_back(v.get<std::int64_t>());
  }
  return out;
}

std::int64_t payload_size(const json& payload) {
  return payload.is_array() ? static_cast<std::int64_t>(payload.size()) : -1;
}

}  // namespace

struct SessionStore::Entry {
  std::mutex mutex;
  Session session;
  bool deleted = false;
};

SessionStore::SessionStore(FaultConfig faults) : faults_(faults), salt_(std::random_device{}()) {
  salt_ = (salt_ << 32) ^ std::random_device{}();
}

SessionStore::~SessionStore() = default;

std::shared_ptr<SessionStore::Entry> SessionStore::find(const std::string& id) const {
  std::shared_lock lock(map_mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

ApiResponse SessionStore::create_session(const json& req) {
  auto initiator = string_field(req, "initiator_id");
  auto invitee = string_field(req, "invitee_id");
  auto ids = int_list(req, "variable_ids");
  auto sizes = int_list(req, "variable_sizes");

  // The fault only skips the presence checks; fields that are present are
  // still validated, and missing pieces stay empty.
  const bool lax = faults_.bug_create_skips_validation;
  Session s;
  if (!initiator && !lax) return error(400, "c_e", "missing initiator_id");
  if (!invitee && !lax) return error(400, "c_e", "missing invitee_id");
  if (!ids && !lax) return error(400, "c_e", "missing variable_ids");
  if (!sizes && !lax) return error(400, "c_e", "missing variable_sizes");
  if (ids && ids->empty()) return error(400, "c_e", "empty variable list");
  if (ids && sizes && ids->size() != sizes->size())
    return error(400, "c_e", "variable_ids/variable_sizes length mismatch");
  if (initiator && invitee && *initiator == *invitee)
    return error(400, "c_e", "initiator and invitee must differ");
  if (ids) {
    for (std::size_t i = 0; i < ids->size(); ++i) {
      std::int64_t size = sizes ? (*sizes)[i] : 0;
      if (sizes && size <= 0) return error(400, "c_e", "variable sizes must be positive");
      if (!s.variables.emplace((*ids)[i], Variable{0, std::nullopt, size}).second)
        return error(400, "c_e", "duplicate variable id");
    }
  }
  s.initiator_id = initiator.value_or("");
  s.invitee_id = invitee.value_or("");

  char buf[32];
  std::uint64_t n = next_id_.fetch_add(1);
  std::snprintf(buf, sizeof buf, "s%016llx",
                static_cast<unsigned long long>((n * 0x9e3779b97f4a7c15ULL) ^ salt_));
  std::string id = buf;

  auto entry = std::make_shared<Entry>();
  entry->session = std::move(s);
  {
    std::unique_lock lock(map_mutex_);
    sessions_.emplace(id, std::move(entry));
  }
  return reply(200, {"c_s", "c_a"}, {{"session_id", id}});
}

ApiResponse SessionStore::join_session(const json& req) {
  auto id = string_field(req, "session_id");
  auto client = string_field(req, "client_id");
  if (!id || !client) return error(400, "j_e", "session_id and client_id are required");
  auto e = find(*id);
  if (!e) return error(404, "j_e", "unknown session");
  std::lock_guard lock(e->mutex);
  if (e->deleted) return error(404, "j_e", "unknown session");
  Session& s = e->session;
  if (*client != s.invitee_id) return error(403, "j_e", "client is not the invitee");
  if (s.partial_end && !faults_.bug_join_after_partial_end)
    return error(409, "j_e", "session has been partially ended");
  if (s.invitee_present) return error(409, "j_e", "invitee already joined");
  s.invitee_present = true;
  s.invitee_joined = true;
  if (s.departed == Role::invitee) s.departed.reset();
  return reply(200, {"j_a"});
}

ApiResponse SessionStore::send_data(const json& req) {
  auto id = string_field(req, "session_id");
  auto client = string_field(req, "client_id");
  auto var = int_field(req, "var_id");
  if (!id || !client || !var || !req.contains("payload"))
    return error(400, "s_e", "session_id, client_id, var_id and payload are required");
  auto e = find(*id);
  if (!e) return error(404, "s_e", "unknown session");
  std::lock_guard lock(e->mutex);
  if (e->deleted) return error(404, "s_e", "unknown session");
  Session& s = e->session;
  if (!s.present_role(*client)) return error(403, "s_e", "client is not in the session");
  auto it = s.variables.find(*var);
  if (it == s.variables.end()) return error(404, "s_e", "unknown variable");
  Variable& v = it->second;
  if (v.flag == 1) return error(409, "s_e", "data already present; overwrite rejected");
  const json& payload = req["payload"];
  if (payload_size(payload) < 0 || (v.size > 0 && payload_size(payload) != v.size))
    return error(400, "s_e", "payload size does not match the declared variable size");
  v.data = payload;
  v.flag = 1;
  return reply(200, {"s_a", "store", "uf(1)"});
}

ApiResponse SessionStore::receive_data(const json& req) {
  auto id = string_field(req, "session_id");
  auto client = string_field(req, "client_id");
  auto var = int_field(req, "var_id");
  if (!id || !client || !var) return error(400, "r_e", "session_id, client_id and var_id are required");
  auto e = find(*id);
  if (!e) return error(404, "r_e", "unknown session");
  std::lock_guard lock(e->mutex);
  if (e->deleted) return error(404, "r_e", "unknown session");
  Session& s = e->session;
  if (!s.present_role(*client)) return error(403, "r_e", "client is not in the session");
  auto it = s.variables.find(*var);
  if (it == s.variables.end()) return error(404, "r_e", "unknown variable");
  Variable& v = it->second;
  if (faults_.bug_receive_ignores_flag) {
    if (!v.data) return error(409, "r_e", "no data present");
    json payload = *v.data;  // stale copy stays behind
    v.flag = 0;
    return reply(200, {"r_a", "retrv", "uf(0)"}, {{"payload", std::move(payload)}});
  }
  if (v.flag != 1) return error(409, "r_e", "no data present");
  json payload = std::move(*v.data);
  v.data.reset();
  v.flag = 0;
  return reply(200, {"r_a", "retrv", "uf(0)"}, {{"payload", std::move(payload)}});
}

ApiResponse SessionStore::end_session(const json& req) {
  auto id = string_field(req, "session_id");
  auto client = string_field(req, "client_id");
  if (!id || !client) return error(400, "e_e", "session_id and client_id are required");
  auto e = find(*id);
  if (!e) return error(404, "e_e", "unknown session");
  {
    std::lock_guard lock(e->mutex);
    if (e->deleted) return error(404, "e_e", "unknown session");
    Session& s = e->session;
    auto role = s.present_role(*client);
    if (!role) return error(403, "e_e", "client is not in the session");
    if (s.initiator_present && s.invitee_present) {
      (*role == Role::initiator ? s.initiator_present : s.invitee_present) = false;
      s.partial_end = true;
      s.departed = *role;
      return reply(200, {"e_a"});
    }
    e->deleted = true;
  }
  std::unique_lock lock(map_mutex_);
  sessions_.erase(*id);
  return reply(200, {"e_a", "clear"});
}

ApiResponse SessionStore::get_session_status(std::string_view session_id) const {
  auto e = find(std::string(session_id));
  if (!e) return error(404, "status_e", "unknown session");
  std::lock_guard lock(e->mutex);
  if (e->deleted) return error(404, "status_e", "unknown session");
  const Session& s = e->session;
  json flags = json::object();
  for (const auto& [var, v] : s.variables) flags[std::to_string(var)] = v.flag;
  json out = {{"session_id", std::string(session_id)},
              {"created", 1},
              {"joined", s.invitee_joined ? 1 : 0},
              {"partial_end", s.partial_end ? 1 : 0},
              {"initiator_present", s.initiator_present},
              {"invitee_present", s.invitee_present},
              {"flags", std::move(flags)}};
  out["response"] = {"status"};
  return {200, std::move(out)};
}

void SessionStore::reset() {
  std::unique_lock lock(map_mutex_);
  for (auto& [id, e] : sessions_) {
    std::lock_guard l(e->mutex);
    e->deleted = true;
  }
  sessions_.clear();
}

std::size_t SessionStore::session_count() const {
  std::shared_lock lock(map_mutex_);
  return sessions_.size();
}

}  // namespace ucert
