#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace httplib {
class Server;
}

namespace ucert {

/// Seeded faults. Each flag re-introduces one historical controller bug.
struct FaultConfig {
  bool bug_join_after_partial_end = false;   // join skips the partial-end check
  bool bug_receive_ignores_flag = false;     // receive checks payload presence, keeps the payload
  bool bug_create_skips_validation = false;  // create accepts missing fields

  static FaultConfig fixed() { return {}; }
  static FaultConfig all() { return {true, true, true}; }
  /// "fixed", "new"; "custom" yields fixed and expects explicit bugs.
  static std::optional<FaultConfig> preset(std::string_view name);

  /// Accepts the field name with or without the "bug_" prefix.
  bool enable(std::string_view bug);
  std::vector<std::string> enabled() const;
  std::string describe() const;

  bool operator==(const FaultConfig&) const = default;
};

inline constexpr std::string_view kBugNames[] = {"join_after_partial_end", "receive_ignores_flag",
                                                 "create_skips_validation"};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;  // always carries "response": [atoms]

  std::vector<std::string> labels() const;
};

/// In-process session logic of the Data Exchange Controller. Thread-safe:
/// operations on one session are serialized; distinct sessions proceed in
/// parallel.
class SessionStore {
 public:
  explicit SessionStore(FaultConfig faults = {});
  ~SessionStore();

  ApiResponse create_session(const nlohmann::json& request);
  ApiResponse join_session(const nlohmann::json& request);
  ApiResponse send_data(const nlohmann::json& request);
  ApiResponse receive_data(const nlohmann::json& request);
  ApiResponse end_session(const nlohmann::json& request);
  ApiResponse get_session_status(std::string_view session_id) const;

  void reset();
  std::size_t session_count() const;
  const FaultConfig& faults() const { return faults_; }

 private:
  struct Entry;
  std::shared_ptr<Entry> find(const std::string& id) const;

  FaultConfig faults_;
  std::uint64_t salt_;
  std::atomic<std::uint64_t> next_id_{1};
  mutable std::shared_mutex map_mutex_;
  std::unordered_map<std::string, std::shared_ptr<Entry>> sessions_;
};

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  FaultConfig faults;
  bool enable_reset = false;

  /// Overlays UCERT_HOST, UCERT_PORT, UCERT_VARIANT, UCERT_BUGS (comma list)
  /// and UCERT_ENABLE_RESET onto `base`.
  static ServerConfig from_env(ServerConfig base);
  /// JSON: {"host","port","variant","bugs":[...],"enable_reset"}.
  static ServerConfig from_file(const std::string& path, ServerConfig base);
};

/// HTTP front end over SessionStore:
///   POST /create_session /join_session /send_data /receive_data /end_session
///   GET  /sessions/{id}
///   POST /reset            (only when enable_reset)
class DesServer {
 public:
  explicit DesServer(ServerConfig config);
  ~DesServer();
  DesServer(const DesServer&) = delete;
  DesServer& operator=(const DesServer&) = delete;

  /// Binds and serves on a background thread; returns the bound port.
  int start();
  /// Binds and serves on the calling thread until stop().
  void run();
  void stop();

  int port() const { return port_; }
  std::string base_url() const;
  SessionStore& store() { return store_; }

 private:
  void bind();

  ServerConfig config_;
  SessionStore store_;
  std::unique_ptr<httplib::Server> http_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace ucert
