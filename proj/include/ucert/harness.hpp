#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ucert/canonical.hpp"
#include "ucert/certify.hpp"
#include "ucert/model.hpp"
#include "ucert/testgen.hpp"

namespace ucert {

class SessionStore;

struct HttpRequest {
  std::string method;  // "GET" or "POST"
  std::string path;
  nlohmann::json body;
};

struct HttpReply {
  int status = 0;
  nlohmann::json body;
  bool transport_error = false;
  std::string error;

  std::vector<std::string> labels() const;
};

/// Transport to the system under test. One instance per thread.
class SessionApi {
 public:
  virtual ~SessionApi() = default;
  virtual HttpReply send(const HttpRequest& request) = 0;
};

/// Talks HTTP/1.1 with keep-alive to a server at `base_url`.
class HttpSessionApi : public SessionApi {
 public:
  explicit HttpSessionApi(const std::string& base_url, int timeout_seconds = 10);
  ~HttpSessionApi() override;
  HttpReply send(const HttpRequest& request) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Dispatches straight into a SessionStore; same routes as the HTTP server.
class InProcessSessionApi : public SessionApi {
 public:
  explicit InProcessSessionApi(SessionStore& store) : store_(store) {}
  HttpReply send(const HttpRequest& request) override;

 private:
  SessionStore& store_;
};

using SessionApiFactory = std::function<std::unique_ptr<SessionApi>()>;

/// Binding inputs could not be produced (e.g. the variable pool is
/// exhausted). Counted apart from system failures.
class HarnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Participants {
  std::string initiator;
  std::string invitee;
  std::string uninvited;
};

/// What the oracle believes about the session while a case runs.
struct BindingContext {
  std::optional<std::string> session_id;  // last session handed out by the server
  Participants ids;
  std::vector<int> shadow_flags;  // shadow_flags[v - 1] for variable id v
  bool session_expected = false;
  bool initiator_present = false;
  bool invitee_present = false;
  std::int64_t variable_size = 4;
  std::size_t test_id = 0;

  static constexpr std::size_t kDefaultPool = 64;
  static constexpr std::int64_t kUnknownVariable = 9999;

  /// Fresh participant ids ("model_A-<id>", "model_B-<id>", "model_X-<id>").
  static BindingContext fresh(std::size_t test_id, std::size_t pool = kDefaultPool);

  std::size_t pool_size() const { return shadow_flags.size(); }
};

/// Concrete requests for one abstract stimulus in the current context.
/// R_t drains every shadow-flagged variable (one receive each), or issues a
/// single receive of variable 1 when nothing is flagged.
std::vector<HttpRequest> bind_stimulus(std::string_view stimulus, const BindingContext& ctx);

/// Advances the shadow state as if `step` produced its expected response.
void apply_expected(const TestStep& step, const std::vector<HttpRequest>& requests,
                    BindingContext& ctx);

/// Canonical vector from a GET /sessions/{id} reply (404 = no session).
std::optional<CanonicalStateVector> canonical_from_status(const HttpReply& reply);

/// Canonical vector of the expected target of a step.
CanonicalStateVector expected_vector(const UsageModel& model, const CanonicalTable& table,
                                     StateIndex state);

struct StepVerdict {
  std::size_t index = 0;
  StepOutcome outcome = StepOutcome::pass;
  std::vector<std::vector<std::string>> observed_responses;  // one per request
  std::optional<CanonicalStateVector> observed_state;        // nullopt: not observable
  ResponseLabel expected_response;
  CanonicalStateVector expected_state;
  std::string note;
};

/// Pass iff every reply carries exactly the expected atoms and the observed
/// vector equals the expected one. Failures come back as continue_failure;
/// the caller upgrades them to stop_failure when the next stimulus cannot run.
StepVerdict check_step(const TestStep& expected, const std::vector<HttpReply>& replies,
                       const std::optional<CanonicalStateVector>& observed,
                       const CanonicalStateVector& expected_state);

/// The model state whose canonical vector equals `v`; no-session maps to the source.
std::optional<StateIndex> state_for_vector(const UsageModel& model, const CanonicalTable& table,
                                           const CanonicalStateVector& v);

using StepObserver =
    std::function<void(const StepVerdict&, const BindingContext&, const HttpReply& status)>;

struct CaseResult {
  TestVerdict verdict;
  std::vector<StepVerdict> steps;
};

CaseResult execute_test_case(SessionApi& api, const TestCase& test, const UsageModel& model,
                             const CanonicalTable& table, BindingContext ctx,
                             const StepObserver& observer = {});

/// The target stopped answering; thrown by execute_suite unless keep_partial.
class TargetUnreachable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExecutionOptions {
  int jobs = 1;  // > 1 runs cases concurrently; the record order stays suite order
  bool reset_first = true;
  bool keep_partial = false;
  std::size_t variable_pool = BindingContext::kDefaultPool;
  std::string target_description;
};

TestRecord execute_suite(const Suite& suite, const UsageModel& model, const CanonicalTable& table,
                         const SessionApiFactory& factory, const ExecutionOptions& options = {});

/// Built-in state oracle of the Data Exchange Controller usage model.
const CanonicalTable& des_canonical_table();

}  // namespace ucert
