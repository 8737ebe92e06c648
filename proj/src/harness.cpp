#include "ucert/harness.hpp"

#include <algorithm>
#include <atomic>

#include <httplib.h>
#include <omp.h>

#include "ucert/server.hpp"

namespace ucert {

using nlohmann::json;

std::vector<std::string> HttpReply::labels() const {
  return ApiResponse{status, body}.labels();
}

struct HttpSessionApi::Impl {
  httplib::Client client;
  explicit Impl(const std::string& url) : client(url) {}
};

HttpSessionApi::HttpSessionApi(const std::string& base_url, int timeout_seconds)
    : impl_(std::make_unique<Impl>(base_url)) {
  impl_->client.set_keep_alive(true);
  impl_->client.set_tcp_nodelay(true);
  impl_->client.set_connection_timeout(timeout_seconds, 0);
  impl_->client.set_read_timeout(timeout_seconds, 0);
  impl_->client.set_write_timeout(timeout_seconds, 0);
}

HttpSessionApi::~HttpSessionApi() = default;

HttpReply HttpSessionApi::send(const HttpRequest& request) {
  httplib::Result res = request.method == "GET"
                            ? impl_->client.Get(request.path)
                            : impl_->client.Post(request.path, request.body.dump(), "application/json");
  HttpReply reply;
  if (!res) {
    reply.transport_error = true;
    reply.error = httplib::to_string(res.error());
    return reply;
  }
  reply.status = res->status;
  reply.body = json::parse(res->body, nullptr, false);
  if (reply.body.is_discarded()) reply.body = json::object();
  return reply;
}

HttpReply InProcessSessionApi::send(const HttpRequest& request) {
  ApiResponse r;
  const std::string& p = request.path;
  if (request.method == "GET" && p.starts_with("/sessions/")) {
    r = store_.get_session_status(std::string_view(p).substr(10));
  } else if (request.method == "POST" && p == "/create_session") {
    r = store_.create_session(request.body);
  } else if (request.method == "POST" && p == "/join_session") {
    r = store_.join_session(request.body);
  } else if (request.method == "POST" && p == "/send_data") {
    r = store_.send_data(request.body);
  } else if (request.method == "POST" && p == "/receive_data") {
    r = store_.receive_data(request.body);
  } else if (request.method == "POST" && p == "/end_session") {
    r = store_.end_session(request.body);
  } else if (request.method == "POST" && p == "/reset") {
    store_.reset();
    r = {200, {{"response", {"reset_a"}}}};
  } else {
    r = {404, {{"error", "no such route"}}};
  }
  HttpReply out;
  out.status = r.status;
  out.body = std::move(r.body);
  return out;
}

BindingContext BindingContext::fresh(std::size_t test_id, std::size_t pool) {
  BindingContext ctx;
  auto suffix = "-" + std::to_string(test_id);
  ctx.ids = {"model_A" + suffix, "model_B" + suffix, "model_X" + suffix};
  ctx.shadow_flags.assign(pool, 0);
  ctx.test_id = test_id;
  return ctx;
}

namespace {

bool needs_session(std::string_view stimulus) { return stimulus != "C_t" && stimulus != "C_f"; }

json payload_for(const BindingContext& ctx, std::int64_t var) {
  json p = json::array();
  for (std::int64_t i = 0; i < ctx.variable_size; ++i)
    p.push_back(static_cast<std::int64_t>(ctx.test_id) * 1000 + var * 10 + i);
  return p;
}

const std::string& receiver(const BindingContext& ctx) {
  return ctx.invitee_present ? ctx.ids.invitee : ctx.ids.initiator;
}

bool has(const ResponseLabel& r, std::string_view atom) {
  return std::find(r.tokens.begin(), r.tokens.end(), atom) != r.tokens.end();
}

}  // namespace

std::vector<HttpRequest> bind_stimulus(std::string_view stim, const BindingContext& ctx) {
  if (stim == "C_t" || stim == "C_f") {
    json ids = json::array(), sizes = json::array();
    for (std::size_t v = 1; v <= ctx.pool_size(); ++v) {
      ids.push_back(v);
      sizes.push_back(ctx.variable_size);
    }
    json body = {{"initiator_id", ctx.ids.initiator},
                 {"invitee_id", ctx.ids.invitee},
                 {"variable_ids", std::move(ids)},
                 {"variable_sizes", std::move(sizes)}};
    if (stim == "C_f") body.erase("invitee_id");
    return {{"POST", "/create_session", std::move(body)}};
  }
  if (!ctx.session_id) throw HarnessError("stimulus " + std::string(stim) + " needs a session id");
  const std::string& sid = *ctx.session_id;

  if (stim == "J_t" || stim == "J_f")
    return {{"POST", "/join_session",
             {{"session_id", sid}, {"client_id", stim == "J_t" ? ctx.ids.invitee : ctx.ids.uninvited}}}};
  if (stim == "S_t") {
    auto it = std::find(ctx.shadow_flags.begin(), ctx.shadow_flags.end(), 0);
    if (it == ctx.shadow_flags.end())
      throw HarnessError("variable pool exhausted: all " + std::to_string(ctx.pool_size()) +
                         " variables hold unread data");
    auto var = static_cast<std::int64_t>(it - ctx.shadow_flags.begin()) + 1;
    return {{"POST", "/send_data",
             {{"session_id", sid}, {"client_id", ctx.ids.initiator}, {"var_id", var},
              {"payload", payload_for(ctx, var)}}}};
  }
  if (stim == "S_f")
    return {{"POST", "/send_data",
             {{"session_id", sid}, {"client_id", ctx.ids.uninvited}, {"var_id", 1},
              {"payload", payload_for(ctx, 1)}}}};
  if (stim == "R_t") {
    std::vector<HttpRequest> out;
    for (std::size_t i = 0; i < ctx.shadow_flags.size(); ++i)
      if (ctx.shadow_flags[i] == 1)
        out.push_back({"POST", "/receive_data",
                       {{"session_id", sid}, {"client_id", receiver(ctx)}, {"var_id", i + 1}}});
    if (out.empty())
      out.push_back({"POST", "/receive_data",
                     {{"session_id", sid}, {"client_id", receiver(ctx)}, {"var_id", 1}}});
    return out;
  }
  if (stim == "R_f")
    return {{"POST", "/receive_data",
             {{"session_id", sid}, {"client_id", receiver(ctx)},
              {"var_id", BindingContext::kUnknownVariable}}}};
  if (stim == "E") {
    const std::string& who = ctx.initiator_present && ctx.invitee_present ? ctx.ids.invitee
                             : ctx.initiator_present                      ? ctx.ids.initiator
                                                                          : ctx.ids.invitee;
    return {{"POST", "/end_session", {{"session_id", sid}, {"client_id", who}}}};
  }
  throw HarnessError("no binding for stimulus " + std::string(stim));
}

void apply_expected(const TestStep& step, const std::vector<HttpRequest>& requests,
                    BindingContext& ctx) {
  const auto& r = step.expected_response;
  const auto& s = step.stimulus;
  if (s == "C_t" && has(r, "c_a")) {
    ctx.session_expected = true;
    ctx.initiator_present = true;
    ctx.invitee_present = false;
    std::fill(ctx.shadow_flags.begin(), ctx.shadow_flags.end(), 0);
  } else if (s == "J_t" && has(r, "j_a")) {
    ctx.invitee_present = true;
  } else if (s == "S_t" && has(r, "s_a")) {
    for (const auto& req : requests) ctx.shadow_flags.at(req.body["var_id"].get<std::size_t>() - 1) = 1;
  } else if (s == "R_t" && has(r, "r_a")) {
    for (const auto& req : requests) ctx.shadow_flags.at(req.body["var_id"].get<std::size_t>() - 1) = 0;
  } else if (s == "E" && has(r, "e_a")) {
    if (has(r, "clear")) {
      ctx.session_expected = false;
      ctx.initiator_present = ctx.invitee_present = false;
      std::fill(ctx.shadow_flags.begin(), ctx.shadow_flags.end(), 0);
    } else {
      const auto who = requests.front().body["client_id"].get<std::string>();
      (who == ctx.ids.invitee ? ctx.invitee_present : ctx.initiator_present) = false;
    }
  }
}

std::optional<CanonicalStateVector> canonical_from_status(const HttpReply& reply) {
  if (reply.transport_error) return std::nullopt;
  if (reply.status == 404) return CanonicalStateVector::no_session();
  if (reply.status != 200 || !reply.body.is_object()) return std::nullopt;
  const json& b = reply.body;
  if (!b.contains("joined") || !b.contains("partial_end") || !b.contains("flags")) return std::nullopt;
  CanonicalStateVector v;
  v.created = Attr::one;
  bool joined = b["joined"].get<int>() == 1;
  bool any_flag = false;
  for (const auto& [k, f] : b["flags"].items()) any_flag = any_flag || f.get<int>() == 1;
  v.joined = joined ? Attr::one : Attr::zero;
  v.data_sent = any_flag ? Attr::one : Attr::zero;
  v.partial_end = !joined ? Attr::na : (b["partial_end"].get<int>() == 1 ? Attr::one : Attr::zero);
  return v;
}

CanonicalStateVector expected_vector(const UsageModel& model, const CanonicalTable& table,
                                     StateIndex state) {
  if (state == model.sink) return CanonicalStateVector::no_session();
  auto it = table.find(model.states.at(state));
  if (it == table.end()) throw HarnessError("state " + model.states[state] + " has no canonical vector");
  return it->second;
}

std::optional<StateIndex> state_for_vector(const UsageModel& model, const CanonicalTable& table,
                                           const CanonicalStateVector& v) {
  if (v == CanonicalStateVector::no_session()) return model.source;
  for (const auto& [name, vec] : table)
    if (vec == v)
      if (auto s = model.find_state(name)) return s;
  return std::nullopt;
}

StepVerdict check_step(const TestStep& expected, const std::vector<HttpReply>& replies,
                       const std::optional<CanonicalStateVector>& observed,
                       const CanonicalStateVector& expected_state) {
  StepVerdict v;
  v.expected_response = expected.expected_response;
  v.expected_state = expected_state;
  v.observed_state = observed;
  bool response_ok = !replies.empty();
  for (const auto& r : replies) {
    v.observed_responses.push_back(r.labels());
    if (v.observed_responses.back() != expected.expected_response.tokens) response_ok = false;
  }
  bool state_ok = observed && *observed == expected_state;
  if (response_ok && state_ok) return v;

  v.outcome = StepOutcome::continue_failure;
  std::string got;
  for (const auto& labels : v.observed_responses) {
    got += got.empty() ? "" : " | ";
    ResponseLabel l{labels};
    got += labels.empty() ? "<none>" : l.to_string();
  }
  v.note = expected.stimulus + ": expected " + expected.expected_response.to_string() + " got " + got +
           "; state expected [" + expected_state.to_string() + "] observed [" +
           (observed ? observed->to_string() : std::string("?")) + "]";
  return v;
}

CaseResult execute_test_case(SessionApi& api, const TestCase& test, const UsageModel& model,
                             const CanonicalTable& table, BindingContext ctx,
                             const StepObserver& observer) {
  CaseResult res;
  TestVerdict& tv = res.verdict;
  tv.test_id = test.id;
  tv.method = test.method;
  for (const auto& s : test.steps) tv.arcs.push_back(s.arc);
  tv.outcomes.assign(test.steps.size(), StepOutcome::not_executed);

  for (std::size_t k = 0; k < test.steps.size(); ++k) {
    const TestStep& step = test.steps[k];
    std::vector<HttpRequest> requests;
    try {
      requests = bind_stimulus(step.stimulus, ctx);
    } catch (const HarnessError& e) {
      tv.outcomes[k] = StepOutcome::harness_error;
      tv.notes.push_back("step " + std::to_string(k + 1) + " harness error: " + e.what());
      tv.cause = "harness";
      break;
    }

    std::vector<HttpReply> replies;
    bool transport = false;
    for (const auto& req : requests) {
      HttpReply r = api.send(req);
      if (r.transport_error) {
        transport = true;
        tv.notes.push_back("step " + std::to_string(k + 1) + " transport error: " + r.error);
        break;
      }
      if (r.body.is_object() && r.body.contains("session_id") && r.body["session_id"].is_string())
        ctx.session_id = r.body["session_id"].get<std::string>();
      replies.push_back(std::move(r));
    }

    HttpReply status;
    status.status = 404;
    status.body = json::object();
    if (!transport && ctx.session_id) {
      status = api.send({"GET", "/sessions/" + *ctx.session_id, json()});
      if (status.transport_error) {
        transport = true;
        tv.notes.push_back("step " + std::to_string(k + 1) + " transport error: " + status.error);
      }
    }
    if (transport) {
      tv.outcomes[k] = StepOutcome::stop_failure;
      tv.cause = "transport";
      break;
    }

    auto observed = canonical_from_status(status);
    StepVerdict sv = check_step(step, replies, observed, expected_vector(model, table, step.expected_state));
    sv.index = k;
    apply_expected(step, requests, ctx);

    bool stop = false;
    if (sv.outcome != StepOutcome::pass && k + 1 < test.steps.size()) {
      const std::string& next = test.steps[k + 1].stimulus;
      auto actual = observed ? state_for_vector(model, table, *observed) : std::nullopt;
      stop = !actual || !model.find_arc(*actual, next) || (needs_session(next) && !ctx.session_id);
      if (stop) {
        sv.outcome = StepOutcome::stop_failure;
        sv.note += "; next stimulus " + next + " is not applicable in the observed state";
      }
    }
    tv.outcomes[k] = sv.outcome;
    if (sv.outcome != StepOutcome::pass) tv.notes.push_back("step " + std::to_string(k + 1) + " " + sv.note);
    if (observer) observer(sv, ctx, status);
    res.steps.push_back(std::move(sv));
    if (stop) break;
  }
  return res;
}

namespace {

bool reachable(SessionApi& api) {
  return !api.send({"GET", "/sessions/__probe__", json()}).transport_error;
}

}  // namespace

TestRecord execute_suite(const Suite& suite, const UsageModel& model, const CanonicalTable& table,
                         const SessionApiFactory& factory, const ExecutionOptions& options) {
  {
    auto api = factory();
    if (!reachable(*api)) throw TargetUnreachable("system under test is not reachable");
    if (options.reset_first) api->send({"POST", "/reset", json::object()});
  }

  const std::size_t n = suite.cases.size();
  std::vector<TestVerdict> verdicts(n);
  std::vector<char> done(n, 0);
  std::atomic<bool> abort{false};

  auto run_one = [&](SessionApi& api, std::size_t i) {
    if (abort.load(std::memory_order_relaxed)) return;
    const TestCase& tc = suite.cases[i];
    auto ctx = BindingContext::fresh(tc.id, options.variable_pool);
    verdicts[i] = execute_test_case(api, tc, model, table, std::move(ctx)).verdict;
    if (verdicts[i].cause == "transport" && !reachable(api)) {
      abort = true;
      return;
    }
    done[i] = 1;
  };

  if (options.jobs <= 1) {
    auto api = factory();
    for (std::size_t i = 0; i < n && !abort; ++i) run_one(*api, i);
  } else {
    const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel num_threads(options.jobs)
    {
      auto api = factory();
#pragma omp for schedule(dynamic, 8)
      for (std::int64_t i = 0; i < count; ++i) run_one(*api, static_cast<std::size_t>(i));
    }
  }

  if (abort && !options.keep_partial)
    throw TargetUnreachable("system under test stopped responding during the run");

  TestRecord record(model, suite.meta, options.target_description);
  for (std::size_t i = 0; i < n; ++i)
    if (done[i]) record.add(std::move(verdicts[i]));
  return record;
}

const CanonicalTable& des_canonical_table() {
  static const CanonicalTable table = parse_canonical_table(R"(
lambda       0 - - -
C_t          1 0 0 -
C_tJ_t       1 1 0 0
C_tS_t       1 0 1 -
C_tJ_tE      1 1 0 1
C_tJ_tS_t    1 1 1 0
C_tJ_tES_t   1 1 1 1
)");
  return table;
}

}  // namespace ucert
