#include "valdet/llm_client.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "valdet/io.hpp"
#include "valdet/text.hpp"

// After Eigen: <resolv.h> (pulled in by httplib) defines a `_res` macro.
#include <httplib.h>

namespace valdet::llm {

using nlohmann::json;

json ChatRequest::to_json() const {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", model}, {"temperature", temperature}, {"messages", std::move(msgs)}};
}

// ---- HTTP ----

HttpChatTransport::HttpChatTransport(std::string url, std::string api_key) : api_key_(std::move(api_key)) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InvalidArgument("endpoint must be an http(s) URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

ChatResponse HttpChatTransport::send(const ChatRequest& request) {
  httplib::Client cli(scheme_host_port_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout).count();
  cli.set_connection_timeout(std::max<long long>(1, secs / 4));
  cli.set_read_timeout(std::max<long long>(1, secs));
  cli.set_write_timeout(std::max<long long>(1, secs));
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = cli.Post(path_, headers, request.to_json().dump(), "application/json");
  if (!res) throw TransportError("request to " + scheme_host_port_ + path_ + " failed: " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

// ---- mock ----

MockChatTransport::MockChatTransport(json fixture) : fixture_(std::move(fixture)) {
  if (!fixture_.is_object()) throw InvalidArgument("mock LLM fixture must be a JSON object");
  if (fixture_.contains("by_content") && !fixture_["by_content"].is_object()) {
    throw InvalidArgument("mock LLM fixture: by_content must be an object");
  }
}

MockChatTransport::MockChatTransport(MockChatTransport&& other) noexcept {
  std::lock_guard lock(other.mutex_);
  fixture_ = std::move(other.fixture_);
  cursor_ = std::move(other.cursor_);
  requests_ = std::move(other.requests_);
}

MockChatTransport MockChatTransport::from_file(const std::filesystem::path& path) {
  io::require_file(path, "mock LLM fixture");
  try {
    return MockChatTransport(json::parse(io::read_file(path)));
  } catch (const json::parse_error& e) {
    throw ParseError("mock LLM fixture " + path.string() + ": " + e.what(), 0);
  }
}

MockChatTransport MockChatTransport::constant(const std::string& content) {
  return MockChatTransport(json{{"default", json::array({content})}});
}

ChatResponse MockChatTransport::send(const ChatRequest& request) {
  std::string user;
  for (const auto& m : request.messages) {
    if (m.role == "user") user = m.content;
  }
  std::lock_guard lock(mutex_);
  requests_.push_back(request);
  const json* replies = nullptr;
  std::string key = "\x01" "default";
  if (fixture_.contains("by_content") && fixture_["by_content"].contains(user)) {
    replies = &fixture_["by_content"][user];
    key = user;
  } else if (fixture_.contains("default")) {
    replies = &fixture_["default"];
  }
  if (!replies || !replies->is_array() || replies->empty()) {
    throw TransportError("mock LLM has no reply for: " + user);
  }
  const json& reply = (*replies)[cursor_[key]++ % replies->size()];
  if (reply.is_string()) return {200, completion_body(reply.get<std::string>())};
  if (reply.contains("transport_error")) throw TransportError(reply["transport_error"].get<std::string>());
  return {reply.value("status", 200), reply.value("body", std::string{})};
}

std::size_t MockChatTransport::calls() const {
  std::lock_guard lock(mutex_);
  return requests_.size();
}

std::vector<ChatRequest> MockChatTransport::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

std::string completion_body(const std::string& content) {
  return json{{"choices", json::array({{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}}})}}
      .dump();
}

std::string extract_content(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error&) {
    throw ParseError("completion body is not JSON", 0);
  }
  if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
    throw ParseError("completion body has no choices", 0);
  }
  const auto& msg = j["choices"][0].value("message", json::object());
  if (!msg.contains("content") || !msg["content"].is_string()) {
    throw ParseError("completion choice has no message content", 0);
  }
  return msg["content"].get<std::string>();
}

bool RetryPolicy::retryable_status(int status) { return status == 429 || (status >= 500 && status <= 599); }

// ---- label parsing ----

LabelParser::LabelParser()
    : LabelParser({{"Reflects values", annot::Label::Reflects},
                   {"Reflects", annot::Label::Reflects},
                   {"Doesn't reflect values", annot::Label::DoesntReflect},
                   {"Doesn\xE2\x80\x99t reflect values", annot::Label::DoesntReflect},
                   {"Does not reflect values", annot::Label::DoesntReflect},
                   {"Doesn't reflect", annot::Label::DoesntReflect},
                   {"Doesn\xE2\x80\x99t reflect", annot::Label::DoesntReflect},
                   {"Does not reflect", annot::Label::DoesntReflect},
                   {"DoesntReflect", annot::Label::DoesntReflect},
                   {"Unclear", annot::Label::Unclear},
                   {"Spam", annot::Label::Spam}}) {}

LabelParser::LabelParser(std::vector<std::pair<std::string, annot::Label>> table) : table_(std::move(table)) {
  if (table_.empty()) throw InvalidArgument("label parse table is empty");
  for (const auto& [k, l] : table_) {
    if (text::trim(k).empty()) throw InvalidArgument("label parse table has an empty key");
    if (l == annot::Label::NotAssigned) throw InvalidArgument("label parse table maps to NotAssigned");
    by_length_.emplace_back(text::to_lower(k), l);
  }
  std::stable_sort(by_length_.begin(), by_length_.end(),
                   [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
}

std::optional<annot::Label> LabelParser::parse(std::string_view response) const {
  const auto s = text::trim(response);
  for (const auto& [k, l] : table_) {
    if (s == k) return l;
  }
  const auto lower = text::to_lower(s);
  for (const auto& [k, l] : by_length_) {
    if (lower.find(k) != std::string::npos) return l;
  }
  return std::nullopt;
}

std::string default_guideline() {
  return "You label posts from a Russian social network.\n"
         "Decide whether the author expresses that some idea, phenomenon or quality matters to them.\n"
         "Advertising, contests, reposted promotions and bot messages are Spam.\n"
         "Answer with exactly one of: Reflects values; Doesn't reflect values; Unclear; Spam.";
}

void LlmAnnotatorConfig::validate() const {
  if (passes == 0) throw InvalidArgument("llm passes must be >= 1");
  if (model.empty()) throw InvalidArgument("llm model name is empty");
  if (temperature < 0.0 || temperature > 2.0) throw InvalidArgument("llm temperature must be in [0, 2]");
  if (retry.max_attempts == 0) throw InvalidArgument("llm retry budget must be >= 1 attempt");
  if (max_concurrency == 0) throw InvalidArgument("llm max_concurrency must be >= 1");
  if (guideline.empty()) throw InvalidArgument("llm guideline is empty");
}

std::size_t LlmAnnotationResult::transport_failures() const {
  return static_cast<std::size_t>(
      std::count_if(failures.begin(), failures.end(), [](const LlmFailure& f) { return f.kind == "transport"; }));
}

json LlmAnnotationResult::failures_json() const {
  json arr = json::array();
  for (const auto& f : failures) {
    arr.push_back({{"post_id", f.post_id},
                   {"pass", f.pass},
                   {"kind", f.kind},
                   {"message", f.message},
                   {"raw_response", f.raw_response}});
  }
  return {{"failures", std::move(arr)}, {"flagged_posts", flagged_posts}};
}

namespace {

struct PassOutcome {
  std::optional<annot::AnnotationRecord> record;
  std::optional<LlmFailure> failure;
};

PassOutcome run_pass(const PostToAnnotate& post, std::size_t pass, const LlmAnnotatorConfig& cfg,
                     ChatTransport& transport) {
  ChatRequest req;
  req.model = cfg.model;
  req.temperature = cfg.temperature;
  req.timeout = cfg.timeout;
  req.messages = {{"system", cfg.guideline}, {"user", post.text}};

  LlmFailure last{post.id, pass, "transport", "no attempt made", ""};
  auto backoff = cfg.retry.initial_backoff;
  for (std::size_t attempt = 0; attempt < cfg.retry.max_attempts; ++attempt) {
    if (attempt > 0 && backoff.count() > 0) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(static_cast<long long>(backoff.count() * cfg.retry.multiplier));
    }
    ChatResponse resp;
    try {
      resp = transport.send(req);
    } catch (const std::exception& e) {
      last = {post.id, pass, "transport", e.what(), ""};
      continue;
    }
    if (resp.status != 200) {
      last = {post.id, pass, "transport", "HTTP status " + std::to_string(resp.status), resp.body};
      if (RetryPolicy::retryable_status(resp.status)) continue;
      break;
    }
    std::string content;
    try {
      content = extract_content(resp.body);
    } catch (const ParseError& e) {
      last = {post.id, pass, "parse", e.what(), resp.body};
      continue;
    }
    if (auto label = cfg.parser.parse(content)) {
      return {annot::AnnotationRecord{post.id, annot::Source::Llm, cfg.annotator_id, *label, pass}, std::nullopt};
    }
    last = {post.id, pass, "parse", "response matches no label", content};
  }
  return {std::nullopt, std::move(last)};
}

}  // namespace

LlmAnnotationResult llm_annotate(const std::vector<PostToAnnotate>& posts, const LlmAnnotatorConfig& cfg,
                                 ChatTransport& transport) {
  cfg.validate();
  std::vector<std::vector<PassOutcome>> outcomes(posts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < posts.size(); i = next++) {
      outcomes[i].reserve(cfg.passes);
      for (std::size_t p = 1; p <= cfg.passes; ++p) outcomes[i].push_back(run_pass(posts[i], p, cfg, transport));
    }
  };
  const auto n_threads = std::min(cfg.max_concurrency, std::max<std::size_t>(1, posts.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  LlmAnnotationResult result;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    for (auto& o : outcomes[i]) {
      if (o.record) result.records.push_back(std::move(*o.record));
      if (o.failure) {
        result.flagged_posts.insert(o.failure->post_id);
        result.failures.push_back(std::move(*o.failure));
      }
    }
  }
  return result;
}

}  // namespace valdet::llm
