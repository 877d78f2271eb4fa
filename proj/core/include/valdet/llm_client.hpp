#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "valdet/annotations.hpp"
#include "valdet/error.hpp"

namespace valdet::llm {

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  double temperature = 0.0;
  std::vector<ChatMessage> messages;
  std::chrono::milliseconds timeout{60000};

  /// Chat-completion body: {"model", "temperature", "messages": [{role, content}]}.
  nlohmann::json to_json() const;
};

struct ChatResponse {
  int status = 0;
  std::string body;
};

/// Network-level failure (connection refused, timeout, TLS).
class TransportError : public Error {
 public:
  using Error::Error;
};

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  /// Must be safe to call from several threads.
  virtual ChatResponse send(const ChatRequest& request) = 0;
};

/// POSTs chat-completion JSON to an http(s) URL such as
/// "https://api.openai.com/v1/chat/completions". The API key, when non-empty,
/// goes into an Authorization: Bearer header.
class HttpChatTransport final : public ChatTransport {
 public:
  HttpChatTransport(std::string url, std::string api_key);
  ChatResponse send(const ChatRequest& request) override;

 private:
  std::string scheme_host_port_;
  std::string path_;
  std::string api_key_;
};

/// Replays canned replies from a fixture:
///   {"by_content": {"<user message>": [reply, ...]}, "default": [reply, ...]}
/// A reply is either a string (returned as a 200 chat completion with that
/// content), {"status": 503, "body": "..."} or {"transport_error": "..."}.
/// Replies for one key are served in order and cycle.
class MockChatTransport final : public ChatTransport {
 public:
  explicit MockChatTransport(nlohmann::json fixture);
  MockChatTransport(MockChatTransport&& other) noexcept;
  static MockChatTransport from_file(const std::filesystem::path& path);
  /// Every call answers `content`.
  static MockChatTransport constant(const std::string& content);

  ChatResponse send(const ChatRequest& request) override;

  std::size_t calls() const;
  std::vector<ChatRequest> requests() const;

 private:
  nlohmann::json fixture_;
  mutable std::mutex mutex_;
  std::map<std::string, std::size_t> cursor_;
  std::vector<ChatRequest> requests_;
};

/// Wraps a completion text as an API response body.
std::string completion_body(const std::string& content);
/// choices[0].message.content; throws ParseError on malformed bodies.
std::string extract_content(const std::string& body);

struct RetryPolicy {
  std::size_t max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;

  /// 429 and 5xx responses are retried.
  static bool retryable_status(int status);
};

/// Exact (trimmed) match first, then case-insensitive substring with longer
/// keys tried first, then failure.
class LabelParser {
 public:
  LabelParser();
  explicit LabelParser(std::vector<std::pair<std::string, annot::Label>> table);
  std::optional<annot::Label> parse(std::string_view response) const;
  const std::vector<std::pair<std::string, annot::Label>>& table() const { return table_; }

 private:
  std::vector<std::pair<std::string, annot::Label>> table_;
  std::vector<std::pair<std::string, annot::Label>> by_length_;  // lowercased, longest first
};

std::string default_guideline();

struct LlmAnnotatorConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-3.5-turbo";
  double temperature = 0.0;
  std::size_t passes = 3;
  std::string guideline = default_guideline();
  LabelParser parser;
  std::chrono::milliseconds timeout{60000};
  RetryPolicy retry;
  std::size_t max_concurrency = 4;
  std::string annotator_id = "llm";

  void validate() const;
};

struct PostToAnnotate {
  std::string id;
  std::string text;
};

struct LlmFailure {
  std::string post_id;
  std::size_t pass = 0;
  std::string kind;  // "transport" | "parse"
  std::string message;
  std::string raw_response;
};

struct LlmAnnotationResult {
  std::vector<annot::AnnotationRecord> records;  // post order, then pass order
  std::vector<LlmFailure> failures;
  std::set<std::string> flagged_posts;

  std::size_t transport_failures() const;
  nlohmann::json failures_json() const;
};

/// For every post runs `passes` completions (guideline as system message,
/// post text as user message), each with its own retry budget. Responses
/// that cannot be parsed after the retries, and transport failures, are
/// reported as failures and the post is flagged.
LlmAnnotationResult llm_annotate(const std::vector<PostToAnnotate>& posts, const LlmAnnotatorConfig& cfg,
                                 ChatTransport& transport);

}  // namespace valdet::llm
