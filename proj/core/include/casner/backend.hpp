#ifndef CASNER_BACKEND_HPP
#define CASNER_BACKEND_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace casner {

enum class Role { System, User, Assistant };

std::string_view role_name(Role role);

struct ChatMessage {
  Role role = Role::User;
  std::string content;
};

inline ChatMessage system_message(std::string content) {
  return {Role::System, std::move(content)};
}
inline ChatMessage user_message(std::string content) {
  return {Role::User, std::move(content)};
}
inline ChatMessage assistant_message(std::string content) {
  return {Role::Assistant, std::move(content)};
}

struct GenerationParams {
  double temperature = 0.0;  // [0, 2]
  std::uint64_t seed = 0;
  int max_tokens = 256;
};

struct EmbeddingVector {
  std::vector<double> values;
  std::string model_id;
};

/// Canonical JSON rendering of a message list; the stable request key is its
/// 64-bit FNV-1a hash in hex. Scripts and replay files are keyed by it.
std::string canonical_messages_json(std::span<const ChatMessage> messages);
std::string request_key(std::span<const ChatMessage> messages);
std::string embedding_key(std::string_view text);

class ChatBackend {
public:
  virtual ~ChatBackend() = default;
  /// First-choice message content of the endpoint, verbatim.
  /// Throws TransportError, TimeoutError, SchemaError.
  virtual std::string chat_complete(std::span<const ChatMessage> messages,
                                    const GenerationParams& params) = 0;
};

class EmbeddingBackend {
public:
  virtual ~EmbeddingBackend() = default;
  /// One vector per input text, same order, uniform dimension.
  /// Throws EmptyInput, TransportError, DimensionMismatch.
  virtual std::vector<EmbeddingVector> embed_texts(
      std::span<const std::string> texts) = 0;
};

/// HTTP endpoint configuration. The API key is read from the environment
/// variable named here; the key itself never appears in config or logs.
struct HttpConfig {
  std::string base_url;  // e.g. http://127.0.0.1:8080/v1
  std::string model;
  std::string api_key_env;
  double timeout_seconds = 30.0;
  int retries = 2;  // on TransportError/TimeoutError only
  int max_inflight = 8;
};

/// Chat-completion client for the common HTTP schema: POST
/// {base}/chat/completions with model/messages/temperature/seed/max_tokens,
/// response read from choices[0].message.content.
class HttpChatBackend : public ChatBackend {
public:
  explicit HttpChatBackend(HttpConfig cfg);
  ~HttpChatBackend() override;
  std::string chat_complete(std::span<const ChatMessage> messages,
                            const GenerationParams& params) override;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Embedding client: POST {base}/embeddings with model/input, response read
/// from data[i].embedding.
class HttpEmbeddingBackend : public EmbeddingBackend {
public:
  explicit HttpEmbeddingBackend(HttpConfig cfg);
  ~HttpEmbeddingBackend() override;
  std::vector<EmbeddingVector> embed_texts(
      std::span<const std::string> texts) override;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Deterministic scripted chat backend for offline runs. Responses are keyed
/// by request_key; a key scripted with several responses yields them in FIFO
/// order (repeating the last when exhausted), so repeated identical requests
/// can be given per-round answers in tests. reset() rewinds all cursors,
/// making two otherwise identical runs byte-identical.
class ScriptedChatBackend : public ChatBackend {
public:
  void script(std::string key, std::string response);
  void script(std::span<const ChatMessage> messages, std::string response);
  void reset();

  std::string chat_complete(std::span<const ChatMessage> messages,
                            const GenerationParams& params) override;

private:
  struct Entry {
    std::vector<std::string> responses;
    std::size_t cursor = 0;
  };
  std::mutex mu_;
  std::map<std::string, Entry> scripts_;
};

/// Embedding mock: a fixed per-text unit vector derived from a hash of the
/// text, so identical inputs always embed identically.
class HashEmbeddingBackend : public EmbeddingBackend {
public:
  explicit HashEmbeddingBackend(std::size_t dimension = 64,
                                std::string model_id = "hash-mock");
  std::vector<EmbeddingVector> embed_texts(
      std::span<const std::string> texts) override;

private:
  std::size_t dimension_;
  std::string model_id_;
};

/// Embedding mock with explicit per-text vectors (tests pin exact cosines).
class ScriptedEmbeddingBackend : public EmbeddingBackend {
public:
  explicit ScriptedEmbeddingBackend(std::string model_id = "scripted-mock");
  void set(std::string text, std::vector<double> values);
  std::vector<EmbeddingVector> embed_texts(
      std::span<const std::string> texts) override;

private:
  std::string model_id_;
  std::map<std::string, std::vector<double>> vectors_;
};

/// Record/playback store for chat and embedding responses, persisted as
/// line-delimited JSON. Playback consumes per-key entries FIFO and repeats
/// the last one when exhausted.
class ReplayLog {
public:
  ReplayLog() = default;
  static ReplayLog load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  void add_chat(const std::string& key, const std::string& response);
  void add_embedding(const std::string& key, const std::vector<double>& values);

  bool empty() const;

private:
  friend class ReplayChatBackend;
  friend class ReplayEmbeddingBackend;
  std::map<std::string, std::vector<std::string>> chat_;
  std::map<std::string, std::vector<std::vector<double>>> embeddings_;
};

/// Playback backend over a ReplayLog; in record mode it wraps an inner
/// backend and captures its responses into the log.
class ReplayChatBackend : public ChatBackend {
public:
  explicit ReplayChatBackend(std::shared_ptr<ReplayLog> log,
                             std::shared_ptr<ChatBackend> inner = nullptr);
  std::string chat_complete(std::span<const ChatMessage> messages,
                            const GenerationParams& params) override;

private:
  std::shared_ptr<ReplayLog> log_;
  std::shared_ptr<ChatBackend> inner_;
  std::mutex mu_;
  std::map<std::string, std::size_t> cursor_;
};

class ReplayEmbeddingBackend : public EmbeddingBackend {
public:
  explicit ReplayEmbeddingBackend(std::shared_ptr<ReplayLog> log,
                                  std::shared_ptr<EmbeddingBackend> inner = nullptr,
                                  std::string model_id = "replay");
  std::vector<EmbeddingVector> embed_texts(
      std::span<const std::string> texts) override;

private:
  std::shared_ptr<ReplayLog> log_;
  std::shared_ptr<EmbeddingBackend> inner_;
  std::string model_id_;
  std::mutex mu_;
  std::map<std::string, std::size_t> cursor_;
};

}  // namespace casner

#endif  // CASNER_BACKEND_HPP
