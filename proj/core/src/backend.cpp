#include "casner/backend.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>

#ifdef CASNER_HTTPS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <json.hpp>

#include "casner/errors.hpp"
#include "casner/hash.hpp"

namespace casner {

using nlohmann::json;

std::string_view role_name(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

std::string canonical_messages_json(std::span<const ChatMessage> messages) {
  json arr = json::array();
  for (const auto& m : messages)
    arr.push_back({{"role", role_name(m.role)}, {"content", m.content}});
  return arr.dump();
}

std::string request_key(std::span<const ChatMessage> messages) {
  return to_hex(fnv1a64(canonical_messages_json(messages)));
}

std::string embedding_key(std::string_view text) {
  return to_hex(fnv1a64(text, fnv1a64("embed:")));
}

// ---------------------------------------------------------------------------
// HTTP backends
// ---------------------------------------------------------------------------

namespace {

struct ParsedUrl {
  std::string host;  // scheme://host[:port]
  std::string path;  // base path, no trailing slash
};

ParsedUrl split_url(const std::string& base_url) {
  auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos)
    throw TransportError("endpoint URL lacks a scheme: " + base_url);
  auto path_begin = base_url.find('/', scheme_end + 3);
  ParsedUrl out;
  if (path_begin == std::string::npos) {
    out.host = base_url;
  } else {
    out.host = base_url.substr(0, path_begin);
    out.path = base_url.substr(path_begin);
  }
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

class HttpSession {
public:
  explicit HttpSession(const HttpConfig& cfg)
      : cfg_(cfg), url_(split_url(cfg.base_url)) {}

  json post_json(const std::string& endpoint, const json& body) {
    int attempts = cfg_.retries + 1;
    while (true) {
      --attempts;
      try {
        return post_once(endpoint, body);
      } catch (const SchemaError&) {
        throw;  // never retried
      } catch (const TransportError&) {
        if (attempts <= 0) throw;
      } catch (const TimeoutError&) {
        if (attempts <= 0) throw;
      }
    }
  }

private:
  json post_once(const std::string& endpoint, const json& body) {
    httplib::Client client(url_.host);
    client.set_connection_timeout(std::chrono::milliseconds(
        static_cast<int>(cfg_.timeout_seconds * 1000)));
    client.set_read_timeout(std::chrono::milliseconds(
        static_cast<int>(cfg_.timeout_seconds * 1000)));
    if (!cfg_.api_key_env.empty()) {
      if (const char* key = std::getenv(cfg_.api_key_env.c_str()))
        client.set_bearer_token_auth(key);
    }
    auto res = client.Post(url_.path + endpoint, body.dump(), "application/json");
    if (!res) {
      if (res.error() == httplib::Error::ConnectionTimeout)
        throw TimeoutError("request timed out against " + cfg_.base_url);
      throw TransportError("request failed against " + cfg_.base_url + ": " +
                           httplib::to_string(res.error()));
    }
    if (res->status >= 400)
      throw TransportError("HTTP " + std::to_string(res->status) + " from " +
                           cfg_.base_url);
    json parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded())
      throw SchemaError("response body is not valid JSON");
    return parsed;
  }

  HttpConfig cfg_;
  ParsedUrl url_;
};

}  // namespace

struct HttpChatBackend::Impl {
  HttpConfig cfg;
  HttpSession session;
  explicit Impl(HttpConfig c) : cfg(std::move(c)), session(cfg) {}
};

HttpChatBackend::HttpChatBackend(HttpConfig cfg)
    : impl_(std::make_unique<Impl>(std::move(cfg))) {}
HttpChatBackend::~HttpChatBackend() = default;

std::string HttpChatBackend::chat_complete(std::span<const ChatMessage> messages,
                                           const GenerationParams& params) {
  json body;
  body["model"] = impl_->cfg.model;
  body["messages"] = json::array();
  for (const auto& m : messages)
    body["messages"].push_back(
        {{"role", role_name(m.role)}, {"content", m.content}});
  body["temperature"] = params.temperature;
  body["seed"] = params.seed;
  body["max_tokens"] = params.max_tokens;

  json res = impl_->session.post_json("/chat/completions", body);
  if (!res.contains("choices") || !res["choices"].is_array() ||
      res["choices"].empty())
    throw SchemaError("response lacks choices");
  const json& msg = res["choices"][0];
  if (!msg.contains("message") || !msg["message"].contains("content") ||
      !msg["message"]["content"].is_string())
    throw SchemaError("response lacks choices[0].message.content");
  return msg["message"]["content"].get<std::string>();
}

struct HttpEmbeddingBackend::Impl {
  HttpConfig cfg;
  HttpSession session;
  explicit Impl(HttpConfig c) : cfg(std::move(c)), session(cfg) {}
};

HttpEmbeddingBackend::HttpEmbeddingBackend(HttpConfig cfg)
    : impl_(std::make_unique<Impl>(std::move(cfg))) {}
HttpEmbeddingBackend::~HttpEmbeddingBackend() = default;

std::vector<EmbeddingVector> HttpEmbeddingBackend::embed_texts(
    std::span<const std::string> texts) {
  if (texts.empty()) throw EmptyInput("embed_texts requires at least one text");
  json body;
  body["model"] = impl_->cfg.model;
  body["input"] = json::array();
  for (const auto& t : texts) body["input"].push_back(t);

  json res = impl_->session.post_json("/embeddings", body);
  if (!res.contains("data") || !res["data"].is_array() ||
      res["data"].size() != texts.size())
    throw SchemaError("embedding response lacks a data entry per input");
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  std::size_t dim = 0;
  for (const auto& item : res["data"]) {
    if (!item.contains("embedding") || !item["embedding"].is_array())
      throw SchemaError("embedding response entry lacks an embedding array");
    EmbeddingVector v;
    v.model_id = impl_->cfg.model;
    for (const auto& x : item["embedding"]) v.values.push_back(x.get<double>());
    if (dim == 0)
      dim = v.values.size();
    else if (v.values.size() != dim)
      throw DimensionMismatch("embedding dimensions differ within one response");
    out.push_back(std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mocks
// ---------------------------------------------------------------------------

void ScriptedChatBackend::script(std::string key, std::string response) {
  std::lock_guard lock(mu_);
  scripts_[std::move(key)].responses.push_back(std::move(response));
}

void ScriptedChatBackend::script(std::span<const ChatMessage> messages,
                                 std::string response) {
  script(request_key(messages), std::move(response));
}

void ScriptedChatBackend::reset() {
  std::lock_guard lock(mu_);
  for (auto& [_, entry] : scripts_) entry.cursor = 0;
}

std::string ScriptedChatBackend::chat_complete(
    std::span<const ChatMessage> messages, const GenerationParams&) {
  std::lock_guard lock(mu_);
  auto it = scripts_.find(request_key(messages));
  if (it == scripts_.end())
    throw TransportError("no scripted response for request key " +
                         request_key(messages));
  Entry& e = it->second;
  const std::string& r =
      e.responses[std::min(e.cursor, e.responses.size() - 1)];
  ++e.cursor;
  return r;
}

HashEmbeddingBackend::HashEmbeddingBackend(std::size_t dimension,
                                           std::string model_id)
    : dimension_(dimension), model_id_(std::move(model_id)) {}

std::vector<EmbeddingVector> HashEmbeddingBackend::embed_texts(
    std::span<const std::string> texts) {
  if (texts.empty()) throw EmptyInput("embed_texts requires at least one text");
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    std::mt19937_64 rng(splitmix64(fnv1a64(t)));
    std::normal_distribution<double> gauss(0.0, 1.0);
    EmbeddingVector v;
    v.model_id = model_id_;
    v.values.resize(dimension_);
    double norm2 = 0.0;
    for (auto& x : v.values) {
      x = gauss(rng);
      norm2 += x * x;
    }
    const double norm = std::sqrt(norm2);
    for (auto& x : v.values) x /= norm;
    out.push_back(std::move(v));
  }
  return out;
}

ScriptedEmbeddingBackend::ScriptedEmbeddingBackend(std::string model_id)
    : model_id_(std::move(model_id)) {}

void ScriptedEmbeddingBackend::set(std::string text, std::vector<double> values) {
  vectors_[std::move(text)] = std::move(values);
}

std::vector<EmbeddingVector> ScriptedEmbeddingBackend::embed_texts(
    std::span<const std::string> texts) {
  if (texts.empty()) throw EmptyInput("embed_texts requires at least one text");
  std::vector<EmbeddingVector> out;
  std::size_t dim = 0;
  for (const auto& t : texts) {
    auto it = vectors_.find(t);
    if (it == vectors_.end())
      throw TransportError("no scripted embedding for text '" + t + "'");
    if (dim == 0)
      dim = it->second.size();
    else if (it->second.size() != dim)
      throw DimensionMismatch("scripted embeddings have mixed dimensions");
    out.push_back({it->second, model_id_});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Replay
// ---------------------------------------------------------------------------

ReplayLog ReplayLog::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open replay file " + path.string());
  ReplayLog log;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("kind") || !j.contains("key"))
      throw ParseError("malformed replay entry", lineno);
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "chat") {
      log.chat_[j["key"].get<std::string>()].push_back(
          j["response"].get<std::string>());
    } else if (kind == "embedding") {
      log.embeddings_[j["key"].get<std::string>()].push_back(
          j["values"].get<std::vector<double>>());
    } else {
      throw ParseError("unknown replay entry kind '" + kind + "'", lineno);
    }
  }
  return log;
}

void ReplayLog::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write replay file " + path.string());
  for (const auto& [key, responses] : chat_)
    for (const auto& r : responses)
      out << json({{"kind", "chat"}, {"key", key}, {"response", r}}).dump()
          << '\n';
  for (const auto& [key, entries] : embeddings_)
    for (const auto& v : entries)
      out << json({{"kind", "embedding"}, {"key", key}, {"values", v}}).dump()
          << '\n';
}

void ReplayLog::add_chat(const std::string& key, const std::string& response) {
  chat_[key].push_back(response);
}

void ReplayLog::add_embedding(const std::string& key,
                              const std::vector<double>& values) {
  embeddings_[key].push_back(values);
}

bool ReplayLog::empty() const { return chat_.empty() && embeddings_.empty(); }

ReplayChatBackend::ReplayChatBackend(std::shared_ptr<ReplayLog> log,
                                     std::shared_ptr<ChatBackend> inner)
    : log_(std::move(log)), inner_(std::move(inner)) {}

std::string ReplayChatBackend::chat_complete(
    std::span<const ChatMessage> messages, const GenerationParams& params) {
  const std::string key = request_key(messages);
  if (inner_) {  // record mode
    std::string response = inner_->chat_complete(messages, params);
    std::lock_guard lock(mu_);
    log_->add_chat(key, response);
    return response;
  }
  std::lock_guard lock(mu_);
  auto it = log_->chat_.find(key);
  if (it == log_->chat_.end())
    throw TransportError("replay log has no response for key " + key);
  std::size_t& cur = cursor_[key];
  const std::string& r = it->second[std::min(cur, it->second.size() - 1)];
  ++cur;
  return r;
}

ReplayEmbeddingBackend::ReplayEmbeddingBackend(
    std::shared_ptr<ReplayLog> log, std::shared_ptr<EmbeddingBackend> inner,
    std::string model_id)
    : log_(std::move(log)), inner_(std::move(inner)),
      model_id_(std::move(model_id)) {}

std::vector<EmbeddingVector> ReplayEmbeddingBackend::embed_texts(
    std::span<const std::string> texts) {
  if (texts.empty()) throw EmptyInput("embed_texts requires at least one text");
  if (inner_) {  // record mode
    auto vectors = inner_->embed_texts(texts);
    std::lock_guard lock(mu_);
    for (std::size_t i = 0; i < texts.size(); ++i)
      log_->add_embedding(embedding_key(texts[i]), vectors[i].values);
    return vectors;
  }
  std::lock_guard lock(mu_);
  std::vector<EmbeddingVector> out;
  std::size_t dim = 0;
  for (const auto& t : texts) {
    const std::string key = embedding_key(t);
    auto it = log_->embeddings_.find(key);
    if (it == log_->embeddings_.end())
      throw TransportError("replay log has no embedding for key " + key);
    std::size_t& cur = cursor_[key];
    const auto& v = it->second[std::min(cur, it->second.size() - 1)];
    ++cur;
    if (dim == 0)
      dim = v.size();
    else if (v.size() != dim)
      throw DimensionMismatch("replayed embeddings have mixed dimensions");
    out.push_back({v, model_id_});
  }
  return out;
}

}  // namespace casner
