#include "lt/provider.hpp"

#include <chrono>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>

#include <httplib.h>

#include "lt/error.hpp"
#include "lt/model.hpp"

namespace lt {

using nlohmann::json;

std::string to_string(Role r) {
  switch (r) {
    case Role::initial: return "initial";
    case Role::grounding: return "grounding";
    case Role::refinement: return "refinement";
    case Role::describe: return "describe";
  }
  return "unknown";
}

std::optional<Role> role_from_string(std::string_view s) {
  if (s == "initial") return Role::initial;
  if (s == "grounding") return Role::grounding;
  if (s == "refinement") return Role::refinement;
  if (s == "describe") return Role::describe;
  return std::nullopt;
}

std::string to_string(FinishReason r) {
  switch (r) {
    case FinishReason::complete: return "complete";
    case FinishReason::truncated: return "truncated";
    case FinishReason::error: return "error";
  }
  return "unknown";
}

// ---- scripted --------------------------------------------------------------

ScriptedProvider::Queues ScriptedProvider::parse_queues(const json& obj, bool allow_samples) {
  if (!obj.is_object()) throw MalformedScript("script must be a JSON object");
  Queues q;
  for (const auto& [key, value] : obj.items()) {
    if (key == "samples" && allow_samples) continue;
    auto role = role_from_string(key);
    if (!role) throw MalformedScript("unknown role tag '" + key + "'");
    if (!value.is_array()) throw MalformedScript("responses for '" + key + "' must be an array");
    auto& queue = q.pending[*role];
    for (const auto& r : value) {
      if (!r.is_string()) throw MalformedScript("responses for '" + key + "' must be strings");
      queue.push_back(r.get<std::string>());
    }
  }
  return q;
}

ScriptedProvider::ScriptedProvider(const json& script) {
  global_ = parse_queues(script, true);
  if (auto it = script.find("samples"); it != script.end()) {
    if (!it->is_object()) throw MalformedScript("'samples' must map sample ids to scripts");
    for (const auto& [id, sub] : it->items()) per_sample_[id] = parse_queues(sub, false);
  }
}

const ScriptedProvider::Queues* ScriptedProvider::find(const std::string& scope) const {
  if (!scope.empty()) {
    if (auto it = per_sample_.find(scope); it != per_sample_.end()) return &it->second;
  }
  return &global_;
}

ChatResponse ScriptedProvider::chat(const ChatRequest& req) {
  std::lock_guard lock(mu_);
  auto* queues = const_cast<Queues*>(find(req.scope));
  auto& pending = queues->pending[req.role];
  if (pending.empty()) {
    throw ProviderExhausted("scripted provider has no remaining '" + to_string(req.role) + "' response" +
                            (req.scope.empty() ? std::string() : " for " + req.scope));
  }
  ChatResponse resp;
  resp.text = std::move(pending.front());
  pending.pop_front();
  ++queues->consumed[req.role];
  ++total_;
  resp.model_id = "scripted";
  resp.finish_reason = resp.text.empty() ? FinishReason::error : FinishReason::complete;
  return resp;
}

std::size_t ScriptedProvider::consumed(Role role, const std::string& scope) const {
  std::lock_guard lock(mu_);
  const Queues* q = find(scope);
  auto it = q->consumed.find(role);
  return it == q->consumed.end() ? 0 : it->second;
}

std::size_t ScriptedProvider::remaining(Role role, const std::string& scope) const {
  std::lock_guard lock(mu_);
  const Queues* q = find(scope);
  auto it = q->pending.find(role);
  return it == q->pending.end() ? 0 : it->second.size();
}

std::size_t ScriptedProvider::total_consumed() const {
  std::lock_guard lock(mu_);
  return total_;
}

std::unique_ptr<ScriptedProvider> load_scripted_provider(const std::filesystem::path& script_path) {
  std::string text;
  try {
    text = read_text_file(script_path);
  } catch (const MissingFile&) {
    throw MalformedScript("cannot read script " + script_path.string());
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw MalformedScript("script " + script_path.string() + ": " + e.what());
  }
  return std::make_unique<ScriptedProvider>(doc);
}

// ---- hashing embedder ------------------------------------------------------

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

bool is_token_char(unsigned char c) { return std::isalnum(c) || c == '_'; }

}  // namespace

HashingEmbedder::HashingEmbedder(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) throw InvalidValue("embedding dimension must be positive");
}

EmbeddingVector HashingEmbedder::embed(std::string_view text) {
  if (text.empty()) throw EmptyInput();
  std::vector<double> v(dimension_, 0.0);
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    v[fnv1a(token) % dimension_] += 1.0;
    token.clear();
  };
  for (unsigned char c : text) {
    if (is_token_char(c)) token.push_back(static_cast<char>(std::tolower(c)));
    else flush();
  }
  flush();

  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm == 0.0) {
    // No word characters at all; fall back to a single bucket for the raw text.
    v[fnv1a(text) % dimension_] = 1.0;
    norm = 1.0;
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return {std::move(v), "hashing-" + std::to_string(dimension_)};
}

// ---- http ------------------------------------------------------------------

HttpProvider::HttpProvider(HttpProviderOptions options) : options_(std::move(options)) {
  if (options_.api_key.empty()) {
    if (const char* key = std::getenv("LT_API_KEY")) options_.api_key = key;
  }
  const std::string& ep = options_.endpoint;
  auto scheme_end = ep.find("://");
  if (scheme_end == std::string::npos) throw InvalidValue("provider endpoint needs a scheme: " + ep);
  auto path_start = ep.find('/', scheme_end + 3);
  base_ = ep.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? std::string() : ep.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

json HttpProvider::post(const std::string& path, const json& body, double timeout) {
  httplib::Client client(base_);
  auto usec = std::chrono::microseconds(static_cast<std::int64_t>(timeout * 1e6));
  client.set_connection_timeout(usec);
  client.set_read_timeout(usec);
  client.set_write_timeout(usec);
  if (!options_.api_key.empty()) client.set_bearer_token_auth(options_.api_key);

  const std::string payload = body.dump();
  for (int attempt = 0;; ++attempt) {
    auto res = client.Post(path_prefix_ + path, payload, "application/json");
    if (!res) {
      auto err = res.error();
      bool timed_out = err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout ||
                       err == httplib::Error::Write;
      if (timed_out) {
        if (attempt == 0) continue;
        throw Timeout("request to " + base_ + path_prefix_ + path + " timed out");
      }
      throw ProviderError("request to " + base_ + path_prefix_ + path + " failed: " + httplib::to_string(err));
    }
    if (res->status < 200 || res->status >= 300) throw HttpError(res->status, res->body.substr(0, 500));
    try {
      return json::parse(res->body);
    } catch (const json::parse_error& e) {
      throw ProviderError(std::string("unparseable provider response: ") + e.what());
    }
  }
}

ChatResponse HttpProvider::chat(const ChatRequest& req) {
  if (req.user_text.empty()) throw EmptyInput();
  json messages = json::array();
  if (!req.system_text.empty()) messages.push_back({{"role", "system"}, {"content", req.system_text}});
  messages.push_back({{"role", "user"}, {"content", req.user_text}});
  json body = {{"model", options_.chat_model},
               {"messages", messages},
               {"temperature", req.temperature},
               {"max_tokens", req.max_output_tokens}};

  json doc = post("/chat/completions", body, req.timeout);
  ChatResponse resp;
  try {
    const json& choice = doc.at("choices").at(0);
    const json& content = choice.at("message").at("content");
    resp.text = content.is_string() ? content.get<std::string>() : std::string();
    resp.model_id = doc.value("model", options_.chat_model);
    std::string finish = choice.contains("finish_reason") && choice["finish_reason"].is_string()
                             ? choice["finish_reason"].get<std::string>()
                             : "stop";
    if (finish == "length") resp.finish_reason = FinishReason::truncated;
    else if (resp.text.empty()) resp.finish_reason = FinishReason::error;
    else resp.finish_reason = FinishReason::complete;
  } catch (const json::exception& e) {
    throw ProviderError(std::string("malformed chat completion: ") + e.what());
  }
  return resp;
}

EmbeddingVector HttpProvider::embed(std::string_view text) {
  if (text.empty()) throw EmptyInput();
  json body = {{"model", options_.embed_model}, {"input", std::string(text)}};
  json doc = post("/embeddings", body, options_.timeout);
  EmbeddingVector out;
  try {
    for (const auto& x : doc.at("data").at(0).at("embedding")) {
      double d = x.get<double>();
      if (!std::isfinite(d)) throw ProviderError("embedding contains a non-finite value");
      out.values.push_back(d);
    }
    out.model_id = doc.value("model", options_.embed_model);
  } catch (const json::exception& e) {
    throw ProviderError(std::string("malformed embedding response: ") + e.what());
  }
  std::lock_guard lock(mu_);
  if (dimension_ == 0) dimension_ = out.values.size();
  else if (dimension_ != out.values.size())
    throw ProviderError("embedding dimension changed from " + std::to_string(dimension_) + " to " +
                        std::to_string(out.values.size()));
  return out;
}

std::size_t HttpProvider::dimension() const {
  std::lock_guard lock(mu_);
  return dimension_;
}

}  // namespace lt
