#include "sublab/chat_client.hpp"

#include <atomic>
#include <cstdlib>
#include <optional>
#include <thread>

#include "httplib.h"

namespace sublab {

using nlohmann::json;

std::string ChatClientConfig::resolve_api_key() const {
  if (!api_key.empty()) return api_key;
  if (!api_key_env.empty()) {
    if (const char* env = std::getenv(api_key_env.c_str()); env != nullptr && *env != '\0') return env;
  }
  throw std::invalid_argument("no API key: set api_key or the " + api_key_env + " environment variable");
}

void ChatClientConfig::validate() const {
  if (base_url.empty()) throw std::invalid_argument("chat endpoint base_url is empty");
  if (path.empty() || path.front() != '/') throw std::invalid_argument("chat endpoint path must start with '/'");
  if (model.empty()) throw std::invalid_argument("chat model id is empty");
  if (max_attempts < 1) throw std::invalid_argument("max_attempts must be at least 1");
  if (max_in_flight < 1) throw std::invalid_argument("max_in_flight must be at least 1");
  if (max_tokens < 1) throw std::invalid_argument("max_tokens must be at least 1");
  if (timeout_seconds < 1) throw std::invalid_argument("timeout_seconds must be at least 1");
  resolve_api_key();
}

json chat_request_body(const ChatClientConfig& config, const Prompt& prompt) {
  return {{"model", config.model},
          {"messages", json::array({{{"role", "system"}, {"content", prompt.system}},
                                    {{"role", "user"}, {"content", prompt.user}}})},
          {"temperature", config.temperature},
          {"max_tokens", config.max_tokens}};
}

std::string extract_completion_text(const json& response) {
  try {
    return response.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("response has no choices[0].message.content: ") + e.what());
  }
}

namespace {

httplib::Client make_client(const ChatClientConfig& config) {
  httplib::Client client(config.base_url);
  if (!client.is_valid()) {
    throw TransportError("cannot connect to " + config.base_url +
                         " (https needs a build with OpenSSL support)");
  }
  client.set_connection_timeout(config.timeout_seconds, 0);
  client.set_read_timeout(config.timeout_seconds, 0);
  client.set_write_timeout(config.timeout_seconds, 0);
  return client;
}

std::string post(httplib::Client& client, const ChatClientConfig& config, const std::string& key,
                 const Prompt& prompt, const std::string& context) {
  const std::string where = config.base_url + config.path + (context.empty() ? "" : " [" + context + "]");
  const httplib::Headers headers{{"Authorization", "Bearer " + key}};
  auto res = client.Post(config.path, headers, chat_request_body(config, prompt).dump(), "application/json");
  if (!res) throw TransportError("request to " + where + " failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("HTTP " + std::to_string(res->status) + " from " + where + ": " + res->body.substr(0, 200));
  }
  try {
    return extract_completion_text(json::parse(res->body));
  } catch (const std::exception& e) {
    throw TransportError("bad response body from " + where + ": " + e.what());
  }
}

std::string describe(const GameState& state) {
  if (const auto* u = std::get_if<UltimatumState>(&state)) return "ultimatum offer " + std::to_string(u->offer);
  if (const auto* m = std::get_if<MarshmallowState>(&state)) return "marshmallow wait " + to_string(m->wait);
  if (const auto* g = std::get_if<GambleState>(&state)) {
    return "gamble " + to_string(g->role) + " epsilon " + std::to_string(g->epsilon);
  }
  return "procrastination horizon " + std::to_string(std::get<ProcrastinationState>(state).horizon);
}

struct SlotResult {
  std::optional<DemonstrationRecord> record;
  std::vector<QuarantinedAttempt> quarantined;
  std::optional<std::string> error;
};

}  // namespace

std::string complete(const ChatClientConfig& config, const Prompt& prompt, const std::string& context) {
  config.validate();
  auto client = make_client(config);
  return post(client, config, config.resolve_api_key(), prompt, context);
}

GenerationReport generate_demonstrations(const ChatClientConfig& config, const std::vector<GameState>& states,
                                         const PersonaSpec& persona, std::size_t per_state) {
  config.validate();
  if (states.empty()) throw std::invalid_argument("no states to generate demonstrations for");
  const Game game = game_of(states.front());
  for (const auto& s : states) {
    if (game_of(s) != game) throw std::invalid_argument("all states must belong to one game");
  }
  const std::string key = config.resolve_api_key();
  const IlSpace space = il_space(states.front());

  std::vector<Prompt> prompts;
  prompts.reserve(states.size());
  for (const auto& s : states) prompts.push_back(render_prompt(s, persona));

  const std::size_t slot_count = states.size() * per_state;
  std::vector<SlotResult> slots(slot_count);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    std::optional<httplib::Client> client;
    for (std::size_t i = next++; i < slot_count; i = next++) {
      const std::size_t si = i / per_state;
      const std::size_t seq = i % per_state;
      const GameState& state = states[si];
      const int horizon = std::holds_alternative<ProcrastinationState>(state)
                              ? std::get<ProcrastinationState>(state).horizon
                              : 4;
      const std::string context = describe(state) + " seq " + std::to_string(seq);
      SlotResult& out = slots[i];
      std::string last_error;
      for (int attempt = 1; attempt <= config.max_attempts && !out.record; ++attempt) {
        std::string text;
        try {
          if (!client) client.emplace(make_client(config));
          text = post(*client, config, key, prompts[si], context);
        } catch (const TransportError& e) {
          last_error = e.what();
          continue;
        }
        try {
          DemonstrationRecord r;
          r.persona = persona;
          r.state = state;
          r.state_index = il_state_index(state);
          r.system_prompt = prompts[si].system;
          r.user_prompt = prompts[si].user;
          r.action = parse_response(game, text, horizon);
          r.raw_response = text;
          r.meta = {config.model, config.temperature, config.max_tokens, DemoSource::Live};
          out.record = std::move(r);
        } catch (const UnparseableResponse& e) {
          out.quarantined.push_back({state, seq, attempt, text, e.what()});
          last_error = e.what();
        }
      }
      if (!out.record) {
        out.error = context + ": no usable answer after " + std::to_string(config.max_attempts) +
                    " attempts; last: " + last_error;
      }
    }
  };

  const std::size_t n_threads = std::min(config.max_in_flight, slot_count);
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  GenerationReport report{DemonstrationSet(game, space.state_count, space.action_count), {}, {}};
  for (auto& slot : slots) {
    if (slot.record) report.set.add(std::move(*slot.record));
    for (auto& q : slot.quarantined) report.quarantined.push_back(std::move(q));
    if (slot.error) report.errors.push_back(std::move(*slot.error));
  }
  return report;
}

}  // namespace sublab
