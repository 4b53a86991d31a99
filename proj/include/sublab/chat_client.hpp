#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sublab/demonstrations.hpp"

namespace sublab {

struct ChatClientConfig {
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string api_key;  // empty: read from api_key_env at request time
  std::string api_key_env = "OPENAI_API_KEY";
  std::string model = "gpt-4-0613";
  double temperature = 0.5;
  int max_tokens = 5;
  int max_attempts = 4;  // per (state, sequence) slot, counting unparseable answers
  std::size_t max_in_flight = 4;
  int timeout_seconds = 30;

  /// The explicit key, else the environment variable; throws std::invalid_argument if neither is set.
  std::string resolve_api_key() const;
  /// Throws std::invalid_argument on an empty URL, missing credential or bad limits.
  void validate() const;
};

nlohmann::json chat_request_body(const ChatClientConfig& config, const Prompt& prompt);

/// choices[0].message.content; throws std::runtime_error if absent.
std::string extract_completion_text(const nlohmann::json& response);

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One blocking chat-completion call. Throws TransportError naming the URL
/// and `context` on connection failures and non-2xx statuses.
std::string complete(const ChatClientConfig& config, const Prompt& prompt, const std::string& context = {});

struct GenerationReport {
  DemonstrationSet set;
  std::vector<QuarantinedAttempt> quarantined;
  std::vector<std::string> errors;  // slots that never produced a parseable answer
};

/// Asks for `per_state` answers for every state with the persona's prompt,
/// at most max_in_flight requests at a time. Unparseable answers are
/// quarantined and retried; transport failures are retried too. Output
/// order depends only on (state, sequence), not on completion order.
GenerationReport generate_demonstrations(const ChatClientConfig& config, const std::vector<GameState>& states,
                                         const PersonaSpec& persona, std::size_t per_state);

}  // namespace sublab
