#include "gkcci/annotate.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "gkcci/hashing.hpp"
#include "gkcci/strings.hpp"

namespace gkcci::annotate {

using groundtruth::LabeledExample;
using groundtruth::Parameter;
using promptkit::PromptFormat;
using promptkit::RenderedExample;

std::string_view backend_kind_name(BackendKind k) {
  switch (k) {
    case BackendKind::HttpCompletion: return "http";
    case BackendKind::HttpChat: return "http-chat";
    case BackendKind::Oracle: return "oracle";
    case BackendKind::Noise: return "noise";
  }
  return "?";
}

std::optional<BackendKind> parse_backend_kind(std::string_view name) {
  if (name == "http") return BackendKind::HttpCompletion;
  if (name == "http-chat") return BackendKind::HttpChat;
  if (name == "oracle") return BackendKind::Oracle;
  if (name == "noise") return BackendKind::Noise;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Backends

namespace {

class HttpBackend : public Backend {
 public:
  HttpBackend(BackendSpec spec, bool chat) : spec_(std::move(spec)), chat_(chat) {
    if (const char* key = std::getenv(spec_.api_key_env.c_str())) api_key_ = key;
  }

  std::string complete(const RenderedExample& rendered) override {
    nlohmann::json body;
    body["model"] = spec_.model_name;
    body["max_tokens"] = spec_.max_output_tokens;
    body["temperature"] = spec_.temperature;
    const char* path;
    if (chat_) {
      path = "/v1/chat/completions";
      nlohmann::json messages = nlohmann::json::array();
      for (const auto& m : rendered.messages) {
        messages.push_back({{"role", m.role}, {"content", m.content}});
      }
      body["messages"] = std::move(messages);
    } else {
      path = "/v1/completions";
      body["prompt"] = rendered.prompt_text;
    }

    // One client per request: httplib clients are not safe for concurrent
    // calls, and the batch runner fans out across threads.
    httplib::Client client(spec_.endpoint_url);
    client.set_connection_timeout(spec_.timeout_seconds, 0);
    client.set_read_timeout(spec_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
      throw TransientBackendError("http request failed: " + httplib::to_string(res.error()));
    }
    if (res->status >= 400 && res->status < 500) {
      throw PermanentBackendError("http " + std::to_string(res->status) + ": " + res->body);
    }
    if (res->status < 200 || res->status >= 300) {
      throw TransientBackendError("http " + std::to_string(res->status));
    }
    try {
      nlohmann::json reply = nlohmann::json::parse(res->body);
      const auto& choice = reply.at("choices").at(0);
      return chat_ ? choice.at("message").at("content").get<std::string>()
                   : choice.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw PermanentBackendError(std::string("malformed response body: ") + e.what());
    }
  }

 private:
  BackendSpec spec_;
  bool chat_;
  std::string api_key_;
};

class OracleBackend : public Backend {
 public:
  explicit OracleBackend(OracleLookup lookup) : lookup_(std::move(lookup)) {}

  std::string complete(const RenderedExample& rendered) override {
    auto it = lookup_.find(rendered.example_id);
    if (it == lookup_.end()) {
      throw PermanentBackendError("oracle has no target for " + rendered.example_id);
    }
    return it->second;
  }

 private:
  OracleLookup lookup_;
};

class NoiseBackend : public Backend {
 public:
  NoiseBackend(BackendSpec spec, OracleLookup lookup,
               std::unordered_map<std::string, LabeledExample> examples)
      : spec_(std::move(spec)), lookup_(std::move(lookup)), examples_(std::move(examples)) {}

  std::string complete(const RenderedExample& rendered) override {
    auto it = lookup_.find(rendered.example_id);
    if (it == lookup_.end()) {
      throw PermanentBackendError("noise oracle has no target for " + rendered.example_id);
    }
    if (!noise_corrupts(spec_.noise_seed, spec_.noise_rate, rendered.example_id)) {
      return it->second;
    }
    std::string base_id = rendered.example_id;
    if (auto hash_pos = base_id.rfind("#s"); hash_pos != std::string::npos) {
      base_id.resize(hash_pos);
    }
    auto ex = examples_.find(base_id);
    if (ex == examples_.end()) return it->second;
    return corrupt_completion(spec_.noise_seed, rendered.example_id, ex->second, it->second,
                              !rendered.is_chat);
  }

 private:
  BackendSpec spec_;
  OracleLookup lookup_;
  std::unordered_map<std::string, LabeledExample> examples_;
};

}  // namespace

OracleLookup make_oracle_lookup(const std::vector<LabeledExample>& examples, PromptFormat format) {
  OracleLookup lookup;
  for (const auto& ex : examples) {
    if (format == PromptFormat::TwoStepStage1) {
      lookup[ex.example_id + "#s1"] = ex.positive ? "Yes" : "No";
      lookup[ex.example_id + "#s2"] =
          promptkit::render(ex, PromptFormat::TwoStepStage2).target_completion;
    } else {
      lookup[ex.example_id] = promptkit::render(ex, format).target_completion;
    }
  }
  return lookup;
}

std::unique_ptr<Backend> make_backend(const BackendSpec& spec,
                                      const std::vector<LabeledExample>& examples,
                                      PromptFormat format) {
  if (spec.noise_rate < 0.0 || spec.noise_rate > 1.0)
    throw std::runtime_error("noise rate must be in [0, 1]");
  if (spec.temperature < 0.0) throw std::runtime_error("temperature must be >= 0");
  if ((spec.kind == BackendKind::HttpCompletion || spec.kind == BackendKind::HttpChat) &&
      spec.endpoint_url.empty()) {
    throw std::runtime_error("http backends need --endpoint");
  }
  switch (spec.kind) {
    case BackendKind::HttpCompletion:
      return std::make_unique<HttpBackend>(spec, false);
    case BackendKind::HttpChat:
      return std::make_unique<HttpBackend>(spec, true);
    case BackendKind::Oracle:
      return std::make_unique<OracleBackend>(make_oracle_lookup(examples, format));
    case BackendKind::Noise: {
      std::unordered_map<std::string, LabeledExample> by_id;
      for (const auto& ex : examples) by_id[ex.example_id] = ex;
      return std::make_unique<NoiseBackend>(spec, make_oracle_lookup(examples, format),
                                            std::move(by_id));
    }
  }
  throw std::runtime_error("unknown backend kind");
}

// ---------------------------------------------------------------------------
// Noise corruption

bool noise_corrupts(std::uint64_t seed, double rate, const std::string& rendered_id) {
  std::uint64_t h = keyed_hash(seed, rendered_id);
  auto threshold = static_cast<std::uint64_t>(std::llround(rate * 1000000.0));
  return h % 1000000ull < threshold;
}

namespace {

std::vector<std::string> whitespace_tokens(std::string_view s) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) tokens.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return tokens;
}

std::string join(const std::vector<std::string>& tokens, std::size_t from, std::size_t to) {
  std::string out;
  for (std::size_t i = from; i < to && i < tokens.size(); ++i) {
    if (!out.empty()) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::string single_value_completion(Parameter p, const std::string& value, bool delimited) {
  std::string out(to_string(p));
  out += ": ";
  out += promptkit::serialize_values({value});
  if (delimited) out += "x-x-x";
  return out;
}

std::string na_completion(Parameter p, bool delimited) {
  std::string out = promptkit::synthesize_negative_completion(p);
  if (delimited) out += "x-x-x";
  return out;
}

}  // namespace

std::string corrupt_completion(std::uint64_t seed, const std::string& rendered_id,
                               const LabeledExample& example,
                               const std::string& oracle_completion, bool delimited) {
  std::uint64_t h = keyed_hash(seed, rendered_id);
  int kind = static_cast<int>((h / 1000000ull) % 4);

  // Stage-1 prompts have a yes/no answer; the only meaningful corruption is a
  // flipped answer.
  if (rendered_id.size() > 3 && rendered_id.substr(rendered_id.size() - 3) == "#s1") {
    return example.positive ? "No" : "Yes";
  }

  Parameter p = example.param;
  if (kind == 0) {
    // Wrong-parameter header: the completion names the next parameter over.
    std::size_t idx = 0;
    for (std::size_t i = 0; i < groundtruth::kAllParameters.size(); ++i) {
      if (groundtruth::kAllParameters[i] == p) idx = i;
    }
    Parameter other = groundtruth::kAllParameters[(idx + 1) % groundtruth::kAllParameters.size()];
    std::string_view old_name = to_string(p);
    if (oracle_completion.rfind(old_name, 0) == 0) {
      return std::string(to_string(other)) + oracle_completion.substr(old_name.size());
    }
    return std::string(to_string(other)) + ": N/A";
  }

  if (!example.positive) {
    // Nothing to truncate or extend on a negative; fabricate a value.
    return single_value_completion(p, "data", delimited);
  }

  const std::string& value = example.expected_values.front();
  if (kind == 1) {
    return na_completion(p, delimited);
  }
  if (kind == 2) {
    auto tokens = whitespace_tokens(value);
    if (tokens.size() >= 2) {
      return single_value_completion(p, join(tokens, 0, tokens.size() - 1), delimited);
    }
    if (value.size() >= 2) {
      return single_value_completion(p, value.substr(0, value.size() / 2), delimited);
    }
    return na_completion(p, delimited);
  }
  // kind == 3: append the words that follow the value in its sentence.
  std::size_t at = example.sentence.text.find(value);
  if (at != std::string::npos) {
    auto tail = whitespace_tokens(
        std::string_view(example.sentence.text).substr(at + value.size()));
    if (!tail.empty()) {
      return single_value_completion(p, value + " " + join(tail, 0, 2), delimited);
    }
    auto head = whitespace_tokens(std::string_view(example.sentence.text).substr(0, at));
    if (!head.empty()) {
      std::size_t from = head.size() >= 2 ? head.size() - 2 : 0;
      return single_value_completion(p, join(head, from, head.size()) + " " + value, delimited);
    }
  }
  return na_completion(p, delimited);
}

// ---------------------------------------------------------------------------
// Cache

CompletionCache::CompletionCache(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;  // fresh cache
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      entries_[j.at("key").get<std::string>()] = j.at("raw").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      // A torn trailing line from an interrupted run is not fatal.
    }
  }
}

std::optional<std::string> CompletionCache::lookup(const std::string& key) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void CompletionCache::append(const std::string& key, const std::string& example_id,
                             const std::string& raw) {
  std::lock_guard<std::mutex> lock(mu_);
  entries_[key] = raw;
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw std::runtime_error("cannot append to cache: " + path_);
  nlohmann::ordered_json j;
  j["key"] = key;
  j["example_id"] = example_id;
  j["raw"] = raw;
  j["ts"] = static_cast<std::int64_t>(
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
  out << j.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace) << '\n';
}

std::string backend_fingerprint(const BackendSpec& spec, PromptFormat format) {
  std::string material;
  material += backend_kind_name(spec.kind);
  material += '|';
  material += spec.endpoint_url;
  material += '|';
  material += spec.model_name;
  material += '|';
  // The two stages share one protocol fingerprint; the stage suffix already
  // distinguishes their cache entries.
  material += format == PromptFormat::TwoStepStage1 ? "two-step" : format_name(format);
  material += '|';
  material += promptkit::kSystemMessage;
  if (spec.kind == BackendKind::Noise) {
    material += "|noise:" + std::to_string(spec.noise_rate) + ":" +
                std::to_string(spec.noise_seed);
  }
  return hex64(fnv1a64(material));
}

// ---------------------------------------------------------------------------
// Batch runner

namespace {

struct Task {
  std::size_t slot;  // index into the output vector
  RenderedExample rendered;
};

struct Outcome {
  std::string raw;
  std::int64_t latency_ms = 0;
  bool from_cache = false;
  std::string error;
};

// Runs rendered tasks against the backend, cache first, bounded concurrency.
std::vector<Outcome> execute(std::vector<Task> tasks, std::size_t n_slots, Backend& backend,
                             const std::string& fingerprint, CompletionCache* cache,
                             const RunOptions& options) {
  std::vector<Outcome> outcomes(n_slots);
  std::vector<Task> pending;
  for (auto& task : tasks) {
    if (cache) {
      std::string key = fingerprint + ":" + task.rendered.example_id;
      if (auto hit = cache->lookup(key)) {
        outcomes[task.slot].raw = *hit;
        outcomes[task.slot].from_cache = true;
        continue;
      }
    }
    pending.push_back(std::move(task));
  }
  if (pending.empty()) return outcomes;

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= pending.size()) return;
      const Task& task = pending[i];
      Outcome& out = outcomes[task.slot];
      for (int attempt = 1; attempt <= options.max_attempts; ++attempt) {
        try {
          auto begin = std::chrono::steady_clock::now();
          out.raw = backend.complete(task.rendered);
          out.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - begin)
                               .count();
          out.error.clear();
          break;
        } catch (const PermanentBackendError& e) {
          out.error = e.what();
          break;
        } catch (const TransientBackendError& e) {
          out.error = e.what();
          if (attempt < options.max_attempts) {
            auto delay = options.backoff_base_ms * (1ll << (attempt - 1));
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
          }
        }
      }
      if (out.error.empty() && cache) {
        cache->append(fingerprint + ":" + task.rendered.example_id, task.rendered.example_id,
                      out.raw);
      }
    }
  };

  std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(1, options.concurrency)),
                            pending.size());
  std::vector<std::thread> threads;
  threads.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  return outcomes;
}

AnnotationRecord make_record(const LabeledExample& ex, const Outcome& outcome,
                             const std::string& fingerprint) {
  AnnotationRecord rec;
  rec.example_id = ex.example_id;
  rec.requested = ex.param;
  rec.raw_completion = outcome.error.empty() ? outcome.raw : "";
  rec.parsed = promptkit::parse_completion(rec.raw_completion, ex.param);
  rec.latency_ms = outcome.latency_ms;
  rec.backend_fingerprint = fingerprint;
  rec.from_cache = outcome.from_cache;
  rec.error = outcome.error;
  return rec;
}

}  // namespace

BatchResult run_batch(const std::vector<LabeledExample>& examples, Backend& backend,
                      const BackendSpec& spec, const RunOptions& options) {
  if (options.concurrency < 1) throw std::runtime_error("concurrency must be >= 1");
  BatchResult result;
  std::string fingerprint = backend_fingerprint(spec, options.format);
  std::unique_ptr<CompletionCache> cache;
  if (!options.cache_path.empty()) cache = std::make_unique<CompletionCache>(options.cache_path);

  bool two_step = options.format == PromptFormat::TwoStepStage1;

  if (!two_step) {
    std::vector<Task> tasks;
    tasks.reserve(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
      tasks.push_back({i, promptkit::render(examples[i], options.format, options.bos, options.eos)});
    }
    auto outcomes = execute(std::move(tasks), examples.size(), backend, fingerprint, cache.get(),
                            options);
    for (std::size_t i = 0; i < examples.size(); ++i) {
      result.records.push_back(make_record(examples[i], outcomes[i], fingerprint));
    }
  } else {
    // Stage 1: presence.
    std::vector<Task> stage1;
    stage1.reserve(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
      auto r = promptkit::render(examples[i], PromptFormat::TwoStepStage1);
      r.example_id += "#s1";
      stage1.push_back({i, std::move(r)});
    }
    auto answers =
        execute(std::move(stage1), examples.size(), backend, fingerprint, cache.get(), options);

    // Stage 2: extraction, only where stage 1 said Yes.
    std::vector<Task> stage2;
    std::vector<bool> said_yes(examples.size(), false);
    for (std::size_t i = 0; i < examples.size(); ++i) {
      if (!answers[i].error.empty()) continue;
      std::string diag;
      auto answer = promptkit::normalize_stage1_answer(answers[i].raw, &diag);
      if (!diag.empty()) result.diagnostics.push_back(examples[i].example_id + ": " + diag);
      if (answer == promptkit::StageOneAnswer::Yes) {
        said_yes[i] = true;
        auto r = promptkit::render(examples[i], PromptFormat::TwoStepStage2);
        r.example_id += "#s2";
        stage2.push_back({i, std::move(r)});
      }
    }
    auto extractions =
        execute(std::move(stage2), examples.size(), backend, fingerprint, cache.get(), options);

    for (std::size_t i = 0; i < examples.size(); ++i) {
      Outcome combined;
      if (!answers[i].error.empty()) {
        combined.error = answers[i].error;
      } else if (!said_yes[i]) {
        combined.raw = promptkit::synthesize_negative_completion(examples[i].param);
        combined.latency_ms = answers[i].latency_ms;
        combined.from_cache = answers[i].from_cache;
      } else if (!extractions[i].error.empty()) {
        combined.error = extractions[i].error;
      } else {
        combined.raw = extractions[i].raw;
        combined.latency_ms = answers[i].latency_ms + extractions[i].latency_ms;
        combined.from_cache = answers[i].from_cache && extractions[i].from_cache;
      }
      result.records.push_back(make_record(examples[i], combined, fingerprint));
    }
  }

  for (const auto& rec : result.records) {
    if (!rec.error.empty()) {
      ++result.failed;
      result.errors.push_back(rec.example_id + ": " + rec.error);
    } else if (rec.from_cache) {
      ++result.cached;
    } else {
      ++result.fresh;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Records JSONL

void write_records_jsonl(const std::vector<AnnotationRecord>& records, std::ostream& out) {
  for (const auto& rec : records) {
    nlohmann::ordered_json j;
    j["example_id"] = rec.example_id;
    j["param"] = to_string(rec.requested);
    j["raw"] = rec.raw_completion;
    j["latency_ms"] = rec.latency_ms;
    j["fingerprint"] = rec.backend_fingerprint;
    j["from_cache"] = rec.from_cache;
    if (!rec.error.empty()) j["error"] = rec.error;
    // A backend can hand back broken encoding; replace rather than abort.
    out << j.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace) << '\n';
  }
}

std::vector<AnnotationRecord> read_records_jsonl(std::istream& in) {
  std::vector<AnnotationRecord> records;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("records line " + std::to_string(lineno) + ": " + e.what());
    }
    AnnotationRecord rec;
    rec.example_id = j.at("example_id").get<std::string>();
    auto param = groundtruth::parse_parameter(j.at("param").get<std::string>());
    if (!param)
      throw std::runtime_error("records line " + std::to_string(lineno) + ": unknown param");
    rec.requested = *param;
    rec.raw_completion = j.at("raw").get<std::string>();
    // Records are never hand-edited: the parse is always recomputed from raw.
    rec.parsed = promptkit::parse_completion(rec.raw_completion, rec.requested);
    rec.latency_ms = j.value("latency_ms", std::int64_t{0});
    rec.backend_fingerprint = j.value("fingerprint", std::string{});
    rec.from_cache = j.value("from_cache", false);
    rec.error = j.value("error", std::string{});
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace gkcci::annotate
