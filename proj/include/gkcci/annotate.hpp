#ifndef GKCCI_ANNOTATE_HPP_
#define GKCCI_ANNOTATE_HPP_

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "gkcci/groundtruth.hpp"
#include "gkcci/promptkit.hpp"

namespace gkcci::annotate {

enum class BackendKind { HttpCompletion, HttpChat, Oracle, Noise };

std::string_view backend_kind_name(BackendKind k);
std::optional<BackendKind> parse_backend_kind(std::string_view name);

struct BackendSpec {
  BackendKind kind = BackendKind::Oracle;
  std::string endpoint_url;  // http kinds, e.g. "http://localhost:8089"
  std::string model_name;
  double temperature = 0.0;
  int max_output_tokens = 256;
  double noise_rate = 0.0;       // noise kind only
  std::uint64_t noise_seed = 0;  // noise kind only
  std::string api_key_env = "GKCCI_API_KEY";
  int timeout_seconds = 60;
};

// Retryable (network failures, timeouts, 5xx).
struct TransientBackendError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Never retried (4xx, malformed response bodies).
struct PermanentBackendError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // Returns the first choice's text verbatim. Throws Transient/Permanent
  // errors. Must be safe to call from multiple threads.
  virtual std::string complete(const promptkit::RenderedExample& rendered) = 0;
};

// Ground-truth targets keyed by rendered example id. Two-step lookups carry
// "#s1"/"#s2" suffixes for the stage prompts.
using OracleLookup = std::unordered_map<std::string, std::string>;

OracleLookup make_oracle_lookup(const std::vector<groundtruth::LabeledExample>& examples,
                                promptkit::PromptFormat format);

// Oracle/Noise kinds need the examples they will replay (and, for Noise,
// corrupt); http kinds ignore them.
std::unique_ptr<Backend> make_backend(const BackendSpec& spec,
                                      const std::vector<groundtruth::LabeledExample>& examples,
                                      promptkit::PromptFormat format);

// Noise corruption is a pure function of (seed, rendered id, example), so an
// evaluation can replay it without touching the backend:
//   h = keyed_hash(seed, rendered_id)
//   corrupted iff h % 1000000 < round(rate * 1e6); kind = (h / 1000000) % 4
// Kinds: 0 wrong-parameter header, 1 N/A flip, 2 truncated value,
// 3 value plus appended neighbor words. Negatives fabricate the value "data"
// for kinds 1-3.
bool noise_corrupts(std::uint64_t seed, double rate, const std::string& rendered_id);
std::string corrupt_completion(std::uint64_t seed, const std::string& rendered_id,
                               const groundtruth::LabeledExample& example,
                               const std::string& oracle_completion, bool delimited);

struct AnnotationRecord {
  std::string example_id;
  groundtruth::Parameter requested = groundtruth::Parameter::Sender;
  std::string raw_completion;
  promptkit::ParsedCompletion parsed;  // always parse_completion(raw, requested)
  std::int64_t latency_ms = 0;
  std::string backend_fingerprint;
  bool from_cache = false;
  std::string error;  // non-empty when retries were exhausted
};

// Append-only JSONL cache: {"key","example_id","raw","ts"}.
class CompletionCache {
 public:
  explicit CompletionCache(std::string path);
  std::optional<std::string> lookup(const std::string& key) const;
  void append(const std::string& key, const std::string& example_id, const std::string& raw);

 private:
  std::string path_;
  std::unordered_map<std::string, std::string> entries_;
  mutable std::mutex mu_;
};

// Identifies everything that can change a completion, so switching prompt
// variants or models never serves stale cache entries.
std::string backend_fingerprint(const BackendSpec& spec, promptkit::PromptFormat format);

struct RunOptions {
  promptkit::PromptFormat format = promptkit::PromptFormat::Base;
  std::string bos, eos;
  int concurrency = 4;
  std::string cache_path;  // empty disables the cache
  int max_attempts = 5;
  int backoff_base_ms = 1000;  // exponential, factor 2
};

struct BatchResult {
  std::vector<AnnotationRecord> records;  // input order
  int fresh = 0;
  int cached = 0;
  int failed = 0;
  std::vector<std::string> errors;      // per-example failure summary
  std::vector<std::string> diagnostics; // e.g. unparseable stage-1 answers
};

// Runs every example through the backend with at most `concurrency` requests
// in flight. Transient errors back off exponentially (max_attempts tries);
// exhausted examples yield an empty-completion failure record rather than
// aborting the batch. With format TwoStepStage1 the runner drives the full
// two-step protocol: stage 2 runs only for stage-1 Yes answers and a No
// synthesizes "<Param>: N/A".
BatchResult run_batch(const std::vector<groundtruth::LabeledExample>& examples, Backend& backend,
                      const BackendSpec& spec, const RunOptions& options);

// Records JSONL I/O.
void write_records_jsonl(const std::vector<AnnotationRecord>& records, std::ostream& out);
std::vector<AnnotationRecord> read_records_jsonl(std::istream& in);

}  // namespace gkcci::annotate

#endif  // GKCCI_ANNOTATE_HPP_
