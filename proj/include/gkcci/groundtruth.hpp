#ifndef GKCCI_GROUNDTRUTH_HPP_
#define GKCCI_GROUNDTRUTH_HPP_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gkcci/corpus.hpp"

namespace gkcci::groundtruth {

// The eight GKC-CI parameter kinds.
enum class Parameter {
  Sender,
  Subject,
  Recipient,
  Attribute,
  Aim,
  Condition,
  Modality,
  Consequence,
};

inline constexpr std::array<Parameter, 8> kAllParameters = {
    Parameter::Sender,    Parameter::Subject,  Parameter::Recipient,
    Parameter::Attribute, Parameter::Aim,      Parameter::Condition,
    Parameter::Modality,  Parameter::Consequence};

std::string_view to_string(Parameter p);

// Accepts canonical names case-insensitively plus "TP:"-prefixed
// transmission-principle spellings ("TP:Aim" etc.).
std::optional<Parameter> parse_parameter(std::string_view label);

struct TextSpan {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
};

// One Brat text-bound annotation (a T-line).
struct GroundTruthAnnotation {
  std::string id;       // e.g. "T7"
  std::string label;    // label as written in the file (kept for round-trips)
  Parameter param = Parameter::Sender;
  std::vector<TextSpan> spans;
  std::string surface_text;  // document text at spans, space-joined
};

struct BratParseResult {
  std::vector<GroundTruthAnnotation> annotations;
  std::vector<std::string> warnings;
};

// Parses Brat standoff text against the annotated document. Non-T line types
// (A, R, E, M, N, #) are ignored. Malformed T-lines throw with the line
// number; unknown labels and surface-text mismatches produce warnings.
BratParseResult parse_brat(const std::string& ann_text, const std::string& doc_text);

// Inverse of parse_brat for well-formed input, byte-for-byte.
std::string serialize_t_line(const GroundTruthAnnotation& ann);

struct LabeledExample {
  std::string example_id;  // "<site>_<year>:s<idx>:<Param>"
  corpus::Sentence sentence;
  Parameter param = Parameter::Sender;
  std::vector<std::string> expected_values;  // empty for negatives
  bool positive = false;
  // True when a contributing annotation was discontinuous or crossed the
  // sentence boundary; such examples drop out of accuracy denominators
  // unless explicitly included.
  bool flagged = false;
};

struct ExampleBuildResult {
  std::vector<LabeledExample> examples;  // exactly 8 per sentence
  std::vector<std::string> diagnostics;  // boundary-crossers, gap placements
};

ExampleBuildResult build_examples(const corpus::PolicyDocument& doc,
                                  const std::vector<GroundTruthAnnotation>& annotations);

struct DatasetSplit {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> test;
  std::uint64_t seed = 0;
  double ratio = 0.0;
};

// Deterministic shuffle keyed by (seed, example_id), then a prefix split with
// |train| = round(ratio * n). The stratified variant applies the same rule
// per policy (the example_id prefix before ':').
DatasetSplit split_dataset(const std::vector<LabeledExample>& examples, double ratio,
                           std::uint64_t seed, bool stratify_by_policy = false);

std::string example_id(const corpus::PolicyMeta& meta, int sentence_index, Parameter p);

// JSONL: {"example_id","sentence":{...},"param","expected":[...],"polarity","flagged"}
void write_examples_jsonl(const std::vector<LabeledExample>& examples, std::ostream& out);
std::vector<LabeledExample> read_examples_jsonl(std::istream& in);

}  // namespace gkcci::groundtruth

#endif  // GKCCI_GROUNDTRUTH_HPP_
