#ifndef GKCCI_EVALKIT_HPP_
#define GKCCI_EVALKIT_HPP_

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gkcci/annotate.hpp"
#include "gkcci/groundtruth.hpp"
#include "gkcci/promptkit.hpp"

namespace gkcci::evalkit {

enum class MatchOutcome { PerfectMatch, SupersetMatch, MatchError, IdentificationError };

std::string_view to_string(MatchOutcome o);

// Classifies one completion against its ground truth. Matching is
// case-sensitive and punctuation-preserving; both sides are trimmed and have
// internal whitespace collapsed first.
MatchOutcome classify(const std::vector<std::string>& expected_values,
                      const promptkit::ParsedCompletion& parsed, bool positive);

struct EvalReport {
  // counts[param][outcome], indexed by kAllParameters order and MatchOutcome.
  std::array<std::array<int, 4>, 8> counts{};
  std::array<int, 4> totals{};
  double accuracy = 0.0;           // perfect matches / all examples
  double positive_accuracy = 0.0;  // perfect matches among positives
  int n_examples = 0;
  int n_positive = 0;
};

// Joins records to examples by example_id and fills an EvalReport. Flagged
// examples (discontinuous / boundary-crossing ground truth) are excluded
// from the denominators unless include_flagged is set. Unmatched ids throw.
EvalReport aggregate(const std::vector<annotate::AnnotationRecord>& records,
                     const std::vector<groundtruth::LabeledExample>& examples,
                     bool include_flagged = false);

// (PM + reclassified_correct) / n — accuracy after qualitative review moved
// some match errors into the correct column.
double adjusted_accuracy(const EvalReport& report, int reclassified_correct);

// ---------------------------------------------------------------------------
// Qualitative coding

enum class QualParent { CompletionErrors, ExpertLabelingErrors, SemanticEquivalence };

enum class QualChild {
  CompletionIsWrong,
  MeaningfulSubset,
  CompletionOverLabeled,
  ExpertLabelIsWrong,
  ExpansiveGroundTruth,
  PartialGroundTruth,
  SemanticEquivalence,
};

QualParent parent_of(QualChild child);
std::string_view to_string(QualParent p);
std::string_view to_string(QualChild c);
std::optional<QualParent> parse_qual_parent(std::string_view name);
std::optional<QualChild> parse_qual_child(std::string_view name);

struct QualCode {
  QualChild child = QualChild::CompletionIsWrong;
  QualParent parent() const { return parent_of(child); }
};

// Cohen's kappa over child-level codes: (p_o - p_e) / (1 - p_e), with chance
// agreement from the two coders' marginal frequencies. Degenerate case where
// both p_e and p_o are 1 returns 1. Length mismatch or empty input throws.
double cohen_kappa(const std::vector<QualCode>& coder_a, const std::vector<QualCode>& coder_b);

struct BreakdownEntry {
  int count = 0;
  int percent = 0;  // of all coded items, rounded to integer
};

struct ErrorBreakdown {
  std::map<QualParent, BreakdownEntry> parents;
  std::map<QualChild, BreakdownEntry> children;
  int total = 0;
};

ErrorBreakdown error_breakdown(const std::vector<std::pair<std::string, QualCode>>& coded);

// Codes CSV: record_id,coder,parent,child (parent is checked against the
// child's codebook parent). Returns codes grouped per coder, each sorted by
// record_id so two coders align positionally.
std::map<std::string, std::vector<std::pair<std::string, QualCode>>> read_qual_codes_csv(
    std::istream& in);

// ---------------------------------------------------------------------------
// Report emission

// CSV columns: example_id,param,polarity,expected,parsed,category.
void write_eval_csv(const std::vector<annotate::AnnotationRecord>& records,
                    const std::vector<groundtruth::LabeledExample>& examples, std::ostream& out,
                    bool include_flagged = false);

// JSON mirror of EvalReport.
void write_report_json(const EvalReport& report, std::ostream& out);

}  // namespace gkcci::evalkit

#endif  // GKCCI_EVALKIT_HPP_
