#include "gkcci/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "gkcci/csv.hpp"
#include "gkcci/strings.hpp"

namespace gkcci::evalkit {

using annotate::AnnotationRecord;
using groundtruth::LabeledExample;
using groundtruth::Parameter;

std::string_view to_string(MatchOutcome o) {
  switch (o) {
    case MatchOutcome::PerfectMatch: return "perfect_match";
    case MatchOutcome::SupersetMatch: return "superset_match";
    case MatchOutcome::MatchError: return "match_error";
    case MatchOutcome::IdentificationError: return "identification_error";
  }
  return "?";
}

MatchOutcome classify(const std::vector<std::string>& expected_values,
                      const promptkit::ParsedCompletion& parsed, bool positive) {
  if (!parsed.identified) return MatchOutcome::IdentificationError;

  if (!positive) {
    return parsed.values.empty() ? MatchOutcome::PerfectMatch : MatchOutcome::MatchError;
  }
  if (parsed.values.empty()) return MatchOutcome::MatchError;

  std::vector<std::string> expected, got;
  expected.reserve(expected_values.size());
  got.reserve(parsed.values.size());
  for (const auto& v : expected_values) expected.push_back(collapse_whitespace(v));
  for (const auto& v : parsed.values) got.push_back(collapse_whitespace(v));

  // Multiset equality of the value lists is a perfect match.
  auto expected_sorted = expected;
  auto got_sorted = got;
  std::sort(expected_sorted.begin(), expected_sorted.end());
  std::sort(got_sorted.begin(), got_sorted.end());
  if (expected_sorted == got_sorted) return MatchOutcome::PerfectMatch;

  // Superset: every expected value appears as a contiguous substring of some
  // completion value, and the completion did not under-produce instances.
  if (got.size() >= expected.size()) {
    bool all_contained = std::all_of(expected.begin(), expected.end(), [&](const std::string& e) {
      return std::any_of(got.begin(), got.end(), [&](const std::string& g) {
        return g.find(e) != std::string::npos;
      });
    });
    if (all_contained) return MatchOutcome::SupersetMatch;
  }
  return MatchOutcome::MatchError;
}

namespace {

std::size_t param_index(Parameter p) {
  for (std::size_t i = 0; i < groundtruth::kAllParameters.size(); ++i) {
    if (groundtruth::kAllParameters[i] == p) return i;
  }
  return 0;
}

}  // namespace

EvalReport aggregate(const std::vector<AnnotationRecord>& records,
                     const std::vector<LabeledExample>& examples, bool include_flagged) {
  std::unordered_map<std::string, const AnnotationRecord*> by_id;
  by_id.reserve(records.size());
  for (const auto& rec : records) by_id[rec.example_id] = &rec;

  EvalReport report;
  std::vector<std::string> missing;
  int positive_pm = 0;
  for (const auto& ex : examples) {
    if (ex.flagged && !include_flagged) continue;
    auto it = by_id.find(ex.example_id);
    if (it == by_id.end()) {
      missing.push_back(ex.example_id);
      continue;
    }
    MatchOutcome outcome = classify(ex.expected_values, it->second->parsed, ex.positive);
    auto o = static_cast<std::size_t>(outcome);
    ++report.counts[param_index(ex.param)][o];
    ++report.totals[o];
    ++report.n_examples;
    if (ex.positive) {
      ++report.n_positive;
      if (outcome == MatchOutcome::PerfectMatch) ++positive_pm;
    }
  }
  if (!missing.empty()) {
    std::string what = "no record for example(s):";
    for (const auto& id : missing) what += " " + id;
    throw std::runtime_error(what);
  }
  if (report.n_examples > 0) {
    report.accuracy = static_cast<double>(report.totals[0]) / report.n_examples;
  }
  if (report.n_positive > 0) {
    report.positive_accuracy = static_cast<double>(positive_pm) / report.n_positive;
  }
  return report;
}

double adjusted_accuracy(const EvalReport& report, int reclassified_correct) {
  if (reclassified_correct < 0 ||
      reclassified_correct > report.totals[static_cast<std::size_t>(MatchOutcome::MatchError)]) {
    throw std::runtime_error("reclassified count exceeds match errors");
  }
  if (report.n_examples == 0) return 0.0;
  return static_cast<double>(report.totals[0] + reclassified_correct) / report.n_examples;
}

// ---------------------------------------------------------------------------
// Qualitative coding

QualParent parent_of(QualChild child) {
  switch (child) {
    case QualChild::CompletionIsWrong:
    case QualChild::MeaningfulSubset:
    case QualChild::CompletionOverLabeled:
      return QualParent::CompletionErrors;
    case QualChild::ExpertLabelIsWrong:
    case QualChild::ExpansiveGroundTruth:
    case QualChild::PartialGroundTruth:
      return QualParent::ExpertLabelingErrors;
    case QualChild::SemanticEquivalence:
      return QualParent::SemanticEquivalence;
  }
  return QualParent::CompletionErrors;
}

std::string_view to_string(QualParent p) {
  switch (p) {
    case QualParent::CompletionErrors: return "completion_errors";
    case QualParent::ExpertLabelingErrors: return "expert_labeling_errors";
    case QualParent::SemanticEquivalence: return "semantic_equivalence";
  }
  return "?";
}

std::string_view to_string(QualChild c) {
  switch (c) {
    case QualChild::CompletionIsWrong: return "completion_is_wrong";
    case QualChild::MeaningfulSubset: return "meaningful_subset";
    case QualChild::CompletionOverLabeled: return "completion_over_labeled";
    case QualChild::ExpertLabelIsWrong: return "expert_label_is_wrong";
    case QualChild::ExpansiveGroundTruth: return "expansive_ground_truth";
    case QualChild::PartialGroundTruth: return "partial_ground_truth";
    case QualChild::SemanticEquivalence: return "semantic_equivalence";
  }
  return "?";
}

std::optional<QualParent> parse_qual_parent(std::string_view name) {
  for (QualParent p : {QualParent::CompletionErrors, QualParent::ExpertLabelingErrors,
                       QualParent::SemanticEquivalence}) {
    if (iequals(name, to_string(p))) return p;
  }
  return std::nullopt;
}

std::optional<QualChild> parse_qual_child(std::string_view name) {
  for (QualChild c : {QualChild::CompletionIsWrong, QualChild::MeaningfulSubset,
                      QualChild::CompletionOverLabeled, QualChild::ExpertLabelIsWrong,
                      QualChild::ExpansiveGroundTruth, QualChild::PartialGroundTruth,
                      QualChild::SemanticEquivalence}) {
    if (iequals(name, to_string(c))) return c;
  }
  return std::nullopt;
}

double cohen_kappa(const std::vector<QualCode>& coder_a, const std::vector<QualCode>& coder_b) {
  if (coder_a.size() != coder_b.size())
    throw std::runtime_error("kappa: code lists differ in length");
  if (coder_a.empty()) throw std::runtime_error("kappa: empty code lists");

  const double n = static_cast<double>(coder_a.size());
  double observed = 0.0;
  std::map<QualChild, double> freq_a, freq_b;
  for (std::size_t i = 0; i < coder_a.size(); ++i) {
    if (coder_a[i].child == coder_b[i].child) observed += 1.0;
    freq_a[coder_a[i].child] += 1.0;
    freq_b[coder_b[i].child] += 1.0;
  }
  double p_o = observed / n;
  double p_e = 0.0;
  for (const auto& [child, count_a] : freq_a) {
    auto it = freq_b.find(child);
    if (it != freq_b.end()) p_e += (count_a / n) * (it->second / n);
  }
  if (p_e >= 1.0) {
    // Both coders used a single identical code everywhere.
    return p_o >= 1.0 ? 1.0 : 0.0;
  }
  return (p_o - p_e) / (1.0 - p_e);
}

ErrorBreakdown error_breakdown(const std::vector<std::pair<std::string, QualCode>>& coded) {
  ErrorBreakdown breakdown;
  breakdown.total = static_cast<int>(coded.size());
  for (const auto& [id, code] : coded) {
    (void)id;
    ++breakdown.children[code.child].count;
    ++breakdown.parents[code.parent()].count;
  }
  auto fill_percent = [&](auto& entries) {
    for (auto& [key, entry] : entries) {
      (void)key;
      entry.percent = static_cast<int>(
          std::llround(100.0 * entry.count / static_cast<double>(breakdown.total)));
    }
  };
  if (breakdown.total > 0) {
    fill_percent(breakdown.parents);
    fill_percent(breakdown.children);
  }
  return breakdown;
}

std::map<std::string, std::vector<std::pair<std::string, QualCode>>> read_qual_codes_csv(
    std::istream& in) {
  std::map<std::string, std::vector<std::pair<std::string, QualCode>>> by_coder;
  auto rows = csv_read(in);
  int lineno = 1;
  for (const auto& row : rows) {
    ++lineno;
    if (row.size() != 4)
      throw std::runtime_error("codes line " + std::to_string(lineno) + ": want 4 columns");
    auto child = parse_qual_child(row[3]);
    if (!child)
      throw std::runtime_error("codes line " + std::to_string(lineno) + ": unknown child code '" +
                               row[3] + "'");
    auto parent = parse_qual_parent(row[2]);
    if (!parent || *parent != parent_of(*child))
      throw std::runtime_error("codes line " + std::to_string(lineno) + ": parent '" + row[2] +
                               "' does not own child '" + row[3] + "'");
    by_coder[row[1]].push_back({row[0], QualCode{*child}});
  }
  for (auto& [coder, codes] : by_coder) {
    (void)coder;
    std::sort(codes.begin(), codes.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
  }
  return by_coder;
}

// ---------------------------------------------------------------------------
// Emission

void write_eval_csv(const std::vector<AnnotationRecord>& records,
                    const std::vector<LabeledExample>& examples, std::ostream& out,
                    bool include_flagged) {
  std::unordered_map<std::string, const AnnotationRecord*> by_id;
  for (const auto& rec : records) by_id[rec.example_id] = &rec;

  out << "example_id,param,polarity,expected,parsed,category\n";
  for (const auto& ex : examples) {
    if (ex.flagged && !include_flagged) continue;
    auto it = by_id.find(ex.example_id);
    if (it == by_id.end()) throw std::runtime_error("no record for example " + ex.example_id);
    const auto& parsed = it->second->parsed;
    MatchOutcome outcome = classify(ex.expected_values, parsed, ex.positive);

    std::string expected_joined, parsed_joined;
    for (std::size_t i = 0; i < ex.expected_values.size(); ++i) {
      if (i) expected_joined += "; ";
      expected_joined += ex.expected_values[i];
    }
    for (std::size_t i = 0; i < parsed.values.size(); ++i) {
      if (i) parsed_joined += "; ";
      parsed_joined += parsed.values[i];
    }
    out << csv_escape(ex.example_id) << ',' << to_string(ex.param) << ','
        << (ex.positive ? "positive" : "negative") << ',' << csv_escape(expected_joined) << ','
        << csv_escape(parsed_joined) << ',' << to_string(outcome) << '\n';
  }
}

void write_report_json(const EvalReport& report, std::ostream& out) {
  nlohmann::ordered_json j;
  j["n_examples"] = report.n_examples;
  j["n_positive"] = report.n_positive;
  j["accuracy"] = report.accuracy;
  j["positive_accuracy"] = report.positive_accuracy;
  nlohmann::ordered_json totals;
  for (std::size_t o = 0; o < 4; ++o) {
    totals[std::string(to_string(static_cast<MatchOutcome>(o)))] = report.totals[o];
  }
  j["totals"] = std::move(totals);
  nlohmann::ordered_json per_param;
  for (std::size_t i = 0; i < groundtruth::kAllParameters.size(); ++i) {
    nlohmann::ordered_json row;
    for (std::size_t o = 0; o < 4; ++o) {
      row[std::string(to_string(static_cast<MatchOutcome>(o)))] = report.counts[i][o];
    }
    per_param[std::string(to_string(groundtruth::kAllParameters[i]))] = std::move(row);
  }
  j["per_parameter"] = std::move(per_param);
  out << j.dump(2) << '\n';
}

}  // namespace gkcci::evalkit
