#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "gkcci/evalkit.hpp"

using namespace gkcci;
using evalkit::MatchOutcome;
using evalkit::QualChild;
using evalkit::QualCode;
using evalkit::QualParent;
using groundtruth::Parameter;

namespace {

promptkit::ParsedCompletion parsed_values(std::vector<std::string> values,
                                          Parameter p = Parameter::Recipient) {
  promptkit::ParsedCompletion parsed;
  parsed.identified = true;
  parsed.param = p;
  parsed.values = std::move(values);
  return parsed;
}

promptkit::ParsedCompletion unidentified() { return promptkit::ParsedCompletion{}; }

groundtruth::LabeledExample example_for(const std::string& id, Parameter p,
                                        std::vector<std::string> values) {
  groundtruth::LabeledExample ex;
  ex.example_id = id;
  ex.sentence = {0, 0, 8, "Example."};
  ex.param = p;
  ex.positive = !values.empty();
  ex.expected_values = std::move(values);
  return ex;
}

annotate::AnnotationRecord record_for(const groundtruth::LabeledExample& ex,
                                      const std::string& raw) {
  annotate::AnnotationRecord rec;
  rec.example_id = ex.example_id;
  rec.requested = ex.param;
  rec.raw_completion = raw;
  rec.parsed = promptkit::parse_completion(raw, ex.param);
  return rec;
}

}  // namespace

TEST_CASE("classify: exact matches are perfect") {
  CHECK(evalkit::classify({"We"}, parsed_values({"We"}), true) == MatchOutcome::PerfectMatch);
  CHECK(evalkit::classify({}, parsed_values({}), false) == MatchOutcome::PerfectMatch);
}

TEST_CASE("classify: containment with enough instances is a superset match") {
  // The published example: expert said "Services", the model said "These
  // Services".
  CHECK(evalkit::classify({"Services"}, parsed_values({"These Services"}), true) ==
        MatchOutcome::SupersetMatch);
  CHECK(evalkit::classify({"a", "b"}, parsed_values({"the a", "some b"}), true) ==
        MatchOutcome::SupersetMatch);
}

TEST_CASE("classify: proper subsets are match errors") {
  // The published example: the completion dropped the leading "solely".
  std::string expert = "solely for the purposes of providing the relevant services to Kaltura";
  std::string model = "for the purposes of providing the relevant services to Kaltura";
  CHECK(evalkit::classify({expert}, parsed_values({model}), true) == MatchOutcome::MatchError);
}

TEST_CASE("classify: wrong instance counts are match errors") {
  CHECK(evalkit::classify({"a", "b"}, parsed_values({"a and b"}), true) ==
        MatchOutcome::MatchError);
  // Over-producing instances while containing all expected ones is a superset.
  CHECK(evalkit::classify({"a"}, parsed_values({"a", "c"}), true) == MatchOutcome::SupersetMatch);
}

TEST_CASE("classify: polarity disagreements are match errors") {
  CHECK(evalkit::classify({}, parsed_values({"anything"}), false) == MatchOutcome::MatchError);
  CHECK(evalkit::classify({"We"}, parsed_values({}), true) == MatchOutcome::MatchError);
}

TEST_CASE("classify: identification failures dominate") {
  CHECK(evalkit::classify({"We"}, unidentified(), true) == MatchOutcome::IdentificationError);
  CHECK(evalkit::classify({}, unidentified(), false) == MatchOutcome::IdentificationError);
}

TEST_CASE("classify: whitespace is normalized, case and punctuation are not") {
  CHECK(evalkit::classify({"contact  information"}, parsed_values({"contact information"}),
                          true) == MatchOutcome::PerfectMatch);
  CHECK(evalkit::classify({" We "}, parsed_values({"We"}), true) == MatchOutcome::PerfectMatch);
  CHECK(evalkit::classify({"we"}, parsed_values({"We"}), true) != MatchOutcome::PerfectMatch);
  CHECK(evalkit::classify({"data."}, parsed_values({"data"}), true) == MatchOutcome::MatchError);
}

TEST_CASE("classify: multiset semantics for repeated values") {
  CHECK(evalkit::classify({"We", "We"}, parsed_values({"We", "We"}), true) ==
        MatchOutcome::PerfectMatch);
  CHECK(evalkit::classify({"We", "We"}, parsed_values({"We"}), true) == MatchOutcome::MatchError);
}

TEST_CASE("classify is total over fuzzed inputs") {
  std::mt19937_64 rng(5);
  auto rand_values = [&](bool allow_empty) {
    std::vector<std::string> v;
    std::size_t n = rng() % 4;
    if (!allow_empty && n == 0) n = 1;
    for (std::size_t i = 0; i < n; ++i) {
      std::string s;
      for (std::size_t k = 0; k < rng() % 8; ++k) s += static_cast<char>('a' + rng() % 26);
      v.push_back(s);
    }
    return v;
  };
  for (int i = 0; i < 3000; ++i) {
    bool positive = rng() % 2 == 0;
    auto expected = positive ? rand_values(false) : std::vector<std::string>{};
    promptkit::ParsedCompletion parsed;
    parsed.identified = rng() % 4 != 0;
    parsed.param = Parameter::Aim;
    parsed.values = rand_values(true);
    auto outcome = evalkit::classify(expected, parsed, positive);
    bool valid = outcome == MatchOutcome::PerfectMatch || outcome == MatchOutcome::SupersetMatch ||
                 outcome == MatchOutcome::MatchError ||
                 outcome == MatchOutcome::IdentificationError;
    CHECK(valid);
    if (!parsed.identified) CHECK(outcome == MatchOutcome::IdentificationError);
  }
}

TEST_CASE("aggregate computes the accuracy equation") {
  // 84 perfect, 4 superset, 8 match errors, 4 identification errors.
  std::vector<groundtruth::LabeledExample> examples;
  std::vector<annotate::AnnotationRecord> records;
  for (int i = 0; i < 100; ++i) {
    auto ex = example_for("m:s" + std::to_string(i) + ":Aim", Parameter::Aim, {"the value"});
    std::string raw;
    if (i < 84) {
      raw = "Aim: [\"the value\"]";
    } else if (i < 88) {
      raw = "Aim: [\"around the value here\"]";
    } else if (i < 96) {
      raw = "Aim: [\"unrelated\"]";
    } else {
      raw = "no parameter in sight";
    }
    records.push_back(record_for(ex, raw));
    examples.push_back(std::move(ex));
  }
  auto report = evalkit::aggregate(records, examples);
  CHECK(report.n_examples == 100);
  CHECK(report.totals[0] == 84);
  CHECK(report.totals[1] == 4);
  CHECK(report.totals[2] == 8);
  CHECK(report.totals[3] == 4);
  CHECK(report.accuracy == doctest::Approx(0.84).epsilon(1e-12));

  // Degrading any single perfect match can only lower accuracy.
  records[0].raw_completion = "Aim: [\"worse\"]";
  records[0].parsed = promptkit::parse_completion(records[0].raw_completion, Parameter::Aim);
  auto degraded = evalkit::aggregate(records, examples);
  CHECK(degraded.accuracy < report.accuracy);
}

TEST_CASE("aggregate reports unmatched ids") {
  auto ex = example_for("present:s0:Aim", Parameter::Aim, {});
  auto missing = example_for("missing:s0:Aim", Parameter::Aim, {});
  std::vector<annotate::AnnotationRecord> records = {record_for(ex, "Aim: N/A")};
  CHECK_THROWS_WITH_AS(evalkit::aggregate(records, {ex, missing}),
                       doctest::Contains("missing:s0:Aim"), std::runtime_error);
}

TEST_CASE("aggregate excludes flagged examples unless asked") {
  auto ok = example_for("p:s0:Aim", Parameter::Aim, {"v"});
  auto flagged = example_for("p:s1:Aim", Parameter::Aim, {"w"});
  flagged.flagged = true;
  std::vector<annotate::AnnotationRecord> records = {record_for(ok, "Aim: [\"v\"]"),
                                                     record_for(flagged, "Aim: [\"w\"]")};
  auto report = evalkit::aggregate(records, {ok, flagged});
  CHECK(report.n_examples == 1);
  auto with_flagged = evalkit::aggregate(records, {ok, flagged}, /*include_flagged=*/true);
  CHECK(with_flagged.n_examples == 2);
}

TEST_CASE("positive accuracy is computed over positives only") {
  auto pos = example_for("p:s0:Aim", Parameter::Aim, {"v"});
  auto neg = example_for("p:s1:Aim", Parameter::Aim, {});
  std::vector<annotate::AnnotationRecord> records = {record_for(pos, "Aim: [\"other\"]"),
                                                     record_for(neg, "Aim: N/A")};
  auto report = evalkit::aggregate(records, {pos, neg});
  CHECK(report.accuracy == doctest::Approx(0.5));
  CHECK(report.positive_accuracy == doctest::Approx(0.0));
  CHECK(report.n_positive == 1);
}

TEST_CASE("adjusted accuracy follows the reclassification arithmetic") {
  evalkit::EvalReport report;
  report.n_examples = 9252;
  report.totals[0] = 7772;  // 84% of the test set, rounded to a whole example
  report.totals[2] = 1000;
  CHECK(evalkit::adjusted_accuracy(report, 0) == doctest::Approx(7772.0 / 9252.0));
  double adjusted = evalkit::adjusted_accuracy(report, 97);
  CHECK(adjusted == doctest::Approx((7772.0 + 97.0) / 9252.0));
  CHECK(adjusted - 7772.0 / 9252.0 == doctest::Approx(0.0105).epsilon(0.01));
  CHECK(adjusted == doctest::Approx(0.85).epsilon(0.001));
  CHECK_THROWS_AS(evalkit::adjusted_accuracy(report, 1001), std::runtime_error);
}

TEST_CASE("codebook structure: three parents own seven children") {
  using evalkit::parent_of;
  CHECK(parent_of(QualChild::CompletionIsWrong) == QualParent::CompletionErrors);
  CHECK(parent_of(QualChild::MeaningfulSubset) == QualParent::CompletionErrors);
  CHECK(parent_of(QualChild::CompletionOverLabeled) == QualParent::CompletionErrors);
  CHECK(parent_of(QualChild::ExpertLabelIsWrong) == QualParent::ExpertLabelingErrors);
  CHECK(parent_of(QualChild::ExpansiveGroundTruth) == QualParent::ExpertLabelingErrors);
  CHECK(parent_of(QualChild::PartialGroundTruth) == QualParent::ExpertLabelingErrors);
  CHECK(parent_of(QualChild::SemanticEquivalence) == QualParent::SemanticEquivalence);
}

TEST_CASE("kappa: identical lists agree perfectly") {
  std::vector<QualCode> codes = {{QualChild::MeaningfulSubset},
                                 {QualChild::SemanticEquivalence},
                                 {QualChild::CompletionIsWrong}};
  CHECK(evalkit::cohen_kappa(codes, codes) == doctest::Approx(1.0));
}

TEST_CASE("kappa: alternating disagreement with balanced marginals is -1") {
  std::vector<QualCode> a, b;
  for (int i = 0; i < 4; ++i) {
    bool odd = i % 2;
    a.push_back({odd ? QualChild::MeaningfulSubset : QualChild::SemanticEquivalence});
    b.push_back({odd ? QualChild::SemanticEquivalence : QualChild::MeaningfulSubset});
  }
  // p_o = 0, p_e = 0.5 -> kappa = -1.
  CHECK(evalkit::cohen_kappa(a, b) == doctest::Approx(-1.0));
}

TEST_CASE("kappa: 97 of 100 agreements with balanced marginals gives 0.94") {
  std::vector<QualCode> a, b;
  for (int i = 0; i < 100; ++i) {
    QualChild mine = i < 50 ? QualChild::MeaningfulSubset : QualChild::SemanticEquivalence;
    QualChild theirs = mine;
    if (i == 0 || i == 1) theirs = QualChild::SemanticEquivalence;  // two A->B flips
    if (i == 50) theirs = QualChild::MeaningfulSubset;              // one B->A flip
    a.push_back({mine});
    b.push_back({theirs});
  }
  CHECK(evalkit::cohen_kappa(a, b) == doctest::Approx(0.94).epsilon(1e-9));
}

TEST_CASE("kappa is symmetric and errors on mismatched lengths") {
  std::mt19937_64 rng(17);
  const QualChild kinds[] = {QualChild::CompletionIsWrong, QualChild::MeaningfulSubset,
                             QualChild::SemanticEquivalence, QualChild::PartialGroundTruth};
  for (int iter = 0; iter < 500; ++iter) {
    std::vector<QualCode> a, b;
    std::size_t n = 1 + rng() % 20;
    for (std::size_t i = 0; i < n; ++i) {
      a.push_back({kinds[rng() % 4]});
      b.push_back({kinds[rng() % 4]});
    }
    CHECK(evalkit::cohen_kappa(a, b) == evalkit::cohen_kappa(b, a));
  }
  std::vector<QualCode> one = {{QualChild::CompletionIsWrong}};
  std::vector<QualCode> two = {{QualChild::CompletionIsWrong}, {QualChild::MeaningfulSubset}};
  CHECK_THROWS_AS(evalkit::cohen_kappa(one, two), std::runtime_error);
  CHECK_THROWS_AS(evalkit::cohen_kappa({}, {}), std::runtime_error);
}

TEST_CASE("error breakdown reproduces the published percentages") {
  // 188 coded match errors: 63 semantic equivalence, 42 expert labeling
  // errors, 83 completion errors.
  std::vector<std::pair<std::string, QualCode>> coded;
  auto add = [&](QualChild child, int n) {
    for (int i = 0; i < n; ++i) {
      coded.push_back({"e" + std::to_string(coded.size()), QualCode{child}});
    }
  };
  add(QualChild::SemanticEquivalence, 63);
  add(QualChild::ExpertLabelIsWrong, 20);
  add(QualChild::ExpansiveGroundTruth, 12);
  add(QualChild::PartialGroundTruth, 10);
  add(QualChild::MeaningfulSubset, 57);
  add(QualChild::CompletionIsWrong, 19);
  add(QualChild::CompletionOverLabeled, 7);
  REQUIRE(coded.size() == 188);

  auto breakdown = evalkit::error_breakdown(coded);
  CHECK(breakdown.total == 188);
  CHECK(breakdown.parents[QualParent::SemanticEquivalence].count == 63);
  CHECK(breakdown.parents[QualParent::SemanticEquivalence].percent == 34);
  CHECK(breakdown.parents[QualParent::ExpertLabelingErrors].count == 42);
  CHECK(breakdown.parents[QualParent::ExpertLabelingErrors].percent == 22);
  CHECK(breakdown.parents[QualParent::CompletionErrors].count == 83);
  CHECK(breakdown.parents[QualParent::CompletionErrors].percent == 44);
  CHECK(breakdown.children[QualChild::MeaningfulSubset].count == 57);
}

TEST_CASE("error breakdown of nothing is empty") {
  auto breakdown = evalkit::error_breakdown({});
  CHECK(breakdown.total == 0);
  CHECK(breakdown.parents.empty());
  CHECK(breakdown.children.empty());
}

TEST_CASE("qualitative codes CSV parses and validates the codebook") {
  std::istringstream in(
      "record_id,coder,parent,child\n"
      "e1,alice,semantic_equivalence,semantic_equivalence\n"
      "e2,alice,completion_errors,meaningful_subset\n"
      "e1,bob,semantic_equivalence,semantic_equivalence\n"
      "e2,bob,completion_errors,completion_is_wrong\n");
  auto by_coder = evalkit::read_qual_codes_csv(in);
  REQUIRE(by_coder.size() == 2);
  REQUIRE(by_coder["alice"].size() == 2);
  CHECK(by_coder["alice"][0].first == "e1");
  CHECK(by_coder["bob"][1].second.child == QualChild::CompletionIsWrong);

  std::istringstream bad(
      "record_id,coder,parent,child\n"
      "e1,alice,semantic_equivalence,meaningful_subset\n");
  CHECK_THROWS_WITH_AS(evalkit::read_qual_codes_csv(bad), doctest::Contains("does not own"),
                       std::runtime_error);
}

TEST_CASE("eval CSV layout") {
  auto pos = example_for("p:s0:Recipient", Parameter::Recipient, {"We"});
  auto neg = example_for("p:s1:Aim", Parameter::Aim, {});
  std::vector<annotate::AnnotationRecord> records = {record_for(pos, "Recipient: [\"We\"]x-x-x"),
                                                     record_for(neg, "Aim: N/A")};
  std::ostringstream out;
  evalkit::write_eval_csv(records, {pos, neg}, out);
  std::istringstream lines(out.str());
  std::string header, first;
  std::getline(lines, header);
  std::getline(lines, first);
  CHECK(header == "example_id,param,polarity,expected,parsed,category");
  CHECK(first == "p:s0:Recipient,Recipient,positive,We,We,perfect_match");
}

TEST_CASE("report JSON mirrors the report") {
  auto pos = example_for("p:s0:Recipient", Parameter::Recipient, {"We"});
  std::vector<annotate::AnnotationRecord> records = {record_for(pos, "Recipient: [\"We\"]")};
  auto report = evalkit::aggregate(records, {pos});
  std::ostringstream out;
  evalkit::write_report_json(report, out);
  CHECK(out.str().find("\"accuracy\": 1.0") != std::string::npos);
  CHECK(out.str().find("\"perfect_match\": 1") != std::string::npos);
}
