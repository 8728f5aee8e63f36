#ifndef GKCCI_ANALYSIS_HPP_
#define GKCCI_ANALYSIS_HPP_

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gkcci/annotate.hpp"
#include "gkcci/corpus.hpp"
#include "gkcci/groundtruth.hpp"

namespace gkcci::analysis {

// Table column order shared by all corpus analytics output.
inline constexpr std::array<groundtruth::Parameter, 8> kTableOrder = {
    groundtruth::Parameter::Aim,      groundtruth::Parameter::Attribute,
    groundtruth::Parameter::Condition, groundtruth::Parameter::Consequence,
    groundtruth::Parameter::Modality, groundtruth::Parameter::Recipient,
    groundtruth::Parameter::Sender,   groundtruth::Parameter::Subject};

// Per-policy parameter counts. counts follows kTableOrder.
struct ParamProfile {
  corpus::PolicyMeta meta;
  std::array<int, 8> counts{};
  int total = 0;
  int sentence_count = 0;
};

// Counts annotated parameter instances from model records: every value of a
// parsed, non-empty completion counts once.
ParamProfile profile_from_records(const std::vector<annotate::AnnotationRecord>& records,
                                  const corpus::PolicyDocument& doc);

// Same, from expert ground truth (one count per annotation).
ParamProfile profile_from_groundtruth(
    const std::vector<groundtruth::GroundTruthAnnotation>& annotations,
    const corpus::PolicyDocument& doc);

// 100 * count / total per parameter, full precision. Throws on empty profiles.
std::array<double, 8> percent_distribution(const ParamProfile& profile);

// Sample variance (divisor n-1) over exactly eight percentage shares.
double parameter_variance(std::span<const double> percentages);

struct Density {
  std::array<double, 8> per_param{};
  double total = 0.0;  // always the exact sum of per_param
};

// count / sentence_count per parameter. Throws when there are no sentences.
Density parameter_density(const ParamProfile& profile);

enum class RankMetric { Variance, Density };

struct RankedEntry {
  corpus::PolicyMeta meta;
  double value = 0.0;
};

// Descending by metric, ties broken by (site, year) ascending, truncated to
// top_k entries.
std::vector<RankedEntry> rank(const std::vector<ParamProfile>& profiles, RankMetric metric,
                              int top_k);

struct LongitudinalRow {
  std::string site;
  int year = 0;
  std::array<int, 8> counts{};  // kTableOrder
  int total = 0;
};

// Rows sorted by (site, year); duplicate (site, year) pairs throw.
std::vector<LongitudinalRow> longitudinal_table(const std::vector<ParamProfile>& profiles);

// ---------------------------------------------------------------------------
// CSV emission (headers follow the published table layouts) and fixture
// loaders for the same shapes.

void write_longitudinal_csv(const std::vector<LongitudinalRow>& rows, std::ostream& out);
std::vector<LongitudinalRow> load_longitudinal_csv(std::istream& in);

struct VarianceRow {
  std::string site;
  int year = 0;
  std::array<double, 8> percents{};  // kTableOrder
  double variance = 0.0;
};

void write_variance_csv(const std::vector<ParamProfile>& profiles, std::ostream& out);
std::vector<VarianceRow> load_variance_csv(std::istream& in);

struct DensityRow {
  std::string site;
  int year = 0;
  std::array<double, 8> densities{};  // kTableOrder
  double total = 0.0;
};

void write_density_csv(const std::vector<ParamProfile>& profiles, std::ostream& out);
std::vector<DensityRow> load_density_csv(std::istream& in);

}  // namespace gkcci::analysis

#endif  // GKCCI_ANALYSIS_HPP_
