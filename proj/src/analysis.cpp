#include "gkcci/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "gkcci/csv.hpp"
#include "gkcci/strings.hpp"

namespace gkcci::analysis {

using groundtruth::Parameter;

namespace {

std::size_t table_index(Parameter p) {
  for (std::size_t i = 0; i < kTableOrder.size(); ++i) {
    if (kTableOrder[i] == p) return i;
  }
  return 0;
}

int checked_sentence_count(const corpus::PolicyDocument& doc) {
  return static_cast<int>(doc.sentences.size());
}

std::string format_fixed(double v, int decimals) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(decimals) << v;
  return out.str();
}

}  // namespace

ParamProfile profile_from_records(const std::vector<annotate::AnnotationRecord>& records,
                                  const corpus::PolicyDocument& doc) {
  ParamProfile profile;
  profile.meta = doc.meta;
  profile.sentence_count = checked_sentence_count(doc);
  for (const auto& rec : records) {
    if (!rec.parsed.identified || rec.parsed.values.empty()) continue;
    profile.counts[table_index(rec.parsed.param)] += static_cast<int>(rec.parsed.values.size());
  }
  for (int c : profile.counts) profile.total += c;
  return profile;
}

ParamProfile profile_from_groundtruth(
    const std::vector<groundtruth::GroundTruthAnnotation>& annotations,
    const corpus::PolicyDocument& doc) {
  ParamProfile profile;
  profile.meta = doc.meta;
  profile.sentence_count = checked_sentence_count(doc);
  for (const auto& ann : annotations) {
    profile.counts[table_index(ann.param)] += 1;
  }
  for (int c : profile.counts) profile.total += c;
  return profile;
}

std::array<double, 8> percent_distribution(const ParamProfile& profile) {
  if (profile.total <= 0) throw std::runtime_error("empty profile: " + profile.meta.site);
  std::array<double, 8> out{};
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = 100.0 * profile.counts[i] / static_cast<double>(profile.total);
  }
  return out;
}

double parameter_variance(std::span<const double> percentages) {
  if (percentages.size() != 8)
    throw std::runtime_error("parameter variance needs exactly 8 percentages");
  double mean = 0.0;
  for (double p : percentages) mean += p;
  mean /= 8.0;
  double ss = 0.0;
  for (double p : percentages) ss += (p - mean) * (p - mean);
  return ss / 7.0;  // sample variance, divisor n-1
}

Density parameter_density(const ParamProfile& profile) {
  if (profile.sentence_count < 1)
    throw std::runtime_error("no sentences in profile: " + profile.meta.site);
  Density d;
  for (std::size_t i = 0; i < d.per_param.size(); ++i) {
    d.per_param[i] = profile.counts[i] / static_cast<double>(profile.sentence_count);
    d.total += d.per_param[i];
  }
  return d;
}

std::vector<RankedEntry> rank(const std::vector<ParamProfile>& profiles, RankMetric metric,
                              int top_k) {
  if (top_k < 1) throw std::runtime_error("top_k must be >= 1");
  std::vector<RankedEntry> entries;
  entries.reserve(profiles.size());
  for (const auto& p : profiles) {
    RankedEntry e;
    e.meta = p.meta;
    e.value = metric == RankMetric::Variance ? parameter_variance(percent_distribution(p))
                                             : parameter_density(p).total;
    entries.push_back(std::move(e));
  }
  std::sort(entries.begin(), entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.value != b.value) return a.value > b.value;
    if (a.meta.site != b.meta.site) return a.meta.site < b.meta.site;
    return a.meta.year.value_or(0) < b.meta.year.value_or(0);
  });
  if (entries.size() > static_cast<std::size_t>(top_k)) entries.resize(static_cast<std::size_t>(top_k));
  return entries;
}

std::vector<LongitudinalRow> longitudinal_table(const std::vector<ParamProfile>& profiles) {
  std::vector<LongitudinalRow> rows;
  std::map<std::pair<std::string, int>, int> seen;
  std::vector<std::string> duplicates;
  for (const auto& p : profiles) {
    if (!p.meta.year) continue;  // undated policies have no longitudinal slot
    LongitudinalRow row;
    row.site = p.meta.site;
    row.year = *p.meta.year;
    row.counts = p.counts;
    row.total = p.total;
    if (++seen[{row.site, row.year}] > 1) {
      duplicates.push_back(row.site + " (" + std::to_string(row.year) + ")");
    }
    rows.push_back(std::move(row));
  }
  if (!duplicates.empty()) {
    std::string what = "duplicate (site, year):";
    for (const auto& d : duplicates) what += " " + d;
    throw std::runtime_error(what);
  }
  std::sort(rows.begin(), rows.end(), [](const LongitudinalRow& a, const LongitudinalRow& b) {
    if (a.site != b.site) return a.site < b.site;
    return a.year < b.year;
  });
  return rows;
}

// ---------------------------------------------------------------------------
// CSV

namespace {
constexpr const char* kParamHeader =
    "Aim,Attribute,Condition,Consequence,Modality,Recipient,Sender,Subject";

int parse_int(const std::string& s, const char* what) {
  try {
    return std::stoi(s);
  } catch (const std::exception&) {
    throw std::runtime_error(std::string("bad ") + what + ": '" + s + "'");
  }
}

double parse_double(const std::string& s, const char* what) {
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw std::runtime_error(std::string("bad ") + what + ": '" + s + "'");
  }
}
}  // namespace

void write_longitudinal_csv(const std::vector<LongitudinalRow>& rows, std::ostream& out) {
  out << "Company,Year," << kParamHeader << ",Total\n";
  for (const auto& row : rows) {
    out << csv_escape(row.site) << ',' << row.year;
    for (int c : row.counts) out << ',' << c;
    out << ',' << row.total << '\n';
  }
}

std::vector<LongitudinalRow> load_longitudinal_csv(std::istream& in) {
  std::vector<LongitudinalRow> rows;
  for (const auto& fields : csv_read(in)) {
    if (fields.size() != 11)
      throw std::runtime_error("longitudinal row needs 11 columns, got " +
                               std::to_string(fields.size()));
    LongitudinalRow row;
    row.site = fields[0];
    row.year = parse_int(fields[1], "year");
    for (std::size_t i = 0; i < 8; ++i) row.counts[i] = parse_int(fields[2 + i], "count");
    row.total = parse_int(fields[10], "total");
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_variance_csv(const std::vector<ParamProfile>& profiles, std::ostream& out) {
  out << "Website,Year," << kParamHeader << ",Variance\n";
  for (const auto& p : profiles) {
    auto percents = percent_distribution(p);
    out << csv_escape(p.meta.site) << ',' << (p.meta.year ? std::to_string(*p.meta.year) : "");
    for (double pct : percents) out << ',' << format_fixed(pct, 1);
    out << ',' << format_fixed(parameter_variance(percents), 1) << '\n';
  }
}

std::vector<VarianceRow> load_variance_csv(std::istream& in) {
  std::vector<VarianceRow> rows;
  for (const auto& fields : csv_read(in)) {
    if (fields.size() != 11)
      throw std::runtime_error("variance row needs 11 columns, got " +
                               std::to_string(fields.size()));
    VarianceRow row;
    row.site = fields[0];
    row.year = parse_int(fields[1], "year");
    for (std::size_t i = 0; i < 8; ++i) row.percents[i] = parse_double(fields[2 + i], "percent");
    row.variance = parse_double(fields[10], "variance");
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_density_csv(const std::vector<ParamProfile>& profiles, std::ostream& out) {
  out << "Website,Year," << kParamHeader << ",Total\n";
  for (const auto& p : profiles) {
    Density d = parameter_density(p);
    out << csv_escape(p.meta.site) << ',' << (p.meta.year ? std::to_string(*p.meta.year) : "");
    for (double v : d.per_param) out << ',' << format_fixed(v, 4);
    out << ',' << format_fixed(d.total, 4) << '\n';
  }
}

std::vector<DensityRow> load_density_csv(std::istream& in) {
  std::vector<DensityRow> rows;
  for (const auto& fields : csv_read(in)) {
    if (fields.size() != 11)
      throw std::runtime_error("density row needs 11 columns, got " +
                               std::to_string(fields.size()));
    DensityRow row;
    row.site = fields[0];
    row.year = parse_int(fields[1], "year");
    for (std::size_t i = 0; i < 8; ++i) row.densities[i] = parse_double(fields[2 + i], "density");
    row.total = parse_double(fields[10], "total");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace gkcci::analysis
