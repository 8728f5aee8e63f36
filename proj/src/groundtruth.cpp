#include "gkcci/groundtruth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "gkcci/hashing.hpp"
#include "gkcci/strings.hpp"

namespace gkcci::groundtruth {

std::string_view to_string(Parameter p) {
  switch (p) {
    case Parameter::Sender: return "Sender";
    case Parameter::Subject: return "Subject";
    case Parameter::Recipient: return "Recipient";
    case Parameter::Attribute: return "Attribute";
    case Parameter::Aim: return "Aim";
    case Parameter::Condition: return "Condition";
    case Parameter::Modality: return "Modality";
    case Parameter::Consequence: return "Consequence";
  }
  return "?";
}

std::optional<Parameter> parse_parameter(std::string_view label) {
  std::string_view body = label;
  if (starts_with_ci(body, "TP:")) body.remove_prefix(3);
  for (Parameter p : kAllParameters) {
    if (iequals(body, to_string(p))) return p;
  }
  return std::nullopt;
}

namespace {

[[noreturn]] void line_error(int lineno, const std::string& what) {
  throw std::runtime_error("brat parse error at line " + std::to_string(lineno) + ": " + what);
}

bool parse_size(std::string_view s, std::size_t& out) {
  if (s.empty()) return false;
  std::size_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<std::size_t>(c - '0');
  }
  out = v;
  return true;
}

std::string surface_at(const std::string& doc_text, const std::vector<TextSpan>& spans) {
  std::string out;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (i) out += ' ';
    out += doc_text.substr(spans[i].start, spans[i].end - spans[i].start);
  }
  return out;
}

}  // namespace

BratParseResult parse_brat(const std::string& ann_text, const std::string& doc_text) {
  BratParseResult result;
  int lineno = 0;
  for (const std::string& line : split_lines(ann_text)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (line[0] != 'T') continue;  // A/R/E/M/N/# and free text are not ours

    // T<id>\t<Label> <start> <end>[;<start> <end>]*\t<text>
    std::size_t tab1 = line.find('\t');
    if (tab1 == std::string::npos) line_error(lineno, "missing tab after id");
    std::size_t tab2 = line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) line_error(lineno, "missing tab after spans");
    if (line.find('\t', tab2 + 1) != std::string::npos)
      line_error(lineno, "too many tab-separated fields");

    GroundTruthAnnotation ann;
    ann.id = line.substr(0, tab1);
    if (ann.id.size() < 2) line_error(lineno, "bad annotation id '" + ann.id + "'");
    for (std::size_t i = 1; i < ann.id.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(ann.id[i])))
        line_error(lineno, "bad annotation id '" + ann.id + "'");
    }

    std::string_view middle(line.data() + tab1 + 1, tab2 - tab1 - 1);
    std::size_t sp = middle.find(' ');
    if (sp == std::string_view::npos) line_error(lineno, "missing offsets");
    ann.label = std::string(middle.substr(0, sp));

    std::string_view span_text = middle.substr(sp + 1);
    std::size_t pos = 0;
    while (true) {
      std::size_t semi = span_text.find(';', pos);
      std::string_view pair =
          span_text.substr(pos, (semi == std::string_view::npos ? span_text.size() : semi) - pos);
      std::size_t gap = pair.find(' ');
      if (gap == std::string_view::npos) line_error(lineno, "span is not '<start> <end>'");
      TextSpan s;
      if (!parse_size(pair.substr(0, gap), s.start) || !parse_size(pair.substr(gap + 1), s.end))
        line_error(lineno, "non-numeric span offsets");
      if (s.start >= s.end || s.end > doc_text.size())
        line_error(lineno, "span out of range: " + std::to_string(s.start) + " " +
                               std::to_string(s.end));
      ann.spans.push_back(s);
      if (semi == std::string_view::npos) break;
      pos = semi + 1;
    }

    auto param = parse_parameter(ann.label);
    if (!param) {
      result.warnings.push_back("line " + std::to_string(lineno) + ": unknown label '" +
                                ann.label + "' skipped");
      continue;
    }
    ann.param = *param;

    std::string recorded = line.substr(tab2 + 1);
    ann.surface_text = surface_at(doc_text, ann.spans);
    if (recorded != ann.surface_text) {
      result.warnings.push_back("line " + std::to_string(lineno) + ": surface text mismatch for " +
                                ann.id + " (trusting offsets)");
    }
    result.annotations.push_back(std::move(ann));
  }
  return result;
}

std::string serialize_t_line(const GroundTruthAnnotation& ann) {
  std::string out = ann.id;
  out += '\t';
  out += ann.label;
  for (std::size_t i = 0; i < ann.spans.size(); ++i) {
    out += i ? ';' : ' ';
    out += std::to_string(ann.spans[i].start);
    out += ' ';
    out += std::to_string(ann.spans[i].end);
  }
  out += '\t';
  out += ann.surface_text;
  return out;
}

std::string example_id(const corpus::PolicyMeta& meta, int sentence_index, Parameter p) {
  std::string id = meta.site;
  if (meta.year) id += "_" + std::to_string(*meta.year);
  id += ":s" + std::to_string(sentence_index);
  id += ":";
  id += to_string(p);
  return id;
}

ExampleBuildResult build_examples(const corpus::PolicyDocument& doc,
                                  const std::vector<GroundTruthAnnotation>& annotations) {
  ExampleBuildResult result;
  const auto& sentences = doc.sentences;

  // Each annotation goes to the sentence containing its first span's start;
  // if that offset falls in an inter-sentence gap, the nearest earlier
  // sentence takes it.
  struct Hit {
    const GroundTruthAnnotation* ann;
    bool crossing;
  };
  std::map<std::pair<int, Parameter>, std::vector<Hit>> by_key;
  for (const auto& ann : annotations) {
    if (ann.spans.empty()) continue;
    std::size_t at = ann.spans.front().start;
    int sentence_idx = -1;
    for (const auto& s : sentences) {
      if (at < s.end) {
        sentence_idx = at >= s.start ? s.index : std::max(0, s.index - 1);
        break;
      }
    }
    if (sentence_idx < 0 && !sentences.empty()) sentence_idx = sentences.back().index;
    if (sentence_idx < 0) continue;

    const auto& s = sentences[static_cast<std::size_t>(sentence_idx)];
    bool crossing = ann.spans.front().start < s.start || ann.spans.front().end > s.end;
    if (crossing) {
      result.diagnostics.push_back("annotation " + ann.id + " (" + std::string(to_string(ann.param)) +
                                   ") crosses the boundary of sentence " +
                                   std::to_string(sentence_idx));
    }
    by_key[{sentence_idx, ann.param}].push_back({&ann, crossing});
  }

  result.examples.reserve(sentences.size() * kAllParameters.size());
  for (const auto& s : sentences) {
    for (Parameter p : kAllParameters) {
      LabeledExample ex;
      ex.example_id = example_id(doc.meta, s.index, p);
      ex.sentence = s;
      ex.param = p;
      auto it = by_key.find({s.index, p});
      if (it != by_key.end()) {
        auto hits = it->second;
        std::stable_sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
          return a.ann->spans.front().start < b.ann->spans.front().start;
        });
        for (const Hit& h : hits) {
          ex.expected_values.push_back(h.ann->surface_text);
          if (h.crossing || h.ann->spans.size() > 1) ex.flagged = true;
        }
        ex.positive = true;
      }
      result.examples.push_back(std::move(ex));
    }
  }
  return result;
}

namespace {

std::vector<LabeledExample> ordered_by_key(std::vector<LabeledExample> v, std::uint64_t seed) {
  std::stable_sort(v.begin(), v.end(), [seed](const LabeledExample& a, const LabeledExample& b) {
    std::uint64_t ka = keyed_hash(seed, a.example_id);
    std::uint64_t kb = keyed_hash(seed, b.example_id);
    if (ka != kb) return ka < kb;
    return a.example_id < b.example_id;
  });
  return v;
}

std::string policy_prefix(const std::string& id) {
  std::size_t colon = id.find(':');
  return colon == std::string::npos ? id : id.substr(0, colon);
}

}  // namespace

DatasetSplit split_dataset(const std::vector<LabeledExample>& examples, double ratio,
                           std::uint64_t seed, bool stratify_by_policy) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::runtime_error("split ratio must be in (0, 1)");
  if (examples.size() < 2) throw std::runtime_error("need at least 2 examples to split");

  DatasetSplit split;
  split.seed = seed;
  split.ratio = ratio;

  auto take = [&](std::vector<LabeledExample> group) {
    auto n_train =
        static_cast<std::size_t>(std::llround(ratio * static_cast<double>(group.size())));
    auto shuffled = ordered_by_key(std::move(group), seed);
    for (std::size_t i = 0; i < shuffled.size(); ++i) {
      (i < n_train ? split.train : split.test).push_back(std::move(shuffled[i]));
    }
  };

  if (stratify_by_policy) {
    std::map<std::string, std::vector<LabeledExample>> groups;
    for (const auto& ex : examples) groups[policy_prefix(ex.example_id)].push_back(ex);
    for (auto& [_, group] : groups) take(std::move(group));
  } else {
    take(examples);
  }
  return split;
}

void write_examples_jsonl(const std::vector<LabeledExample>& examples, std::ostream& out) {
  for (const auto& ex : examples) {
    nlohmann::ordered_json j;
    j["example_id"] = ex.example_id;
    j["sentence"] = {{"index", ex.sentence.index},
                     {"start", ex.sentence.start},
                     {"end", ex.sentence.end},
                     {"text", ex.sentence.text}};
    j["param"] = to_string(ex.param);
    j["expected"] = ex.expected_values;
    j["polarity"] = ex.positive ? "positive" : "negative";
    j["flagged"] = ex.flagged;
    out << j.dump() << '\n';
  }
}

std::vector<LabeledExample> read_examples_jsonl(std::istream& in) {
  std::vector<LabeledExample> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("examples line " + std::to_string(lineno) + ": " + e.what());
    }
    LabeledExample ex;
    ex.example_id = j.at("example_id").get<std::string>();
    const auto& s = j.at("sentence");
    ex.sentence.index = s.at("index").get<int>();
    ex.sentence.start = s.at("start").get<std::size_t>();
    ex.sentence.end = s.at("end").get<std::size_t>();
    ex.sentence.text = s.at("text").get<std::string>();
    auto param = parse_parameter(j.at("param").get<std::string>());
    if (!param)
      throw std::runtime_error("examples line " + std::to_string(lineno) + ": unknown param");
    ex.param = *param;
    ex.expected_values = j.at("expected").get<std::vector<std::string>>();
    ex.positive = j.at("polarity").get<std::string>() == "positive";
    ex.flagged = j.value("flagged", false);
    if (ex.positive != !ex.expected_values.empty())
      throw std::runtime_error("examples line " + std::to_string(lineno) +
                               ": polarity inconsistent with expected values");
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace gkcci::groundtruth
