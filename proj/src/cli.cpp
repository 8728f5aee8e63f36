#include "gkcci/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <unordered_map>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gkcci/analysis.hpp"
#include "gkcci/evalkit.hpp"
#include "gkcci/groundtruth.hpp"
#include "gkcci/strings.hpp"

namespace fs = std::filesystem;

namespace gkcci::cli {

using annotate::BackendKind;
using annotate::BackendSpec;
using groundtruth::LabeledExample;
using promptkit::PromptFormat;

// ---------------------------------------------------------------------------
// Config

std::string config_to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["policies_dir"] = c.policies_dir;
  j["ann_dir"] = c.ann_dir;
  j["cache_path"] = c.cache_path;
  j["out_dir"] = c.out_dir;
  j["backend"] = {{"kind", annotate::backend_kind_name(c.backend.kind)},
                  {"endpoint_url", c.backend.endpoint_url},
                  {"model_name", c.backend.model_name},
                  {"temperature", c.backend.temperature},
                  {"max_output_tokens", c.backend.max_output_tokens},
                  {"noise_rate", c.backend.noise_rate},
                  {"noise_seed", c.backend.noise_seed},
                  {"api_key_env", c.backend.api_key_env},
                  {"timeout_seconds", c.backend.timeout_seconds}};
  j["format"] = promptkit::format_name(c.format);
  j["ratio"] = c.ratio;
  j["seed"] = c.seed;
  j["concurrency"] = c.concurrency;
  j["include_discontinuous"] = c.include_discontinuous;
  j["stratified_split"] = c.stratified_split;
  return j.dump(2);
}

RunConfig config_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  RunConfig c;
  c.policies_dir = j.value("policies_dir", c.policies_dir);
  c.ann_dir = j.value("ann_dir", c.ann_dir);
  c.cache_path = j.value("cache_path", c.cache_path);
  c.out_dir = j.value("out_dir", c.out_dir);
  if (j.contains("backend")) {
    const auto& b = j["backend"];
    if (b.contains("kind")) {
      auto kind = annotate::parse_backend_kind(b["kind"].get<std::string>());
      if (!kind) throw std::runtime_error("config: unknown backend kind");
      c.backend.kind = *kind;
    }
    c.backend.endpoint_url = b.value("endpoint_url", c.backend.endpoint_url);
    c.backend.model_name = b.value("model_name", c.backend.model_name);
    c.backend.temperature = b.value("temperature", c.backend.temperature);
    c.backend.max_output_tokens = b.value("max_output_tokens", c.backend.max_output_tokens);
    c.backend.noise_rate = b.value("noise_rate", c.backend.noise_rate);
    c.backend.noise_seed = b.value("noise_seed", c.backend.noise_seed);
    c.backend.api_key_env = b.value("api_key_env", c.backend.api_key_env);
    c.backend.timeout_seconds = b.value("timeout_seconds", c.backend.timeout_seconds);
  }
  if (j.contains("format")) {
    auto f = promptkit::parse_format(j["format"].get<std::string>());
    if (!f) throw std::runtime_error("config: unknown format");
    c.format = *f;
  }
  c.ratio = j.value("ratio", c.ratio);
  c.seed = j.value("seed", c.seed);
  c.concurrency = j.value("concurrency", c.concurrency);
  c.include_discontinuous = j.value("include_discontinuous", c.include_discontinuous);
  c.stratified_split = j.value("stratified_split", c.stratified_split);
  return c;
}

// ---------------------------------------------------------------------------
// Corpus store

std::string store_stem(const corpus::PolicyMeta& meta) {
  std::string stem = meta.site;
  if (meta.year) stem += "_" + std::to_string(*meta.year);
  return stem;
}

void store_write(const corpus::PolicyDocument& doc, const std::string& dir) {
  nlohmann::ordered_json j;
  j["site"] = doc.meta.site;
  if (doc.meta.year) {
    j["year"] = *doc.meta.year;
  } else {
    j["year"] = nullptr;
  }
  j["source_path"] = doc.meta.source_path;
  j["word_count"] = doc.word_count;
  j["text"] = doc.text;
  nlohmann::ordered_json sentences = nlohmann::ordered_json::array();
  for (const auto& s : doc.sentences) {
    sentences.push_back(
        {{"index", s.index}, {"start", s.start}, {"end", s.end}, {"text", s.text}});
  }
  j["sentences"] = std::move(sentences);

  fs::create_directories(dir);
  std::string path = (fs::path(dir) / (store_stem(doc.meta) + ".json")).string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write store file: " + path);
  out << j.dump(2) << '\n';
}

corpus::PolicyDocument store_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read store file: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  corpus::PolicyDocument doc;
  doc.meta.site = j.at("site").get<std::string>();
  if (!j.at("year").is_null()) doc.meta.year = j["year"].get<int>();
  doc.meta.source_path = j.value("source_path", std::string{});
  doc.word_count = j.at("word_count").get<std::size_t>();
  doc.text = j.at("text").get<std::string>();
  for (const auto& s : j.at("sentences")) {
    corpus::Sentence sentence;
    sentence.index = s.at("index").get<int>();
    sentence.start = s.at("start").get<std::size_t>();
    sentence.end = s.at("end").get<std::size_t>();
    sentence.text = s.at("text").get<std::string>();
    doc.sentences.push_back(std::move(sentence));
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Shared helpers

namespace {

std::vector<std::string> sorted_files(const std::string& dir,
                                      const std::vector<std::string>& extensions) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir);
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = to_lower(entry.path().extension().string());
    if (std::find(extensions.begin(), extensions.end(), ext) != extensions.end()) {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<LabeledExample> read_examples_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read examples: " + path);
  return groundtruth::read_examples_jsonl(in);
}

std::vector<annotate::AnnotationRecord> read_records_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read records: " + path);
  return annotate::read_records_jsonl(in);
}

PromptFormat required_format(const std::string& name) {
  auto f = promptkit::parse_format(name);
  if (!f) throw std::runtime_error("unknown format: " + name);
  return *f;
}

struct PolicyInputs {
  corpus::PolicyDocument doc;
  std::vector<groundtruth::GroundTruthAnnotation> annotations;
};

// Loads every store document and its sibling .ann file from ann_dir.
std::vector<PolicyInputs> load_store_with_annotations(const std::string& store_dir,
                                                      const std::string& ann_dir,
                                                      std::ostream& err) {
  std::vector<PolicyInputs> out;
  for (const auto& path : sorted_files(store_dir, {".json"})) {
    PolicyInputs inputs;
    inputs.doc = store_read(path);
    std::string ann_path =
        (fs::path(ann_dir) / (fs::path(path).stem().string() + ".ann")).string();
    std::ifstream ann_in(ann_path, std::ios::binary);
    if (!ann_in) throw std::runtime_error("missing annotation file: " + ann_path);
    std::ostringstream buf;
    buf << ann_in.rdbuf();
    auto parsed = groundtruth::parse_brat(buf.str(), inputs.doc.text);
    for (const auto& w : parsed.warnings) err << ann_path << ": " << w << "\n";
    inputs.annotations = std::move(parsed.annotations);
    out.push_back(std::move(inputs));
  }
  if (out.empty()) throw std::runtime_error("no store documents under " + store_dir);
  return out;
}

void print_report(const evalkit::EvalReport& report, std::ostream& out) {
  out << std::fixed << std::setprecision(4);
  out << "examples:          " << report.n_examples << "\n";
  out << "positives:         " << report.n_positive << "\n";
  out << "accuracy:          " << report.accuracy << "\n";
  out << "positive accuracy: " << report.positive_accuracy << "\n";
  out << "outcomes: PM " << report.totals[0] << " | SM " << report.totals[1] << " | ME "
      << report.totals[2] << " | IE " << report.totals[3] << "\n";
  out << "per-parameter (PM/SM/ME/IE):\n";
  for (std::size_t i = 0; i < groundtruth::kAllParameters.size(); ++i) {
    const auto& row = report.counts[i];
    if (row[0] + row[1] + row[2] + row[3] == 0) continue;
    out << "  " << std::setw(12) << std::left
        << std::string(to_string(groundtruth::kAllParameters[i])) << std::right << row[0] << "/"
        << row[1] << "/" << row[2] << "/" << row[3] << "\n";
  }
  out.unsetf(std::ios::floatfield);
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_ingest(const RunConfig& config, const std::string& manifest, std::ostream& out,
               std::ostream& err) {
  std::vector<corpus::PolicyMeta> metas;
  if (!manifest.empty()) {
    metas = corpus::read_manifest(manifest);
  } else {
    for (const auto& path : sorted_files(config.policies_dir, {".txt", ".html", ".htm"})) {
      auto meta = corpus::meta_from_filename(path);
      if (!meta) {
        err << "cannot derive metadata from filename: " << path << "\n";
        return 1;
      }
      metas.push_back(std::move(*meta));
    }
  }
  if (metas.empty()) throw std::runtime_error("no policy files found");

  std::vector<std::string> failures;
  std::vector<corpus::PolicyDocument> docs;
  for (const auto& meta : metas) {
    try {
      docs.push_back(corpus::load_policy(meta.source_path, meta));
    } catch (const std::exception& e) {
      failures.push_back(e.what());
    }
  }
  if (!failures.empty()) {
    err << "ingest failed for " << failures.size() << " file(s):\n";
    for (const auto& f : failures) err << "  " << f << "\n";
    return 1;
  }

  out << "site,year,sentences,words\n";
  for (const auto& doc : docs) {
    store_write(doc, config.out_dir);
    out << doc.meta.site << ',' << (doc.meta.year ? std::to_string(*doc.meta.year) : "") << ','
        << doc.sentences.size() << ',' << doc.word_count << "\n";
  }
  return 0;
}

int cmd_make_examples(const RunConfig& config, const std::string& store_dir, std::ostream& out,
                      std::ostream& err) {
  auto inputs = load_store_with_annotations(store_dir, config.ann_dir, err);

  std::vector<LabeledExample> all;
  for (const auto& policy : inputs) {
    auto built = groundtruth::build_examples(policy.doc, policy.annotations);
    for (const auto& d : built.diagnostics) err << policy.doc.meta.site << ": " << d << "\n";
    all.insert(all.end(), built.examples.begin(), built.examples.end());
  }

  auto split = groundtruth::split_dataset(all, config.ratio, config.seed, config.stratified_split);

  fs::create_directories(config.out_dir);
  auto write = [&](const std::vector<LabeledExample>& examples, const std::string& name) {
    std::string path = (fs::path(config.out_dir) / name).string();
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write " + path);
    groundtruth::write_examples_jsonl(examples, file);
  };
  write(split.train, "train.jsonl");
  write(split.test, "test.jsonl");

  std::size_t positives = 0, flagged = 0;
  std::array<int, 8> per_param{};
  for (const auto& ex : all) {
    if (ex.positive) {
      ++positives;
      for (std::size_t i = 0; i < groundtruth::kAllParameters.size(); ++i) {
        if (groundtruth::kAllParameters[i] == ex.param)
          per_param[i] += static_cast<int>(ex.expected_values.size());
      }
    }
    if (ex.flagged) ++flagged;
  }
  out << "examples: " << all.size() << " (train " << split.train.size() << ", test "
      << split.test.size() << ")\n";
  out << "positive: " << positives << "  negative: " << all.size() - positives << " ("
      << std::fixed << std::setprecision(1)
      << (all.empty() ? 0.0 : 100.0 * (all.size() - positives) / all.size()) << "%)\n";
  out.unsetf(std::ios::floatfield);
  out << "flagged:  " << flagged << "\n";
  out << "labeled parameter instances by type:\n";
  for (std::size_t i = 0; i < groundtruth::kAllParameters.size(); ++i) {
    out << "  " << to_string(groundtruth::kAllParameters[i]) << ": " << per_param[i] << "\n";
  }
  return 0;
}

int cmd_export_finetune(const RunConfig& config, const std::string& examples_path,
                        const std::string& out_path, const std::string& bos,
                        const std::string& eos, std::ostream& out) {
  auto examples = read_examples_file(examples_path);
  std::ofstream file(out_path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write " + out_path);
  promptkit::export_finetune(examples, config.format, file, bos, eos);
  out << "wrote " << out_path << "\n";
  return 0;
}

int cmd_annotate(const RunConfig& config, const std::string& examples_path,
                 const std::string& out_path, std::ostream& out, std::ostream& err) {
  auto examples = read_examples_file(examples_path);
  auto backend = annotate::make_backend(config.backend, examples, config.format);

  annotate::RunOptions options;
  options.format = config.format;
  options.concurrency = config.concurrency;
  options.cache_path = config.cache_path;
  auto result = annotate::run_batch(examples, *backend, config.backend, options);

  std::ofstream file(out_path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write " + out_path);
  annotate::write_records_jsonl(result.records, file);

  out << "records: " << result.records.size() << " (fresh " << result.fresh << ", cached "
      << result.cached << ", failed " << result.failed << ")\n";
  for (const auto& d : result.diagnostics) err << d << "\n";
  if (!result.errors.empty()) {
    err << result.errors.size() << " example(s) failed:\n";
    for (const auto& e : result.errors) err << "  " << e << "\n";
    return 1;
  }
  return 0;
}

int cmd_evaluate(const RunConfig& config, const std::string& records_path,
                 const std::string& examples_path, const std::string& out_prefix,
                 std::ostream& out, std::ostream& err) {
  auto examples = read_examples_file(examples_path);
  auto records = read_records_file(records_path);

  auto report = evalkit::aggregate(records, examples, config.include_discontinuous);

  // Superset matches whose extra text is not contiguous in the sentence are
  // still supersets, but they get flagged for review.
  {
    std::unordered_map<std::string, const annotate::AnnotationRecord*> by_id;
    for (const auto& rec : records) by_id[rec.example_id] = &rec;
    for (const auto& ex : examples) {
      if (ex.flagged && !config.include_discontinuous) continue;
      auto it = by_id.find(ex.example_id);
      if (it == by_id.end()) continue;
      if (evalkit::classify(ex.expected_values, it->second->parsed, ex.positive) !=
          evalkit::MatchOutcome::SupersetMatch)
        continue;
      for (const auto& value : it->second->parsed.values) {
        if (ex.sentence.text.find(value) == std::string::npos) {
          err << ex.example_id << ": superset completion is not contiguous in the sentence\n";
          break;
        }
      }
    }
  }

  std::string csv_path = out_prefix + ".csv";
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw std::runtime_error("cannot write " + csv_path);
  evalkit::write_eval_csv(records, examples, csv, config.include_discontinuous);

  std::string json_path = out_prefix + ".json";
  std::ofstream json(json_path, std::ios::binary);
  if (!json) throw std::runtime_error("cannot write " + json_path);
  evalkit::write_report_json(report, json);

  print_report(report, out);
  return 0;
}

int cmd_kappa(const std::string& codes_path, std::string coder_a, std::string coder_b,
              std::ostream& out) {
  std::ifstream in(codes_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read codes: " + codes_path);
  auto by_coder = evalkit::read_qual_codes_csv(in);
  if (coder_a.empty() || coder_b.empty()) {
    if (by_coder.size() != 2)
      throw std::runtime_error("codes file has " + std::to_string(by_coder.size()) +
                               " coders; pass --coder-a/--coder-b");
    auto it = by_coder.begin();
    coder_a = it->first;
    coder_b = std::next(it)->first;
  }
  for (const auto& name : {coder_a, coder_b}) {
    if (!by_coder.count(name)) throw std::runtime_error("no codes for coder '" + name + "'");
  }
  const auto& a = by_coder[coder_a];
  const auto& b = by_coder[coder_b];
  if (a.size() != b.size())
    throw std::runtime_error("coders coded different item counts (" + std::to_string(a.size()) +
                             " vs " + std::to_string(b.size()) + ")");
  std::vector<evalkit::QualCode> codes_a, codes_b;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].first != b[i].first)
      throw std::runtime_error("record ids diverge at item " + std::to_string(i) + ": '" +
                               a[i].first + "' vs '" + b[i].first + "'");
    codes_a.push_back(a[i].second);
    codes_b.push_back(b[i].second);
  }
  out << std::fixed << std::setprecision(4)
      << evalkit::cohen_kappa(codes_a, codes_b) << "\n";
  out.unsetf(std::ios::floatfield);
  return 0;
}

int cmd_breakdown(const std::string& codes_path, std::string coder, std::ostream& out) {
  std::ifstream in(codes_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read codes: " + codes_path);
  auto by_coder = evalkit::read_qual_codes_csv(in);
  if (by_coder.empty()) throw std::runtime_error("no codes in " + codes_path);
  if (coder.empty()) coder = by_coder.begin()->first;
  if (!by_coder.count(coder)) throw std::runtime_error("no codes for coder '" + coder + "'");

  auto breakdown = evalkit::error_breakdown(by_coder[coder]);
  out << "coded items: " << breakdown.total << "\n";
  for (const auto& [parent, entry] : breakdown.parents) {
    out << to_string(parent) << ": " << entry.count << " (" << entry.percent << "%)\n";
  }
  for (const auto& [child, entry] : breakdown.children) {
    out << "  " << to_string(child) << ": " << entry.count << " (" << entry.percent << "%)\n";
  }
  return 0;
}

int cmd_analyze(const RunConfig& config, const std::string& store_dir,
                const std::string& records_dir, const std::string& metric_name, int top_k,
                std::ostream& out, std::ostream& err) {
  std::vector<analysis::ParamProfile> profiles;
  if (!records_dir.empty()) {
    for (const auto& path : sorted_files(store_dir, {".json"})) {
      auto doc = store_read(path);
      std::string records_path =
          (fs::path(records_dir) / (fs::path(path).stem().string() + ".jsonl")).string();
      profiles.push_back(analysis::profile_from_records(read_records_file(records_path), doc));
    }
    if (profiles.empty()) throw std::runtime_error("no store documents under " + store_dir);
  } else {
    for (auto& policy : load_store_with_annotations(store_dir, config.ann_dir, err)) {
      profiles.push_back(analysis::profile_from_groundtruth(policy.annotations, policy.doc));
    }
  }

  fs::create_directories(config.out_dir);
  auto open = [&](const std::string& name) {
    std::string path = (fs::path(config.out_dir) / name).string();
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write " + path);
    return file;
  };

  std::vector<analysis::ParamProfile> dated;
  std::vector<analysis::ParamProfile> nonempty;
  for (const auto& p : profiles) {
    if (p.meta.year) {
      dated.push_back(p);
    } else {
      err << "skipping undated policy in longitudinal table: " << p.meta.site << "\n";
    }
    if (p.total > 0 && p.sentence_count > 0) {
      nonempty.push_back(p);
    } else {
      err << "skipping empty profile in metric tables: " << p.meta.site << "\n";
    }
  }

  {
    auto rows = analysis::longitudinal_table(dated);
    auto file = open("longitudinal.csv");
    analysis::write_longitudinal_csv(rows, file);
  }
  {
    auto file = open("variance.csv");
    analysis::write_variance_csv(nonempty, file);
  }
  {
    auto file = open("density.csv");
    analysis::write_density_csv(nonempty, file);
  }

  auto metric = metric_name == "density" ? analysis::RankMetric::Density
                                         : analysis::RankMetric::Variance;
  out << "top " << top_k << " by " << metric_name << ":\n";
  out << std::fixed << std::setprecision(metric == analysis::RankMetric::Density ? 4 : 1);
  for (const auto& entry : analysis::rank(nonempty, metric, top_k)) {
    out << "  " << entry.meta.site;
    if (entry.meta.year) out << " (" << *entry.meta.year << ")";
    out << "  " << entry.value << "\n";
  }
  out.unsetf(std::ios::floatfield);
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig config;

  // Config file values become defaults; explicit flags override them below.
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] == "--config") {
      std::ifstream in(args[i + 1], std::ios::binary);
      if (!in) {
        err << "cannot read config: " << args[i + 1] << "\n";
        return 1;
      }
      std::ostringstream buf;
      buf << in.rdbuf();
      try {
        config = config_from_json(buf.str());
      } catch (const std::exception& e) {
        err << "bad config: " << e.what() << "\n";
        return 1;
      }
    }
  }

  CLI::App app{"GKC-CI privacy-policy annotation pipeline"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file with run defaults");

  std::string format_name(promptkit::format_name(config.format));
  std::string backend_name(annotate::backend_kind_name(config.backend.kind));
  std::string manifest, store_dir, examples_path, records_path, records_dir, out_path,
      out_prefix, bos, eos, codes_path, coder_a, coder_b, coder, metric = "variance";
  int top_k = 15;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--policies", config.policies_dir, "directory of .txt/.html policies");
    cmd->add_option("--ann", config.ann_dir, "directory of Brat .ann files");
    cmd->add_option("--out", config.out_dir, "output directory");
    cmd->add_option("--cache", config.cache_path, "completion cache file");
    cmd->add_option("--format", format_name,
                    "prompt format: base|base-boseos|chat|chat-pe|two-step");
    cmd->add_option("--backend", backend_name, "backend: http|http-chat|oracle|noise");
    cmd->add_option("--endpoint", config.backend.endpoint_url, "backend base URL");
    cmd->add_option("--model", config.backend.model_name, "model name");
    cmd->add_option("--temperature", config.backend.temperature, "sampling temperature");
    cmd->add_option("--max-tokens", config.backend.max_output_tokens, "max completion tokens");
    cmd->add_option("--noise-rate", config.backend.noise_rate, "noise backend corruption rate");
    cmd->add_option("--noise-seed", config.backend.noise_seed, "noise backend seed");
    cmd->add_option("--api-key-env", config.backend.api_key_env,
                    "environment variable holding the API key");
    cmd->add_option("--timeout", config.backend.timeout_seconds, "request timeout (seconds)");
    cmd->add_option("--ratio", config.ratio, "train fraction");
    cmd->add_option("--seed", config.seed, "split seed");
    cmd->add_option("--concurrency", config.concurrency, "max in-flight requests");
    cmd->add_flag("--include-discontinuous", config.include_discontinuous,
                  "keep flagged examples in evaluation denominators");
    cmd->add_flag("--stratified", config.stratified_split, "stratify the split by policy");
  };

  auto* ingest = app.add_subcommand("ingest", "normalize and segment policy files");
  add_common(ingest);
  ingest->add_option("--manifest", manifest, "JSONL manifest with path/site/year");

  auto* make_examples =
      app.add_subcommand("make-examples", "build labeled examples and the train/test split");
  add_common(make_examples);
  make_examples->add_option("--store", store_dir, "ingested corpus directory")->required();

  auto* export_ft = app.add_subcommand("export-finetune", "write a fine-tune JSONL dataset");
  add_common(export_ft);
  export_ft->add_option("--examples", examples_path, "examples JSONL")->required();
  export_ft->add_option("--out-file", out_path, "output JSONL path")->required();
  export_ft->add_option("--bos", bos, "BOS marker");
  export_ft->add_option("--eos", eos, "EOS marker");

  auto* annotate_cmd = app.add_subcommand("annotate", "run a backend over examples");
  add_common(annotate_cmd);
  annotate_cmd->add_option("--examples", examples_path, "examples JSONL")->required();
  annotate_cmd->add_option("--out-file", out_path, "records JSONL path")->required();

  auto* evaluate = app.add_subcommand("evaluate", "score records against ground truth");
  add_common(evaluate);
  evaluate->add_option("--records", records_path, "records JSONL")->required();
  evaluate->add_option("--examples", examples_path, "examples JSONL")->required();
  evaluate->add_option("--out-prefix", out_prefix, "prefix for .csv/.json reports")->required();

  auto* kappa = app.add_subcommand("kappa", "inter-coder agreement for qualitative codes");
  kappa->add_option("--codes", codes_path, "codes CSV (record_id,coder,parent,child)")
      ->required();
  kappa->add_option("--coder-a", coder_a, "first coder name");
  kappa->add_option("--coder-b", coder_b, "second coder name");

  auto* breakdown = app.add_subcommand("breakdown", "qualitative code distribution");
  breakdown->add_option("--codes", codes_path, "codes CSV")->required();
  breakdown->add_option("--coder", coder, "coder name (default: first)");

  auto* analyze = app.add_subcommand("analyze", "corpus analytics tables and rankings");
  add_common(analyze);
  analyze->add_option("--store", store_dir, "ingested corpus directory")->required();
  analyze->add_option("--records-dir", records_dir,
                      "per-policy records JSONL directory (default: use --ann ground truth)");
  analyze->add_option("--metric", metric, "ranking metric: variance|density")
      ->check(CLI::IsMember({"variance", "density"}));
  analyze->add_option("--top", top_k, "ranking size");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream msg;
    int code = app.exit(e, msg, msg);
    (code == 0 ? out : err) << msg.str();
    return code;
  }

  try {
    config.format = required_format(format_name);
    auto kind = annotate::parse_backend_kind(backend_name);
    if (!kind) throw std::runtime_error("unknown backend: " + backend_name);
    config.backend.kind = *kind;

    if (app.got_subcommand(ingest)) return cmd_ingest(config, manifest, out, err);
    if (app.got_subcommand(make_examples)) return cmd_make_examples(config, store_dir, out, err);
    if (app.got_subcommand(export_ft))
      return cmd_export_finetune(config, examples_path, out_path, bos, eos, out);
    if (app.got_subcommand(annotate_cmd))
      return cmd_annotate(config, examples_path, out_path, out, err);
    if (app.got_subcommand(evaluate))
      return cmd_evaluate(config, records_path, examples_path, out_prefix, out, err);
    if (app.got_subcommand(kappa)) return cmd_kappa(codes_path, coder_a, coder_b, out);
    if (app.got_subcommand(breakdown)) return cmd_breakdown(codes_path, coder, out);
    if (app.got_subcommand(analyze))
      return cmd_analyze(config, store_dir, records_dir, metric, top_k, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << "no subcommand\n";
  return 1;
}

}  // namespace gkcci::cli
