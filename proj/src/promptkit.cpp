#include "gkcci/promptkit.hpp"

#include <fstream>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "gkcci/strings.hpp"

namespace gkcci::promptkit {

using groundtruth::LabeledExample;
using groundtruth::Parameter;

std::string_view format_name(PromptFormat f) {
  switch (f) {
    case PromptFormat::Base: return "base";
    case PromptFormat::BaseWithBosEos: return "base-boseos";
    case PromptFormat::Chat: return "chat";
    case PromptFormat::ChatPromptEngineered: return "chat-pe";
    case PromptFormat::TwoStepStage1: return "two-step-stage1";
    case PromptFormat::TwoStepStage2: return "two-step-stage2";
  }
  return "?";
}

std::optional<PromptFormat> parse_format(std::string_view name) {
  if (name == "base") return PromptFormat::Base;
  if (name == "base-boseos") return PromptFormat::BaseWithBosEos;
  if (name == "chat") return PromptFormat::Chat;
  if (name == "chat-pe") return PromptFormat::ChatPromptEngineered;
  if (name == "two-step" || name == "two-step-stage1") return PromptFormat::TwoStepStage1;
  if (name == "two-step-stage2") return PromptFormat::TwoStepStage2;
  return std::nullopt;
}

bool is_chat_format(PromptFormat f) {
  return f == PromptFormat::Chat || f == PromptFormat::ChatPromptEngineered ||
         f == PromptFormat::TwoStepStage1 || f == PromptFormat::TwoStepStage2;
}

namespace {

std::string escape_quoted(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '\\' || c == '"') out += '\\';
    out += c;
  }
  return out;
}

std::string bracketed(std::string_view sentence) {
  return "[\"" + escape_quoted(sentence) + "\"]";
}

std::string base_prompt(const LabeledExample& ex) {
  std::string p = "Annotate: ";
  p += bracketed(ex.sentence.text);
  p += ' ';
  p += to_string(ex.param);
  p += "--> ";
  return p;
}

std::string target_body(const LabeledExample& ex) {
  std::string t(to_string(ex.param));
  t += ": ";
  t += serialize_values(ex.expected_values);
  return t;
}

}  // namespace

std::string serialize_values(const std::vector<std::string>& values) {
  if (values.empty()) return "N/A";
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += "; ";
    out += '"';
    out += escape_quoted(values[i]);
    out += '"';
  }
  out += ']';
  return out;
}

std::string synthesize_negative_completion(Parameter p) {
  return std::string(to_string(p)) + ": N/A";
}

RenderedExample render(const LabeledExample& ex, PromptFormat format, std::string_view bos,
                       std::string_view eos) {
  (void)eos;  // consumed at export time; see export_finetune
  RenderedExample r;
  r.example_id = ex.example_id;
  switch (format) {
    case PromptFormat::Base:
      r.prompt_text = base_prompt(ex);
      r.target_completion = target_body(ex) + "x-x-x";
      break;
    case PromptFormat::BaseWithBosEos:
      r.prompt_text = std::string(bos) + base_prompt(ex);
      r.target_completion = target_body(ex) + "x-x-x";
      break;
    case PromptFormat::Chat:
      r.is_chat = true;
      r.messages = {{"system", std::string(kSystemMessage)}, {"user", base_prompt(ex)}};
      r.target_completion = target_body(ex);
      break;
    case PromptFormat::ChatPromptEngineered:
      r.is_chat = true;
      r.messages = {{"system", std::string(kSystemMessage)},
                    {"user", "For the following excerpt, provide the GKC-CI annotation of '" +
                                 std::string(to_string(ex.param)) + "': " +
                                 bracketed(ex.sentence.text)}};
      r.target_completion = target_body(ex);
      break;
    case PromptFormat::TwoStepStage1:
      r.is_chat = true;
      r.messages = {{"system", std::string(kSystemMessage)},
                    {"user", "For the following excerpt, answer Yes or No: does it contain the "
                             "GKC-CI parameter '" +
                                 std::string(to_string(ex.param)) + "'? " +
                                 bracketed(ex.sentence.text)}};
      r.target_completion = ex.positive ? "Yes" : "No";
      break;
    case PromptFormat::TwoStepStage2:
      r.is_chat = true;
      r.messages = {{"system", std::string(kSystemMessage)},
                    {"user", "For the following excerpt, provide the GKC-CI annotation of '" +
                                 std::string(to_string(ex.param)) + "': " +
                                 bracketed(ex.sentence.text)}};
      r.target_completion = target_body(ex);
      break;
  }
  return r;
}

namespace {

// Reads one double-quoted value starting at s[pos] == '"'. Returns false on
// an unterminated quote.
bool read_quoted(std::string_view s, std::size_t& pos, std::string& out) {
  out.clear();
  ++pos;  // opening quote
  while (pos < s.size()) {
    char c = s[pos];
    if (c == '\\' && pos + 1 < s.size() && (s[pos + 1] == '"' || s[pos + 1] == '\\')) {
      out += s[pos + 1];
      pos += 2;
    } else if (c == '"') {
      ++pos;
      return true;
    } else {
      out += c;
      ++pos;
    }
  }
  return false;
}

// Parses "v1"; "v2"; bare3 — quoted or bare items separated by ';'.
bool parse_value_items(std::string_view s, std::vector<std::string>& values) {
  std::size_t pos = 0;
  while (true) {
    while (pos < s.size() && is_space(s[pos])) ++pos;
    if (pos >= s.size()) break;
    if (s[pos] == '"') {
      std::string item;
      if (!read_quoted(s, pos, item)) return false;
      values.push_back(std::move(item));
    } else {
      std::size_t semi = s.find(';', pos);
      std::string_view item = s.substr(pos, (semi == std::string_view::npos ? s.size() : semi) - pos);
      values.emplace_back(trim(item));
      pos = semi == std::string_view::npos ? s.size() : semi;
    }
    while (pos < s.size() && is_space(s[pos])) ++pos;
    if (pos >= s.size()) break;
    if (s[pos] != ';') return false;
    ++pos;
  }
  return true;
}

}  // namespace

ParsedCompletion parse_completion(std::string_view raw, Parameter requested) {
  ParsedCompletion result;
  std::string_view s = trim(raw);
  if (s.size() >= 5 && s.substr(s.size() - 5) == "x-x-x") {
    s = trim(s.substr(0, s.size() - 5));
  }

  std::string_view name = to_string(requested);
  if (!starts_with_ci(s, name) || s.size() <= name.size() || s[name.size()] != ':') {
    return result;  // identification failure
  }
  result.identified = true;
  result.param = requested;

  std::string_view rest = trim(s.substr(name.size() + 1));
  if (rest.empty() || iequals(rest, "N/A")) {
    return result;  // no value
  }

  std::string_view body = rest;
  if (body.front() == '[' && body.back() == ']' && body.size() >= 2) {
    body = body.substr(1, body.size() - 2);
    if (trim(body).empty()) return result;
  }
  std::vector<std::string> values;
  if (parse_value_items(body, values) && !values.empty()) {
    result.values = std::move(values);
  } else {
    result.values = {std::string(rest)};  // malformed shape: keep it whole
  }
  return result;
}

StageOneAnswer normalize_stage1_answer(std::string_view raw, std::string* diagnostic) {
  std::string t = to_lower(trim(raw));
  if (!t.empty() && (t.back() == '.' || t.back() == '!')) t.pop_back();
  if (t == "yes") return StageOneAnswer::Yes;
  if (t == "no") return StageOneAnswer::No;
  if (diagnostic)
    *diagnostic = "stage-1 answer '" + std::string(trim(raw)) + "' is not yes/no; treated as No";
  return StageOneAnswer::No;
}

void export_finetune(const std::vector<LabeledExample>& examples, PromptFormat format,
                     std::ostream& out, std::string_view bos, std::string_view eos) {
  for (const auto& ex : examples) {
    if (format == PromptFormat::TwoStepStage2 && !ex.positive) continue;
    RenderedExample r = render(ex, format, bos, eos);
    nlohmann::ordered_json j;
    if (r.is_chat) {
      nlohmann::ordered_json messages = nlohmann::ordered_json::array();
      for (const auto& m : r.messages) {
        messages.push_back({{"role", m.role}, {"content", m.content}});
      }
      messages.push_back({{"role", "assistant"}, {"content", r.target_completion}});
      j["messages"] = std::move(messages);
    } else {
      j["prompt"] = r.prompt_text;
      std::string completion = r.target_completion;
      if (format == PromptFormat::BaseWithBosEos) completion += eos;
      j["completion"] = completion;
    }
    out << j.dump() << '\n';
  }
}

void export_finetune(const groundtruth::DatasetSplit& split, PromptFormat format,
                     const std::string& path, std::string_view bos, std::string_view eos) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write fine-tune file: " + path);
  export_finetune(split.train, format, out, bos, eos);
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace gkcci::promptkit
