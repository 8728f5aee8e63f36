#include "gkcci/corpus.hpp"

#include <array>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "gkcci/strings.hpp"

namespace fs = std::filesystem;

namespace gkcci::corpus {

namespace {

// ---------------------------------------------------------------------------
// HTML extraction

const std::unordered_set<std::string>& block_tags() {
  static const std::unordered_set<std::string> tags = {
      "p",       "div",     "br",      "li",    "ul",    "ol",     "dl",
      "dd",      "dt",      "h1",      "h2",    "h3",    "h4",     "h5",
      "h6",      "tr",      "td",      "th",    "table", "thead",  "tbody",
      "section", "article", "header",  "footer", "nav",  "aside",  "main",
      "blockquote", "pre",  "hr",      "form",  "title", "address", "figure",
      "figcaption", "caption"};
  return tags;
}

const std::unordered_map<std::string, std::string>& named_entities() {
  static const std::unordered_map<std::string, std::string> map = {
      {"amp", "&"},    {"lt", "<"},      {"gt", ">"},      {"quot", "\""},
      {"apos", "'"},   {"nbsp", " "},    {"rsquo", "\xe2\x80\x99"},
      {"lsquo", "\xe2\x80\x98"},         {"rdquo", "\xe2\x80\x9d"},
      {"ldquo", "\xe2\x80\x9c"},         {"mdash", "\xe2\x80\x94"},
      {"ndash", "\xe2\x80\x93"},         {"hellip", "..."},
      {"copy", "(c)"}, {"reg", "(R)"},   {"trade", "(TM)"},
      {"middot", "\xc2\xb7"},            {"bull", "\xe2\x80\xa2"},
      {"sect", "\xc2\xa7"},              {"deg", "\xc2\xb0"},
      {"laquo", "\xc2\xab"},             {"raquo", "\xc2\xbb"},
      {"para", "\xc2\xb6"},              {"times", "x"},
      {"shy", ""},     {"ensp", " "},    {"emsp", " "},    {"thinsp", " "}};
  return map;
}

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xc0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3f));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xe0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
    out += static_cast<char>(0x80 | (cp & 0x3f));
  } else if (cp < 0x110000) {
    out += static_cast<char>(0xf0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3f));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
    out += static_cast<char>(0x80 | (cp & 0x3f));
  }
}

// Decodes the entity starting at s[pos] ('&'). Returns decoded text and
// advances pos past the entity, or returns "&" verbatim if it is not one.
std::string decode_entity(std::string_view s, std::size_t& pos) {
  std::size_t semi = s.find(';', pos + 1);
  if (semi == std::string_view::npos || semi - pos > 12) {
    ++pos;
    return "&";
  }
  std::string_view body = s.substr(pos + 1, semi - pos - 1);
  if (!body.empty() && body[0] == '#') {
    std::uint32_t cp = 0;
    bool ok = body.size() > 1;
    if (body.size() > 2 && (body[1] == 'x' || body[1] == 'X')) {
      for (std::size_t i = 2; i < body.size() && ok; ++i) {
        char c = body[i];
        if (!std::isxdigit(static_cast<unsigned char>(c))) ok = false;
        cp = cp * 16 + static_cast<std::uint32_t>(
                           std::isdigit(static_cast<unsigned char>(c))
                               ? c - '0'
                               : std::tolower(static_cast<unsigned char>(c)) - 'a' + 10);
      }
    } else {
      for (std::size_t i = 1; i < body.size() && ok; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(body[i]))) ok = false;
        cp = cp * 10 + static_cast<std::uint32_t>(body[i] - '0');
      }
    }
    if (ok && cp > 0 && cp < 0x110000) {
      pos = semi + 1;
      std::string out;
      append_utf8(out, cp);
      return out;
    }
    ++pos;
    return "&";
  }
  auto it = named_entities().find(std::string(body));
  if (it != named_entities().end()) {
    pos = semi + 1;
    return it->second;
  }
  ++pos;
  return "&";
}

std::string tag_name(std::string_view tag_body) {
  std::size_t i = 0;
  if (i < tag_body.size() && tag_body[i] == '/') ++i;
  std::size_t j = i;
  while (j < tag_body.size() &&
         (std::isalnum(static_cast<unsigned char>(tag_body[j])) || tag_body[j] == '-'))
    ++j;
  return to_lower(tag_body.substr(i, j - i));
}

// Finds the '>' closing a tag, skipping quoted attribute values.
std::size_t find_tag_end(std::string_view s, std::size_t pos) {
  char quote = 0;
  for (std::size_t i = pos; i < s.size(); ++i) {
    char c = s[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '>') {
      return i;
    }
  }
  return std::string_view::npos;
}

bool imatch_at(std::string_view s, std::size_t pos, std::string_view word) {
  return pos + word.size() <= s.size() && iequals(s.substr(pos, word.size()), word);
}

// ---------------------------------------------------------------------------
// Sentence segmentation

// Frozen so segmentation is reproducible across runs and machines. Tokens are
// matched case-insensitively against the word ending at a candidate period.
const std::unordered_set<std::string>& abbreviations() {
  static const std::unordered_set<std::string> abbr = {
      "e.g.", "i.e.", "etc.", "cf.",   "vs.",  "viz.",  "inc.",  "corp.",
      "ltd.", "co.",  "llc.", "no.",   "mr.",  "mrs.",  "ms.",   "dr.",
      "prof.", "st.", "jr.",  "sr.",   "u.s.", "u.k.",  "u.n.",  "e.u.",
      "a.m.", "p.m.", "ph.d.", "dept.", "est.", "approx.", "sec.", "art.",
      "para.", "fig.", "min.", "max."};
  return abbr;
}

bool is_sentence_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_opening_context(char c) {
  return std::isupper(static_cast<unsigned char>(c)) ||
         std::isdigit(static_cast<unsigned char>(c)) || c == '"' || c == '\'';
}

// The word (no whitespace) ending at and including text[dot].
std::string word_ending_at(std::string_view text, std::size_t dot) {
  std::size_t begin = dot;
  while (begin > 0 && !is_space(text[begin - 1])) --begin;
  return to_lower(text.substr(begin, dot - begin + 1));
}

void emit_trimmed(const std::string& text, std::size_t from, std::size_t to,
                  std::vector<Sentence>& out) {
  while (from < to && is_space(text[from])) ++from;
  while (to > from && is_space(text[to - 1])) --to;
  if (from >= to) return;
  Sentence s;
  s.index = static_cast<int>(out.size());
  s.start = from;
  s.end = to;
  s.text = text.substr(from, to - from);
  out.push_back(std::move(s));
}

}  // namespace

std::string html_to_text(std::string_view html) {
  std::string current;        // text of the block being accumulated
  std::vector<std::string> lines;
  bool pending_space = false;

  auto flush_block = [&]() {
    std::string line = collapse_whitespace(current);
    if (!line.empty()) lines.push_back(std::move(line));
    current.clear();
    pending_space = false;
  };
  auto append_text = [&](std::string_view piece) {
    for (std::size_t i = 0; i < piece.size(); ++i) {
      char c = piece[i];
      if (is_space(c)) {
        pending_space = true;
      } else {
        if (pending_space && !current.empty()) current += ' ';
        pending_space = false;
        current += c;
      }
    }
  };

  std::size_t pos = 0;
  while (pos < html.size()) {
    char c = html[pos];
    if (c == '<') {
      if (imatch_at(html, pos, "<!--")) {
        std::size_t end = html.find("-->", pos + 4);
        pos = end == std::string_view::npos ? html.size() : end + 3;
        continue;
      }
      if (imatch_at(html, pos, "<script")) {
        std::size_t end = pos;
        while (end < html.size() && !imatch_at(html, end, "</script")) ++end;
        std::size_t close = find_tag_end(html, end);
        pos = close == std::string_view::npos ? html.size() : close + 1;
        flush_block();
        continue;
      }
      if (imatch_at(html, pos, "<style")) {
        std::size_t end = pos;
        while (end < html.size() && !imatch_at(html, end, "</style")) ++end;
        std::size_t close = find_tag_end(html, end);
        pos = close == std::string_view::npos ? html.size() : close + 1;
        flush_block();
        continue;
      }
      std::size_t close = find_tag_end(html, pos);
      if (close == std::string_view::npos) {
        // Unterminated tag: drop the rest, tag soup tolerated.
        break;
      }
      std::string name = tag_name(html.substr(pos + 1, close - pos - 1));
      if (block_tags().count(name)) {
        flush_block();
      }
      pos = close + 1;
    } else if (c == '&') {
      append_text(decode_entity(html, pos));
    } else {
      append_text(std::string_view(&c, 1));
      ++pos;
    }
  }
  flush_block();

  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += '\n';
    out += lines[i];
  }
  return out;
}

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    unsigned char b = static_cast<unsigned char>(text[i]);
    if (b < 0x80) {
      out += static_cast<char>(b);
      ++i;
      continue;
    }
    // Decode one UTF-8 sequence; invalid bytes become '?'.
    std::uint32_t cp = 0;
    std::size_t len = 0;
    if ((b & 0xe0) == 0xc0) {
      cp = b & 0x1f;
      len = 2;
    } else if ((b & 0xf0) == 0xe0) {
      cp = b & 0x0f;
      len = 3;
    } else if ((b & 0xf8) == 0xf0) {
      cp = b & 0x07;
      len = 4;
    } else {
      out += '?';
      ++i;
      continue;
    }
    if (i + len > text.size()) {
      out += '?';
      ++i;
      continue;
    }
    bool valid = true;
    for (std::size_t k = 1; k < len; ++k) {
      unsigned char cont = static_cast<unsigned char>(text[i + k]);
      if ((cont & 0xc0) != 0x80) {
        valid = false;
        break;
      }
      cp = (cp << 6) | (cont & 0x3f);
    }
    if (!valid) {
      out += '?';
      ++i;
      continue;
    }
    i += len;
    switch (cp) {
      case 0x2018:  // left single quote
      case 0x2019:  // right single quote
      case 0x201a:
      case 0x2032:
        out += '\'';
        break;
      case 0x201c:  // left double quote
      case 0x201d:  // right double quote
      case 0x201e:
      case 0x2033:
        out += '"';
        break;
      case 0x2013:  // en dash
      case 0x2014:  // em dash
      case 0x2212:  // minus sign
        out += '-';
        break;
      case 0x00a0:  // no-break space
      case 0x2002:
      case 0x2003:
      case 0x2009:
        out += ' ';
        break;
      case 0x2026:  // ellipsis
        out += "...";
        break;
      case 0x00ad:  // soft hyphen
        break;
      default:
        append_utf8(out, cp);
        break;
    }
  }
  return out;
}

std::vector<Sentence> segment_sentences(const std::string& text) {
  std::vector<Sentence> out;
  if (text.empty()) return out;

  std::size_t seg_start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '\n') {
      emit_trimmed(text, seg_start, i, out);
      seg_start = i + 1;
      continue;
    }
    if (!is_sentence_terminal(c)) continue;

    // Consume a run of terminal punctuation ("...", "?!").
    std::size_t last = i;
    while (last + 1 < text.size() && is_sentence_terminal(text[last + 1])) ++last;

    std::size_t after = last + 1;
    if (after >= text.size()) {
      i = last;
      continue;  // end of text; the tail flush below picks this up
    }
    if (!is_space(text[after]) || text[after] == '\n') {
      i = last;
      continue;
    }
    std::size_t next = after;
    while (next < text.size() && is_space(text[next]) && text[next] != '\n') ++next;
    if (next >= text.size() || text[next] == '\n') {
      i = last;
      continue;  // newline handling will split here anyway
    }
    if (!is_opening_context(text[next])) {
      i = last;
      continue;
    }
    if (text[last] == '.' && abbreviations().count(word_ending_at(text, last))) {
      i = last;
      continue;
    }
    emit_trimmed(text, seg_start, last + 1, out);
    seg_start = last + 1;
    i = last;
  }
  emit_trimmed(text, seg_start, text.size(), out);
  return out;
}

PolicyDocument document_from_text(std::string_view raw_text, PolicyMeta meta) {
  PolicyDocument doc;
  doc.meta = std::move(meta);
  doc.text = normalize_text(raw_text);
  doc.sentences = segment_sentences(doc.text);
  doc.word_count = count_words(doc.text);
  return doc;
}

PolicyDocument load_policy(const std::string& path, PolicyMeta meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read policy file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string raw = buf.str();

  std::string ext = to_lower(fs::path(path).extension().string());
  std::string text;
  if (ext == ".html" || ext == ".htm") {
    text = html_to_text(raw);
  } else {
    text = raw;
  }
  if (meta.source_path.empty()) meta.source_path = path;
  PolicyDocument doc = document_from_text(text, std::move(meta));
  if (trim(doc.text).empty()) throw std::runtime_error("empty policy: " + path);
  return doc;
}

std::vector<PolicyMeta> read_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot read manifest: " + manifest_path);
  fs::path base = fs::path(manifest_path).parent_path();
  std::vector<PolicyMeta> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("manifest line " + std::to_string(lineno) + ": " + e.what());
    }
    PolicyMeta meta;
    meta.site = j.at("site").get<std::string>();
    if (meta.site.empty())
      throw std::runtime_error("manifest line " + std::to_string(lineno) + ": empty site");
    if (j.contains("year") && !j["year"].is_null()) {
      int year = j["year"].get<int>();
      if (year < 1990 || year > 2100)
        throw std::runtime_error("manifest line " + std::to_string(lineno) +
                                 ": year out of range: " + std::to_string(year));
      meta.year = year;
    }
    fs::path p = j.at("path").get<std::string>();
    meta.source_path = (p.is_absolute() ? p : base / p).string();
    out.push_back(std::move(meta));
  }
  return out;
}

std::optional<PolicyMeta> meta_from_filename(const std::string& path) {
  std::string stem = fs::path(path).stem().string();
  if (stem.empty()) return std::nullopt;
  PolicyMeta meta;
  meta.source_path = path;
  std::size_t us = stem.rfind('_');
  if (us != std::string::npos && us + 1 < stem.size()) {
    std::string tail = stem.substr(us + 1);
    bool all_digits = !tail.empty() &&
                      std::all_of(tail.begin(), tail.end(),
                                  [](unsigned char c) { return std::isdigit(c); });
    if (all_digits && tail.size() == 4) {
      int year = std::stoi(tail);
      if (year >= 1990 && year <= 2100) {
        meta.site = stem.substr(0, us);
        meta.year = year;
        return meta;
      }
    }
  }
  meta.site = stem;
  return meta;
}

}  // namespace gkcci::corpus
