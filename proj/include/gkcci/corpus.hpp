#ifndef GKCCI_CORPUS_HPP_
#define GKCCI_CORPUS_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gkcci::corpus {

struct PolicyMeta {
  std::string site;                // e.g. "facebook.com"
  std::optional<int> year;         // absent for undated policies
  std::string source_path;
};

// One sentence of a policy. [start, end) are byte offsets into the owning
// document's normalized text; text equals that slice.
struct Sentence {
  int index = 0;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string text;
};

struct PolicyDocument {
  PolicyMeta meta;
  std::string text;                // normalized plain text
  std::vector<Sentence> sentences;
  std::size_t word_count = 0;
};

// Strips markup from (possibly malformed) HTML. Script/style/comment content
// is dropped, block-level elements become newline-separated lines, inline
// whitespace runs collapse to single spaces, and character entities decode.
std::string html_to_text(std::string_view html);

// Normalizes Unicode quotes/dashes/spaces to ASCII and replaces invalid UTF-8
// sequences so downstream JSON emission never sees broken encoding.
std::string normalize_text(std::string_view text);

// Deterministic rule-based splitter: sentence ends at '.', '!' or '?' followed
// by whitespace and an uppercase letter, digit or quote; newlines always
// split; a frozen abbreviation list suppresses false '.' splits.
std::vector<Sentence> segment_sentences(const std::string& text);

// Builds a document from already-extracted text (normalizes, segments, counts).
PolicyDocument document_from_text(std::string_view raw_text, PolicyMeta meta);

// Loads a policy file; .html/.htm route through html_to_text, .txt is taken
// as-is. Throws std::runtime_error on unreadable files or empty extractions.
PolicyDocument load_policy(const std::string& path, PolicyMeta meta);

// Sidecar manifest: JSON lines {"path":..., "site":..., "year":...}.
// Relative paths resolve against the manifest's directory.
std::vector<PolicyMeta> read_manifest(const std::string& manifest_path);

// Filename convention "<site>_<year>.<ext>"; falls back to the stem as site
// with no year. Returns nullopt for empty stems.
std::optional<PolicyMeta> meta_from_filename(const std::string& path);

}  // namespace gkcci::corpus

#endif  // GKCCI_CORPUS_HPP_
