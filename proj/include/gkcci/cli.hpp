#ifndef GKCCI_CLI_HPP_
#define GKCCI_CLI_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gkcci/annotate.hpp"
#include "gkcci/corpus.hpp"
#include "gkcci/promptkit.hpp"

namespace gkcci::cli {

// Defaults for a run; a JSON config file seeds these and command-line flags
// override both.
struct RunConfig {
  std::string policies_dir;
  std::string ann_dir;
  std::string cache_path;
  std::string out_dir;
  annotate::BackendSpec backend;
  promptkit::PromptFormat format = promptkit::PromptFormat::Base;
  double ratio = 0.7;
  std::uint64_t seed = 42;
  int concurrency = 4;
  bool include_discontinuous = false;
  bool stratified_split = false;
};

std::string config_to_json(const RunConfig& config);
RunConfig config_from_json(const std::string& text);

// Corpus store: one JSON document per policy under a directory.
std::string store_stem(const corpus::PolicyMeta& meta);
void store_write(const corpus::PolicyDocument& doc, const std::string& dir);
corpus::PolicyDocument store_read(const std::string& path);

// Entry point behind the gkcci binary; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gkcci::cli

#endif  // GKCCI_CLI_HPP_
