#ifndef GKCCI_PROMPTKIT_HPP_
#define GKCCI_PROMPTKIT_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gkcci/groundtruth.hpp"

namespace gkcci::promptkit {

enum class PromptFormat {
  Base,                  // "Annotate: [...]" prompt/completion pairs
  BaseWithBosEos,        // Base wrapped in caller-supplied BOS/EOS markers
  Chat,                  // system/user/assistant messages, Base wording
  ChatPromptEngineered,  // chat with the "For the following excerpt..." prefix
  TwoStepStage1,         // presence question, target Yes/No
  TwoStepStage2,         // extraction given presence
};

std::string_view format_name(PromptFormat f);
std::optional<PromptFormat> parse_format(std::string_view name);
bool is_chat_format(PromptFormat f);

// System message used verbatim by all chat-style variants.
inline constexpr std::string_view kSystemMessage =
    "You are an assistant that understands Helen Nissenbaum's theory of "
    "Contextual integrity (CI) and the governance of knowledge commons "
    "framework (GKC). This framework is abbreviated as GKC-CI. You reply "
    "with brief, to-the-point answers with no elaboration.";

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;
};

struct RenderedExample {
  std::string example_id;
  std::string prompt_text;            // base variants
  std::vector<ChatMessage> messages;  // chat variants (system + user)
  std::string target_completion;
  bool is_chat = false;
};

// Renders one example into the requested variant. bos/eos are opaque marker
// strings used only by BaseWithBosEos (bos joins the prompt here; eos is
// appended to the training string at export time so the target keeps its
// x-x-x terminator).
RenderedExample render(const groundtruth::LabeledExample& example, PromptFormat format,
                       std::string_view bos = {}, std::string_view eos = {});

struct ParsedCompletion {
  bool identified = false;  // false: the requested parameter never appeared
  groundtruth::Parameter param = groundtruth::Parameter::Sender;
  std::vector<std::string> values;  // empty means the model answered N/A
};

// Parses a raw model completion for the requested parameter. Trailing
// whitespace and one trailing "x-x-x" are dropped; the completion must open
// with "<Param>:" (case-insensitive) or the result is an identification
// failure. Malformed value shapes degrade to a single bare value.
ParsedCompletion parse_completion(std::string_view raw, groundtruth::Parameter requested);

// Canonical value-list serialization used in targets: N/A when values is
// empty, otherwise ["v1"; "v2"] with \ and " backslash-escaped.
std::string serialize_values(const std::vector<std::string>& values);

// "<Param>: N/A" — stands in for stage 2 when stage 1 answered No.
std::string synthesize_negative_completion(groundtruth::Parameter p);

enum class StageOneAnswer { Yes, No };

// Trims and case-folds a stage-1 completion; anything that is not yes/no is
// treated as No with a diagnostic.
StageOneAnswer normalize_stage1_answer(std::string_view raw, std::string* diagnostic = nullptr);

// Fine-tune dataset export, one JSON line per rendered example. Base variants
// emit {"prompt","completion"}; chat variants emit {"messages":[...]}.
// TwoStepStage2 renders only positive examples.
void export_finetune(const std::vector<groundtruth::LabeledExample>& examples,
                     PromptFormat format, std::ostream& out, std::string_view bos = {},
                     std::string_view eos = {});

// Spec'd convenience: exports the training half of a split to a file.
void export_finetune(const groundtruth::DatasetSplit& split, PromptFormat format,
                     const std::string& path, std::string_view bos = {},
                     std::string_view eos = {});

}  // namespace gkcci::promptkit

#endif  // GKCCI_PROMPTKIT_HPP_
