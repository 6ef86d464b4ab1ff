#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace taskforge {

// A bracketed token in a pattern had no entry in the slot map.
struct UnresolvedSlot : std::runtime_error {
  std::string token;
  explicit UnresolvedSlot(const std::string& tok)
      : std::runtime_error("unresolved instruction slot " + tok), token(tok) {}
};
// describe() was asked for an attribute the object does not carry.
struct MissingAttribute : std::runtime_error {
  explicit MissingAttribute(const std::string& w) : std::runtime_error(w) {}
};

// Slot maps use the lowercased bracket text as key ("target object
// description", "amount", ...), values are the final surface strings.
using SlotMap = std::map<std::string, std::string>;

struct CategoryTemplates {
  std::string name;
  std::string high;
  struct LowLine {
    std::string text;
    std::string only_for_action;  // "" = unconditional, else "open"/"close"
  };
  std::vector<LowLine> low;
  // "<variation> <role>" -> description pattern.
  std::map<std::string, std::string> descriptions;
  // canonical token -> rendered spelling (dataset keeps historic typos).
  std::map<std::string, std::string> words;
  // roles rendered without the leading article.
  std::vector<std::string> bare_roles;
};

class TemplateLibrary {
 public:
  static TemplateLibrary load(const std::filesystem::path& file);
  // data/lang_templates.txt, loaded once.
  static const TemplateLibrary& bundled();

  const CategoryTemplates& category(const std::string& name) const;
  const std::vector<CategoryTemplates>& categories() const { return categories_; }

 private:
  std::vector<CategoryTemplates> categories_;
};

struct InstructionSet {
  std::vector<std::string> high;  // the set L; one sentence per episode here
  std::vector<std::string> low;   // one entry per unit task
};

// Fills a description pattern for (variation, role). `attrs` carries the
// object's surface words keyed by attribute: color, shape, size, relation,
// direction, level. Alternation tokens validate the value against their
// word list. Returns "the <...>" unless the role is listed bare.
std::string describe(const CategoryTemplates& tmpl, const std::string& variation,
                     const std::string& role, const SlotMap& attrs);

// Renders the category's high-level sentence and the per-unit low-level
// lines. `unit_count` must equal the number of low lines that survive the
// action filter. The first character of each sentence is capitalized after
// substitution (slot values are stored lowercase).
InstructionSet render(const CategoryTemplates& tmpl, const SlotMap& slots, int unit_count);

// "<high> Step zero" — the exact string the harness transmits per sub-goal.
std::string step_prompt(const std::string& high_level, int step);

// Inverse of render for one sentence: recovers slot values from a rendered
// string given its pattern. Throws std::invalid_argument when the string
// cannot have come from the pattern.
SlotMap parse_instruction(const std::string& pattern, const std::string& rendered);

}  // namespace taskforge
