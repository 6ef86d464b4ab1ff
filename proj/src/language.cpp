#include "taskforge/language.hpp"

#include <algorithm>
#include <cctype>

#include "taskforge/config.hpp"
#include "taskforge/textdoc.hpp"

namespace taskforge {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

// Splits a pattern into literal runs and slot tokens. A slot piece keeps the
// lowercased bracket text; a literal piece keeps the raw characters.
struct Piece {
  bool slot = false;
  std::string text;
};

std::vector<Piece> split_pattern(const std::string& pattern) {
  std::vector<Piece> out;
  std::size_t pos = 0;
  while (pos < pattern.size()) {
    std::size_t open = pattern.find('[', pos);
    if (open == std::string::npos) {
      out.push_back({false, pattern.substr(pos)});
      break;
    }
    std::size_t close = pattern.find(']', open);
    if (close == std::string::npos)
      throw std::invalid_argument("unterminated slot in pattern: " + pattern);
    if (open > pos) out.push_back({false, pattern.substr(pos, open - pos)});
    out.push_back({true, lower(pattern.substr(open + 1, close - open - 1))});
    pos = close + 1;
  }
  return out;
}

std::string substitute(const std::string& pattern, const SlotMap& slots) {
  std::string out;
  for (const Piece& piece : split_pattern(pattern)) {
    if (!piece.slot) {
      out += piece.text;
      continue;
    }
    auto it = slots.find(piece.text);
    if (it == slots.end()) throw UnresolvedSlot("[" + piece.text + "]");
    out += it->second;
  }
  return out;
}

// Attribute keys an alternation token may draw from, in lookup order.
const char* kAlternationAttrs[] = {"size", "relation", "direction", "level", "color", "shape"};

}  // namespace

TemplateLibrary TemplateLibrary::load(const std::filesystem::path& file) {
  TextDoc doc = TextDoc::parse_file(file.string());
  doc.expect_format("lang/1");
  TemplateLibrary lib;
  for (const Section* sec : doc.sections_named("category")) {
    CategoryTemplates t;
    t.name = sec->get("name");
    t.high = sec->get("high");
    for (const TextDoc::Entry& e : sec->entries) {
      if (e.key == "low") {
        t.low.push_back({e.value, ""});
      } else if (e.key.rfind("low if ", 0) == 0) {
        t.low.push_back({e.value, e.key.substr(7)});
      } else if (e.key.rfind("desc ", 0) == 0) {
        t.descriptions[e.key.substr(5)] = e.value;
      } else if (e.key.rfind("word ", 0) == 0) {
        t.words[e.key.substr(5)] = e.value;
      } else if (e.key == "bare") {
        for (const std::string& role : split_tokens(e.value)) t.bare_roles.push_back(role);
      }
    }
    lib.categories_.push_back(std::move(t));
  }
  if (lib.categories_.empty()) throw TextDocError("no [category] records in " + file.string());
  return lib;
}

const TemplateLibrary& TemplateLibrary::bundled() {
  static const TemplateLibrary lib = load(data_dir() / "lang_templates.txt");
  return lib;
}

const CategoryTemplates& TemplateLibrary::category(const std::string& name) const {
  for (const CategoryTemplates& t : categories_)
    if (t.name == name) return t;
  throw std::out_of_range("no instruction templates for category '" + name + "'");
}

std::string describe(const CategoryTemplates& tmpl, const std::string& variation,
                     const std::string& role, const SlotMap& attrs) {
  auto it = tmpl.descriptions.find(variation + " " + role);
  if (it == tmpl.descriptions.end())
    throw MissingAttribute("no description rule for " + tmpl.name + "/" + variation + "/" + role);

  std::string out;
  for (const Piece& piece : split_pattern(it->second)) {
    if (!piece.slot) {
      out += piece.text;
      continue;
    }
    std::string value;
    if (piece.text.find('/') == std::string::npos) {
      // Plain attribute token; "shape 1"/"shape 2" both name the role's shape.
      std::string key = piece.text.substr(0, piece.text.find(' '));
      auto at = attrs.find(key);
      if (at == attrs.end())
        throw MissingAttribute("description needs attribute '" + key + "' for role " + role);
      value = at->second;
    } else {
      // Alternation token: find the attribute whose value is listed.
      std::vector<std::string> options;
      std::string tok = piece.text;
      for (std::size_t cut = tok.find('/'); ; cut = tok.find('/')) {
        options.push_back(tok.substr(0, cut));
        if (cut == std::string::npos) break;
        tok = tok.substr(cut + 1);
      }
      for (const char* key : kAlternationAttrs) {
        auto at = attrs.find(key);
        if (at != attrs.end() &&
            std::find(options.begin(), options.end(), at->second) != options.end()) {
          value = at->second;
          break;
        }
      }
      if (value.empty())
        throw MissingAttribute("no attribute matches [" + piece.text + "] for role " + role);
    }
    auto alias = tmpl.words.find(value);
    out += alias == tmpl.words.end() ? value : alias->second;
  }

  bool bare = std::find(tmpl.bare_roles.begin(), tmpl.bare_roles.end(), role) !=
              tmpl.bare_roles.end();
  return bare ? out : "the " + out;
}

InstructionSet render(const CategoryTemplates& tmpl, const SlotMap& slots, int unit_count) {
  InstructionSet out;
  out.high.push_back(capitalize(substitute(tmpl.high, slots)));
  std::string action;
  if (auto it = slots.find("action type"); it != slots.end()) action = it->second;
  for (const CategoryTemplates::LowLine& line : tmpl.low) {
    if (!line.only_for_action.empty() && line.only_for_action != action) continue;
    out.low.push_back(capitalize(substitute(line.text, slots)));
  }
  if (static_cast<int>(out.low.size()) != unit_count)
    throw std::logic_error("category " + tmpl.name + ": " + std::to_string(out.low.size()) +
                           " low-level lines for " + std::to_string(unit_count) + " unit tasks");
  return out;
}

std::string step_prompt(const std::string& high_level, int step) {
  if (step < 0) throw std::invalid_argument("step_prompt: negative step");
  static const char* kWords[] = {"zero", "one", "two",   "three", "four",
                                 "five", "six", "seven", "eight", "nine"};
  std::string word = step < 10 ? kWords[step] : std::to_string(step);
  return high_level + " Step " + word;
}

SlotMap parse_instruction(const std::string& pattern, const std::string& rendered) {
  const std::vector<Piece> pieces = split_pattern(pattern);
  SlotMap slots;

  // Backtracking match; slot values are non-empty and must agree on repeats.
  std::function<bool(std::size_t, std::size_t)> match = [&](std::size_t pi,
                                                            std::size_t pos) -> bool {
    if (pi == pieces.size()) return pos == rendered.size();
    const Piece& piece = pieces[pi];
    if (!piece.slot) {
      const std::string& lit = piece.text;
      if (rendered.compare(pos, lit.size(), lit) != 0) {
        // Allow the sentence-initial capitalization of a leading literal.
        if (!(pos == 0 && rendered.size() >= lit.size() &&
              capitalize(lit) == rendered.substr(0, lit.size())))
          return false;
      }
      return match(pi + 1, pos + lit.size());
    }
    for (std::size_t end = pos + 1; end <= rendered.size(); ++end) {
      std::string value = rendered.substr(pos, end - pos);
      // A slot that opened the sentence was capitalized by render.
      if (pos == 0) value = lower(value.substr(0, 1)) + value.substr(1);
      auto it = slots.find(piece.text);
      if (it != slots.end() && it->second != value) continue;
      bool fresh = it == slots.end();
      if (fresh) slots[piece.text] = value;
      if (match(pi + 1, end)) return true;
      if (fresh) slots.erase(piece.text);
    }
    return false;
  };

  if (!match(0, 0))
    throw std::invalid_argument("string does not match pattern: \"" + rendered + "\" vs \"" +
                                pattern + "\"");
  return slots;
}

}  // namespace taskforge
