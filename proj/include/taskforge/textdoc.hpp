#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace taskforge {

struct TextDocError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Line-oriented key/value document used by all bundled data files
// (arm descriptions, catalogs, palettes, templates, configs).
//
//   format: arm/1
//   name: panda
//
//   [joint]
//   axis: 0 0 1
//   limits: -2.8973 2.8973
//
// '#' starts a comment, '[name]' opens a section, keys before the first
// section belong to the header. Values are kept verbatim (templates contain
// full sentences); numeric accessors tokenize on whitespace.
class TextDoc {
 public:
  struct Entry {
    std::string key;
    std::string value;
  };

  struct Section {
    std::string name;
    std::vector<Entry> entries;

    bool has(const std::string& key) const;
    const std::string& get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<std::string> get_tokens(const std::string& key) const;
    void set(const std::string& key, const std::string& value);
  };

  Section header;
  std::vector<Section> sections;

  static TextDoc parse(const std::string& text);
  static TextDoc parse_file(const std::string& path);

  // Canonical serialization: stable byte output for hashing/round trips.
  std::string serialize() const;
  void write_file(const std::string& path) const;

  std::vector<const Section*> sections_named(const std::string& name) const;
  const Section* first_section(const std::string& name) const;

  // Requires a 'format: <tag>' header entry matching `tag`.
  void expect_format(const std::string& tag) const;
};

using Section = TextDoc::Section;

std::vector<std::string> split_tokens(const std::string& s);
std::string format_double(double v);  // shortest round-trip decimal
std::string join_doubles(const double* v, std::size_t n);

}  // namespace taskforge
