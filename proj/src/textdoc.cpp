#include "taskforge/textdoc.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace taskforge {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

bool TextDoc::Section::has(const std::string& key) const {
  for (const auto& e : entries)
    if (e.key == key) return true;
  return false;
}

const std::string& TextDoc::Section::get(const std::string& key) const {
  for (const auto& e : entries)
    if (e.key == key) return e.value;
  throw TextDocError("missing key '" + key + "' in section [" + name + "]");
}

std::string TextDoc::Section::get_or(const std::string& key,
                                     const std::string& fallback) const {
  for (const auto& e : entries)
    if (e.key == key) return e.value;
  return fallback;
}

double TextDoc::Section::get_double(const std::string& key) const {
  return std::stod(get(key));
}

std::int64_t TextDoc::Section::get_int(const std::string& key) const {
  return std::stoll(get(key));
}

std::vector<double> TextDoc::Section::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& tok : split_tokens(get(key))) out.push_back(std::stod(tok));
  return out;
}

std::vector<std::string> TextDoc::Section::get_tokens(const std::string& key) const {
  return split_tokens(get(key));
}

void TextDoc::Section::set(const std::string& key, const std::string& value) {
  for (auto& e : entries) {
    if (e.key == key) {
      e.value = value;
      return;
    }
  }
  entries.push_back({key, value});
}

TextDoc TextDoc::parse(const std::string& text) {
  TextDoc doc;
  Section* current = &doc.header;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw TextDocError("line " + std::to_string(lineno) + ": unterminated section header");
      doc.sections.push_back(Section{trim(t.substr(1, t.size() - 2)), {}});
      current = &doc.sections.back();
      continue;
    }
    auto colon = t.find(':');
    if (colon == std::string::npos)
      throw TextDocError("line " + std::to_string(lineno) + ": expected 'key: value'");
    Entry e;
    e.key = trim(t.substr(0, colon));
    e.value = trim(t.substr(colon + 1));
    if (e.key.empty())
      throw TextDocError("line " + std::to_string(lineno) + ": empty key");
    current->entries.push_back(std::move(e));
  }
  return doc;
}

TextDoc TextDoc::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TextDocError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string TextDoc::serialize() const {
  std::ostringstream out;
  auto emit = [&out](const Section& s) {
    for (const auto& e : s.entries) out << e.key << ": " << e.value << "\n";
  };
  emit(header);
  for (const auto& s : sections) {
    out << "\n[" << s.name << "]\n";
    emit(s);
  }
  return out.str();
}

void TextDoc::write_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TextDocError("cannot write '" + path + "'");
  out << serialize();
}

std::vector<const TextDoc::Section*> TextDoc::sections_named(const std::string& name) const {
  std::vector<const Section*> out;
  for (const auto& s : sections)
    if (s.name == name) out.push_back(&s);
  return out;
}

const TextDoc::Section* TextDoc::first_section(const std::string& name) const {
  for (const auto& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}

void TextDoc::expect_format(const std::string& tag) const {
  if (!header.has("format") || header.get("format") != tag)
    throw TextDocError("expected 'format: " + tag + "' header");
}

std::vector<std::string> split_tokens(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string format_double(double v) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) break;
  }
  return buf;
}

std::string join_doubles(const double* v, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += format_double(v[i]);
  }
  return out;
}

}  // namespace taskforge
