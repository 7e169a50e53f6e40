// Copyright 2026 The sifkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Record-level tokenizer for fixed-format SIF files. Nothing here knows what
// a record means; the expander interprets the SectionedProgram.
//
// Data records use the standard columns
//
//   field 1: 2-3   field 2: 5-14   field 3: 15-24
//   field 4: 25-36 field 5: 40-49  field 6: 50-61
//
// and assignment records of the nonlinear sections (A, F, G, H lines and
// their '+' continuations) carry a Fortran expression from column 25 on.
// A record whose tokens do not sit inside those columns is re-aligned by
// matching each token to the nearest field start, provided the match is
// unique.

#ifndef SIFKIT_READER_HPP
#define SIFKIT_READER_HPP

#include <algorithm>
#include <array>
#include <cctype>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sifkit/error.hpp"
#include "sifkit/expression.hpp"

namespace sifkit {

enum class SectionKind {
  Preamble,  // parameter records between NAME and the first header
  Variables,
  Groups,
  Constants,
  Ranges,
  Bounds,
  StartPoint,
  Quadratic,
  ElementType,
  ElementUses,
  GroupType,
  GroupUses,
  ObjectBound,
  ElementsTemporaries,
  ElementsGlobals,
  ElementsIndividuals,
  GroupsTemporaries,
  GroupsGlobals,
  GroupsIndividuals,
};

inline std::string_view section_title(SectionKind kind) {
  switch (kind) {
    case SectionKind::Preamble: return "";
    case SectionKind::Variables: return "VARIABLES";
    case SectionKind::Groups: return "GROUPS";
    case SectionKind::Constants: return "CONSTANTS";
    case SectionKind::Ranges: return "RANGES";
    case SectionKind::Bounds: return "BOUNDS";
    case SectionKind::StartPoint: return "START POINT";
    case SectionKind::Quadratic: return "QUADRATIC";
    case SectionKind::ElementType: return "ELEMENT TYPE";
    case SectionKind::ElementUses: return "ELEMENT USES";
    case SectionKind::GroupType: return "GROUP TYPE";
    case SectionKind::GroupUses: return "GROUP USES";
    case SectionKind::ObjectBound: return "OBJECT BOUND";
    case SectionKind::ElementsTemporaries:
    case SectionKind::GroupsTemporaries: return "TEMPORARIES";
    case SectionKind::ElementsGlobals:
    case SectionKind::GroupsGlobals: return "GLOBALS";
    case SectionKind::ElementsIndividuals:
    case SectionKind::GroupsIndividuals: return "INDIVIDUALS";
  }
  return "";
}

inline bool is_elements_section(SectionKind k) {
  return k == SectionKind::ElementsTemporaries || k == SectionKind::ElementsGlobals ||
         k == SectionKind::ElementsIndividuals;
}
inline bool is_groups_section(SectionKind k) {
  return k == SectionKind::GroupsTemporaries || k == SectionKind::GroupsGlobals ||
         k == SectionKind::GroupsIndividuals;
}
inline bool is_nonlinear_section(SectionKind k) { return is_elements_section(k) || is_groups_section(k); }

/// One non-comment line. Empty strings mark absent fields.
struct SourceRecord {
  int line = 0;
  std::string indicator;  // field 1
  std::string name2;
  std::string name3;
  std::string value4;
  std::string name5;
  std::string value6;
  std::optional<std::string> expression;        // assignment records only
  std::optional<std::string> trailing_comment;  // text after '$'

  bool is_parameter_marker() const {
    return trailing_comment && trailing_comment->rfind("-PARAMETER", 0) == 0;
  }

  bool operator==(const SourceRecord&) const = default;
};

struct Section {
  SectionKind kind = SectionKind::Preamble;
  int header_line = 0;
  std::vector<SourceRecord> records;

  bool operator==(const Section&) const = default;
};

/// Header and ENDATA lines of an ELEMENTS or GROUPS block.
struct NonlinearBlock {
  bool elements = true;
  std::string label;
  int header_line = 0;
  int endata_line = 0;

  bool operator==(const NonlinearBlock&) const = default;
};

struct SectionedProgram {
  std::string problem_name;
  int name_line = 0;
  std::string classification;
  int classification_line = 0;
  std::vector<Section> sections;
  std::vector<NonlinearBlock> blocks;
  bool has_endata = false;
  int endata_line = 0;

  const Section* find(SectionKind kind) const {
    for (const auto& s : sections)
      if (s.kind == kind) return &s;
    return nullptr;
  }

  bool operator==(const SectionedProgram&) const = default;
};

namespace detail {

struct FieldSpan {
  std::size_t begin;
  std::size_t end;
};

inline constexpr std::array<FieldSpan, 6> kDataFields{{{1, 3}, {4, 14}, {14, 24}, {24, 36}, {39, 49}, {49, 61}}};
inline constexpr std::size_t kExpressionColumn = 24;

struct Token {
  std::size_t begin;
  std::size_t end;
  std::string text;
};

inline std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == ' ') {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ') ++j;
    out.push_back({i, j, std::string(line.substr(i, j - i))});
    i = j;
  }
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(' ');
  if (b == std::string_view::npos) return {};
  std::size_t e = s.find_last_not_of(' ');
  return std::string(s.substr(b, e - b + 1));
}

/// Splits a token that starts at a name field and runs into the adjacent
/// field, as happens when a name fills its field completely.
inline std::vector<Token> split_abutting(std::vector<Token> tokens) {
  std::vector<Token> out;
  for (auto& t : tokens) {
    for (std::size_t k : {1, 2, 4}) {
      const FieldSpan& f = kDataFields[k];
      if (t.begin == f.begin && t.end > f.end && kDataFields[k + 1].begin == f.end) {
        std::size_t cut = f.end - t.begin;
        out.push_back({t.begin, f.end, t.text.substr(0, cut)});
        t = {f.end, t.end, t.text.substr(cut)};
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

/// Strict placement: every token lies inside one field, one token per field.
inline std::optional<std::array<std::string, 6>> place_strict(const std::vector<Token>& tokens,
                                                              std::size_t nfields) {
  std::array<std::string, 6> fields;
  for (const auto& t : tokens) {
    bool placed = false;
    for (std::size_t k = 0; k < nfields; ++k) {
      if (t.begin >= kDataFields[k].begin && t.end <= kDataFields[k].end) {
        if (!fields[k].empty()) return std::nullopt;
        fields[k] = t.text;
        placed = true;
        break;
      }
    }
    if (!placed) return std::nullopt;
  }
  return fields;
}

/// Order-preserving assignment of tokens to fields minimizing the total
/// distance to the field start columns; nullopt when the optimum is not
/// unique or impossible.
inline std::optional<std::array<std::string, 6>> place_nearest(const std::vector<Token>& tokens,
                                                               std::size_t nfields) {
  const std::size_t nt = tokens.size();
  if (nt > nfields) return std::nullopt;
  if (nt == 0) return std::array<std::string, 6>{};
  constexpr long kInf = std::numeric_limits<long>::max() / 4;
  // best[t][k]: min cost placing tokens 0..t with token t in field k
  std::vector<std::array<long, 6>> best(nt);
  std::vector<std::array<int, 6>> ways(nt);
  std::vector<std::array<int, 6>> from(nt);
  auto cost = [&](std::size_t t, std::size_t k) {
    long d = static_cast<long>(tokens[t].begin) - static_cast<long>(kDataFields[k].begin);
    return d < 0 ? -d : d;
  };
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t k = 0; k < 6; ++k) {
      best[t][k] = kInf;
      ways[t][k] = 0;
      from[t][k] = -1;
      if (k >= nfields) continue;
      if (t == 0) {
        best[t][k] = cost(t, k);
        ways[t][k] = 1;
        continue;
      }
      for (std::size_t p = 0; p < k; ++p) {
        if (best[t - 1][p] >= kInf) continue;
        long c = best[t - 1][p] + cost(t, k);
        if (c < best[t][k]) {
          best[t][k] = c;
          ways[t][k] = ways[t - 1][p];
          from[t][k] = static_cast<int>(p);
        } else if (c == best[t][k]) {
          ways[t][k] += ways[t - 1][p];
        }
      }
    }
  }
  long min_cost = kInf;
  int total = 0;
  std::size_t last = 0;
  for (std::size_t k = 0; k < nfields; ++k) {
    if (best[nt - 1][k] < min_cost) {
      min_cost = best[nt - 1][k];
      total = ways[nt - 1][k];
      last = k;
    } else if (best[nt - 1][k] == min_cost && min_cost < kInf) {
      total += ways[nt - 1][k];
    }
  }
  if (min_cost >= kInf || total != 1) return std::nullopt;
  std::array<std::string, 6> fields;
  std::size_t k = last;
  for (std::size_t t = nt; t-- > 0;) {
    fields[k] = tokens[t].text;
    if (t > 0) k = static_cast<std::size_t>(from[t][k]);
  }
  return fields;
}

inline bool is_assignment_indicator(std::string_view ind) {
  if (ind.empty()) return false;
  if (ind.size() == 2 && ind[1] != '+') return false;
  return std::string_view("AIEFGH").find(ind[0]) != std::string_view::npos;
}

/// Number of name fields an assignment record carries before its expression.
inline std::size_t assignment_name_count(std::string_view ind, bool element_section) {
  if (ind.size() == 2) return 0;  // continuation
  switch (ind[0]) {
    case 'A':
    case 'E': return 1;
    case 'I': return 2;
    case 'G': return element_section ? 1 : 0;
    case 'H': return element_section ? 2 : 0;
    default: return 0;
  }
}

inline std::optional<SectionKind> data_header(std::string_view text) {
  static const std::map<std::string, SectionKind, std::less<>> headers{
      {"VARIABLES", SectionKind::Variables},       {"COLUMNS", SectionKind::Variables},
      {"GROUPS", SectionKind::Groups},             {"ROWS", SectionKind::Groups},
      {"CONSTRAINTS", SectionKind::Groups},        {"CONSTANTS", SectionKind::Constants},
      {"RHS", SectionKind::Constants},             {"RHS'", SectionKind::Constants},
      {"RANGES", SectionKind::Ranges},             {"BOUNDS", SectionKind::Bounds},
      {"START POINT", SectionKind::StartPoint},    {"QUADRATIC", SectionKind::Quadratic},
      {"HESSIAN", SectionKind::Quadratic},         {"QUADS", SectionKind::Quadratic},
      {"QUADOBJ", SectionKind::Quadratic},         {"QSECTION", SectionKind::Quadratic},
      {"ELEMENT TYPE", SectionKind::ElementType},  {"ELEMENT USES", SectionKind::ElementUses},
      {"GROUP TYPE", SectionKind::GroupType},      {"GROUP USES", SectionKind::GroupUses},
      {"OBJECT BOUND", SectionKind::ObjectBound},
  };
  auto it = headers.find(text);
  if (it == headers.end()) return std::nullopt;
  return it->second;
}

}  // namespace detail

/// Splits one record line. `kind` selects the layout; `line` is only used
/// in diagnostics.
inline SourceRecord parse_record(std::string_view raw, SectionKind kind, int line) {
  using namespace detail;
  SourceRecord rec;
  rec.line = line;
  std::string_view body = raw;
  if (auto dollar = raw.find('$'); dollar != std::string_view::npos) {
    rec.trailing_comment = trim(raw.substr(dollar + 1));
    body = raw.substr(0, dollar);
  }
  auto fail = [&](const std::string& what) -> SourceRecord {
    throw Error(ErrorKind::MalformedRecord, what + ": '" + trim(raw) + "'", line);
  };

  std::string indicator = trim(body.substr(0, std::min<std::size_t>(body.size(), 3)));
  if (indicator.find(' ') != std::string::npos) indicator.clear();
  bool assignment = is_nonlinear_section(kind) && kind != SectionKind::ElementsTemporaries &&
                    kind != SectionKind::GroupsTemporaries && is_assignment_indicator(indicator);

  if (assignment) {
    std::string_view head = body.substr(0, std::min(body.size(), kExpressionColumn));
    auto tokens = tokenize(head);
    bool straddles = body.size() > kExpressionColumn && body[kExpressionColumn - 1] != ' ' &&
                     body[kExpressionColumn] != ' ';
    auto strict = straddles ? std::nullopt : place_strict(tokens, 3);
    if (strict) {
      rec.indicator = (*strict)[0];
      rec.name2 = (*strict)[1];
      rec.name3 = (*strict)[2];
      rec.expression = body.size() > kExpressionColumn ? trim(body.substr(kExpressionColumn)) : std::string();
    } else {
      auto all = tokenize(body);
      std::size_t t = 0;
      if (t < all.size() && all[t].begin <= 2) rec.indicator = all[t++].text;
      std::size_t names = assignment_name_count(rec.indicator, is_elements_section(kind));
      std::array<std::string*, 2> slots{&rec.name2, &rec.name3};
      for (std::size_t k = 0; k < names; ++k) {
        if (t >= all.size()) fail("missing name field");
        *slots[k] = all[t++].text;
      }
      rec.expression = t < all.size() ? trim(body.substr(all[t].begin)) : std::string();
    }
    if (rec.indicator.empty()) fail("assignment record without indicator");
    return rec;
  }

  auto tokens = split_abutting(tokenize(body));
  auto fields = place_strict(tokens, 6);
  if (!fields) fields = place_nearest(tokens, 6);
  if (!fields) fail("fields cannot be aligned to the standard columns");
  rec.indicator = (*fields)[0];
  rec.name2 = (*fields)[1];
  rec.name3 = (*fields)[2];
  rec.value4 = (*fields)[3];
  rec.name5 = (*fields)[4];
  rec.value6 = (*fields)[5];
  if (!rec.value4.empty() && !parse_fortran_real(rec.value4)) fail("field 4 is not a number");
  if (!rec.value6.empty() && !parse_fortran_real(rec.value6)) fail("field 6 is not a number");
  return rec;
}

struct ReadOutcome {
  SectionedProgram program;
  std::vector<Diagnostic> diagnostics;
  bool fatal = false;  // the program is structurally incomplete
};

/// Reads the whole file, collecting every diagnostic. Malformed records are
/// dropped from the program and reported.
inline ReadOutcome read_sif_collect(std::string_view text) {
  using namespace detail;
  ReadOutcome out;
  SectionedProgram& prog = out.program;
  enum class Phase { BeforeName, Data, BetweenBlocks, Elements, Groups } phase = Phase::BeforeName;
  std::vector<SectionKind> seen;  // kinds opened in the current phase
  std::optional<std::size_t> current;  // index into prog.sections

  auto report = [&](ErrorKind k, int line, std::string msg) {
    out.diagnostics.push_back({k, line, std::move(msg)});
  };
  auto open_section = [&](SectionKind kind, int line) {
    if (std::find(seen.begin(), seen.end(), kind) != seen.end()) {
      report(ErrorKind::DuplicateSection, line, "section " + std::string(section_title(kind)) + " repeated");
    }
    seen.push_back(kind);
    prog.sections.push_back({kind, line, {}});
    current = prog.sections.size() - 1;
  };

  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view raw = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    if (raw.find('\t') != std::string_view::npos) {
      report(ErrorKind::MalformedRecord, lineno, "tab character");
      continue;
    }
    if (raw.find_first_not_of(' ') == std::string_view::npos) continue;
    if (raw[0] == '*') {
      std::string lower(raw);
      std::transform(lower.begin(), lower.end(), lower.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      auto at = lower.find("classification");
      if (at != std::string::npos && prog.classification.empty()) {
        auto toks = tokenize(raw.substr(at + 14));
        if (!toks.empty()) {
          prog.classification = toks.front().text;
          prog.classification_line = lineno;
        }
      }
      continue;
    }

    if (raw[0] != ' ') {
      auto words = tokenize(raw);
      std::string head = words[0].text;
      std::string two = words.size() > 1 ? head + " " + words[1].text : head;
      if (head == "NAME") {
        if (phase != Phase::BeforeName) {
          report(ErrorKind::DuplicateSection, lineno, "second NAME line");
          continue;
        }
        prog.problem_name = words.size() > 1 ? words[1].text : std::string();
        prog.name_line = lineno;
        phase = Phase::Data;
        seen.clear();
        current.reset();
      } else if (head == "ENDATA") {
        if (phase == Phase::Data) {
          prog.has_endata = true;
          prog.endata_line = lineno;
        } else if (phase == Phase::Elements || phase == Phase::Groups) {
          prog.blocks.back().endata_line = lineno;
        } else {
          report(ErrorKind::UnknownSectionHeader, lineno, "ENDATA outside any block");
        }
        phase = Phase::BetweenBlocks;
        current.reset();
      } else if (phase == Phase::Data) {
        auto kind = data_header(two);
        if (!kind) kind = data_header(head);
        if (!kind) {
          report(ErrorKind::UnknownSectionHeader, lineno, "unknown section header '" + trim(raw) + "'");
          current.reset();
          continue;
        }
        open_section(*kind, lineno);
      } else if (phase == Phase::BetweenBlocks && (head == "ELEMENTS" || head == "GROUPS")) {
        phase = head == "ELEMENTS" ? Phase::Elements : Phase::Groups;
        prog.blocks.push_back({head == "ELEMENTS", words.size() > 1 ? words[1].text : std::string(), lineno, 0});
        seen.clear();
        current.reset();
      } else if ((phase == Phase::Elements || phase == Phase::Groups) &&
                 (head == "TEMPORARIES" || head == "GLOBALS" || head == "INDIVIDUALS")) {
        bool el = phase == Phase::Elements;
        SectionKind kind = head == "TEMPORARIES" ? (el ? SectionKind::ElementsTemporaries : SectionKind::GroupsTemporaries)
                           : head == "GLOBALS"   ? (el ? SectionKind::ElementsGlobals : SectionKind::GroupsGlobals)
                                                 : (el ? SectionKind::ElementsIndividuals : SectionKind::GroupsIndividuals);
        open_section(kind, lineno);
      } else {
        report(ErrorKind::UnknownSectionHeader, lineno, "unknown section header '" + trim(raw) + "'");
        current.reset();
      }
      continue;
    }

    if (phase == Phase::Data && !current && prog.sections.empty()) {
      seen.push_back(SectionKind::Preamble);
      prog.sections.push_back({SectionKind::Preamble, 0, {}});
      current = 0;
    }
    if (!current) {
      report(ErrorKind::MalformedRecord, lineno, "record outside any section: '" + trim(raw) + "'");
      continue;
    }
    try {
      Section& sec = prog.sections[*current];
      sec.records.push_back(parse_record(raw, sec.kind, lineno));
    } catch (const Error& e) {
      for (const auto& d : e.diagnostics()) out.diagnostics.push_back(d);
    }
  }

  if (phase != Phase::BetweenBlocks || !prog.has_endata) {
    report(ErrorKind::MissingEndata, lineno, phase == Phase::BeforeName ? "no NAME line" : "file ends before ENDATA");
    out.fatal = true;
  }
  return out;
}

inline SectionedProgram read_sif(std::string_view text) {
  auto outcome = read_sif_collect(text);
  if (!outcome.diagnostics.empty()) throw Error(std::move(outcome.diagnostics));
  return std::move(outcome.program);
}

namespace detail {

inline void put_at(std::string& line, std::size_t column, std::string_view text) {
  if (text.empty()) return;
  std::size_t at = column;
  if (line.size() > at) at = line.size() + 1;
  line.resize(at, ' ');
  line += text;
}

}  // namespace detail

/// Prints one record back in fixed format.
inline std::string format_record(const SourceRecord& rec) {
  using detail::put_at;
  std::string line;
  put_at(line, 1, rec.indicator);
  put_at(line, 4, rec.name2);
  put_at(line, 14, rec.name3);
  if (rec.expression) {
    put_at(line, detail::kExpressionColumn, *rec.expression);
  } else {
    put_at(line, 24, rec.value4);
    put_at(line, 39, rec.name5);
    put_at(line, 49, rec.value6);
  }
  if (line.empty()) line = " ";
  if (rec.trailing_comment) {
    line.resize(std::max<std::size_t>(line.size() + 1, 62), ' ');
    line += "$" + *rec.trailing_comment;
  }
  return line;
}

/// Writes a program back as SIF text, keeping every item on its original
/// line so that reading the output reproduces the program exactly.
inline std::string format_sif(const SectionedProgram& prog) {
  std::map<int, std::string> lines;
  auto pad14 = [](std::string s) {
    s.resize(std::max<std::size_t>(s.size() + 1, 14), ' ');
    return s;
  };
  lines[prog.name_line] = pad14("NAME") + prog.problem_name;
  if (prog.classification_line > 0) lines[prog.classification_line] = "*   classification " + prog.classification;
  for (const auto& s : prog.sections) {
    if (s.header_line > 0) lines[s.header_line] = std::string(section_title(s.kind));
    for (const auto& r : s.records) lines[r.line] = format_record(r);
  }
  if (prog.has_endata) lines[prog.endata_line] = "ENDATA";
  for (const auto& b : prog.blocks) {
    lines[b.header_line] = pad14(b.elements ? "ELEMENTS" : "GROUPS") + b.label;
    if (b.endata_line > 0) lines[b.endata_line] = "ENDATA";
  }
  std::string out;
  int next = 1;
  for (const auto& [no, text] : lines) {
    if (no <= 0) continue;
    for (; next < no; ++next) out += "\n";
    out += text + "\n";
    next = no + 1;
  }
  return out;
}

}  // namespace sifkit

#endif  // SIFKIT_READER_HPP
