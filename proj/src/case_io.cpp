#include "gridflex/case.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "gridflex/errors.hpp"
#include "json.hpp"

namespace gridflex {
namespace {

using nlohmann::ordered_json;

void byte_to_line_col(const std::string& text, std::size_t byte, int* line,
                      int* col) {
  *line = 1;
  *col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++*line;
      *col = 1;
    } else {
      ++*col;
    }
  }
}

[[noreturn]] void schema_fail(const std::string& where, const std::string& why) {
  throw SchemaError(where + ": " + why);
}

const ordered_json& require_key(const ordered_json& obj, const std::string& key,
                                const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_fail(where, "missing key '" + key + "'");
  return *it;
}

double as_number(const ordered_json& v, const std::string& where) {
  if (!v.is_number()) schema_fail(where, "expected a number");
  return v.get<double>();
}

std::string as_id(const ordered_json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  schema_fail(where, "expected a string or integer identifier");
}

void reject_unknown(const ordered_json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) schema_fail(where, "unknown key '" + key + "'");
}

CaseDocument::Storage parse_storage_entry(const ordered_json& j,
                                          const std::string& where) {
  if (!j.is_object()) schema_fail(where, "expected an object");
  reject_unknown(j,
                 {"id", "bus", "e_min", "e_max", "e_initial", "p_charge_max",
                  "p_discharge_max", "cost"},
                 where);
  CaseDocument::Storage s;
  s.id = as_id(require_key(j, "id", where), where + ".id");
  s.bus = as_id(require_key(j, "bus", where), where + ".bus");
  s.e_min = as_number(require_key(j, "e_min", where), where + ".e_min");
  s.e_max = as_number(require_key(j, "e_max", where), where + ".e_max");
  s.e_initial =
      as_number(require_key(j, "e_initial", where), where + ".e_initial");
  s.p_charge_max = as_number(require_key(j, "p_charge_max", where),
                             where + ".p_charge_max");
  s.p_discharge_max = as_number(require_key(j, "p_discharge_max", where),
                                where + ".p_discharge_max");
  s.cost = as_number(require_key(j, "cost", where), where + ".cost");
  return s;
}

ordered_json parse_json_or_throw(const std::string& text) {
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    int line = 0, col = 0;
    byte_to_line_col(text, e.byte > 0 ? e.byte - 1 : 0, &line, &col);
    throw ParseError(e.what(), line, col);
  }
}

}  // namespace

void validate_case(const CaseDocument& doc) {
  if (!(doc.base_mva > 0.0)) throw ValidationError("base_mva must be positive");

  std::unordered_set<std::string> bus_ids;
  for (const auto& b : doc.buses) {
    if (b.id.empty()) throw ValidationError("bus with empty id");
    if (!bus_ids.insert(b.id).second)
      throw ValidationError("duplicate bus id " + b.id);
  }
  if (doc.buses.empty()) throw ValidationError("case has no buses");
  if (!doc.slack_bus.empty() && !bus_ids.count(doc.slack_bus))
    throw ValidationError("slack_bus " + doc.slack_bus + " is not a bus");

  std::unordered_set<std::string> ids;
  for (const auto& g : doc.generators) {
    if (!ids.insert(g.id).second)
      throw ValidationError("duplicate generator id " + g.id);
    if (!bus_ids.count(g.bus))
      throw ValidationError("unknown bus " + g.bus + " for generator " + g.id);
    if (g.p_min > g.p_max)
      throw ValidationError("p_min > p_max for generator " + g.id);
    if (g.ramp_up < 0.0 || g.ramp_down < 0.0)
      throw ValidationError("negative ramp for generator " + g.id);
  }
  ids.clear();
  for (const auto& s : doc.storage) {
    if (!ids.insert(s.id).second)
      throw ValidationError("duplicate storage id " + s.id);
    if (!bus_ids.count(s.bus))
      throw ValidationError("unknown bus " + s.bus + " for storage " + s.id);
    if (s.e_min > s.e_max)
      throw ValidationError("e_min > e_max for storage " + s.id);
    if (s.e_initial < s.e_min || s.e_initial > s.e_max)
      throw ValidationError("e_initial outside [e_min, e_max] for storage " +
                            s.id);
    if (s.p_charge_max < 0.0 || s.p_discharge_max < 0.0)
      throw ValidationError("negative power limit for storage " + s.id);
  }
  ids.clear();
  for (const auto& l : doc.lines) {
    if (!ids.insert(l.id).second)
      throw ValidationError("duplicate line id " + l.id);
    if (!bus_ids.count(l.from))
      throw ValidationError("unknown bus " + l.from + " for line " + l.id);
    if (!bus_ids.count(l.to))
      throw ValidationError("unknown bus " + l.to + " for line " + l.id);
    if (l.from == l.to)
      throw ValidationError("line " + l.id + " has identical endpoints");
    if (!(l.reactance > 0.0))
      throw ValidationError("reactance must be positive for line " + l.id);
    if (!(l.flow_limit > 0.0))
      throw ValidationError("flow_limit must be positive for line " + l.id);
  }
}

CaseDocument parse_case_json(const std::string& text) {
  const ordered_json root = parse_json_or_throw(text);
  if (!root.is_object()) schema_fail("document", "top level must be an object");
  reject_unknown(
      root, {"base_mva", "slack_bus", "buses", "generators", "storage", "lines"},
      "document");

  CaseDocument doc;
  doc.base_mva = as_number(require_key(root, "base_mva", "document"), "base_mva");
  if (auto it = root.find("slack_bus"); it != root.end())
    doc.slack_bus = as_id(*it, "slack_bus");

  const auto& buses = require_key(root, "buses", "document");
  if (!buses.is_array()) schema_fail("buses", "expected an array");
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const std::string where = "buses[" + std::to_string(i) + "]";
    const auto& j = buses[i];
    if (!j.is_object()) schema_fail(where, "expected an object");
    reject_unknown(j, {"id", "load_mw"}, where);
    CaseDocument::Bus b;
    b.id = as_id(require_key(j, "id", where), where + ".id");
    b.load_mw = as_number(require_key(j, "load_mw", where), where + ".load_mw");
    doc.buses.push_back(std::move(b));
  }

  if (auto it = root.find("generators"); it != root.end()) {
    if (!it->is_array()) schema_fail("generators", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string where = "generators[" + std::to_string(i) + "]";
      const auto& j = (*it)[i];
      if (!j.is_object()) schema_fail(where, "expected an object");
      reject_unknown(
          j, {"id", "bus", "p_min", "p_max", "ramp_up", "ramp_down", "cost"},
          where);
      CaseDocument::Generator g;
      g.id = as_id(require_key(j, "id", where), where + ".id");
      g.bus = as_id(require_key(j, "bus", where), where + ".bus");
      g.p_min = as_number(require_key(j, "p_min", where), where + ".p_min");
      g.p_max = as_number(require_key(j, "p_max", where), where + ".p_max");
      g.ramp_up = as_number(require_key(j, "ramp_up", where), where + ".ramp_up");
      g.ramp_down =
          as_number(require_key(j, "ramp_down", where), where + ".ramp_down");
      g.cost = as_number(require_key(j, "cost", where), where + ".cost");
      doc.generators.push_back(std::move(g));
    }
  }

  if (auto it = root.find("storage"); it != root.end()) {
    if (!it->is_array()) schema_fail("storage", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i)
      doc.storage.push_back(
          parse_storage_entry((*it)[i], "storage[" + std::to_string(i) + "]"));
  }

  if (auto it = root.find("lines"); it != root.end()) {
    if (!it->is_array()) schema_fail("lines", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string where = "lines[" + std::to_string(i) + "]";
      const auto& j = (*it)[i];
      if (!j.is_object()) schema_fail(where, "expected an object");
      reject_unknown(j, {"id", "from", "to", "reactance", "flow_limit"}, where);
      CaseDocument::Line l;
      l.id = as_id(require_key(j, "id", where), where + ".id");
      l.from = as_id(require_key(j, "from", where), where + ".from");
      l.to = as_id(require_key(j, "to", where), where + ".to");
      l.reactance =
          as_number(require_key(j, "reactance", where), where + ".reactance");
      l.flow_limit =
          as_number(require_key(j, "flow_limit", where), where + ".flow_limit");
      doc.lines.push_back(std::move(l));
    }
  }

  validate_case(doc);
  return doc;
}

std::string serialize_case_json(const CaseDocument& doc) {
  ordered_json root;
  root["base_mva"] = doc.base_mva;
  if (!doc.slack_bus.empty()) root["slack_bus"] = doc.slack_bus;
  root["buses"] = ordered_json::array();
  for (const auto& b : doc.buses)
    root["buses"].push_back({{"id", b.id}, {"load_mw", b.load_mw}});
  root["generators"] = ordered_json::array();
  for (const auto& g : doc.generators)
    root["generators"].push_back({{"id", g.id},
                                  {"bus", g.bus},
                                  {"p_min", g.p_min},
                                  {"p_max", g.p_max},
                                  {"ramp_up", g.ramp_up},
                                  {"ramp_down", g.ramp_down},
                                  {"cost", g.cost}});
  root["storage"] = ordered_json::array();
  for (const auto& s : doc.storage)
    root["storage"].push_back({{"id", s.id},
                               {"bus", s.bus},
                               {"e_min", s.e_min},
                               {"e_max", s.e_max},
                               {"e_initial", s.e_initial},
                               {"p_charge_max", s.p_charge_max},
                               {"p_discharge_max", s.p_discharge_max},
                               {"cost", s.cost}});
  root["lines"] = ordered_json::array();
  for (const auto& l : doc.lines)
    root["lines"].push_back({{"id", l.id},
                             {"from", l.from},
                             {"to", l.to},
                             {"reactance", l.reactance},
                             {"flow_limit", l.flow_limit}});
  return root.dump(2) + "\n";
}

namespace {

// ---- MATPOWER-subset importer ----

struct MpStatement {
  std::string field;  // text after the first '.', e.g. "bus"
  bool is_matrix = false;
  double scalar = 0.0;
  std::vector<std::vector<double>> rows;
};

class MpLexer {
 public:
  explicit MpLexer(const std::string& text) : text_(text) {}

  std::vector<MpStatement> parse_all() {
    std::vector<MpStatement> out;
    skip_space();
    while (pos_ < text_.size()) {
      out.push_back(statement());
      skip_space();
    }
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& why) {
    throw ParseError(why, line_, col_);
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  char advance() {
    char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  // Skips whitespace and % comments. When stop_at_newline is set a newline is
  // left in place so matrix rows can be split on it.
  void skip_space(bool stop_at_newline = false) {
    while (pos_ < text_.size()) {
      char c = peek();
      if (c == '%') {
        while (pos_ < text_.size() && peek() != '\n') advance();
      } else if (c == '\n' && stop_at_newline) {
        return;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        return;
      }
    }
  }

  std::string ident() {
    if (!std::isalpha(static_cast<unsigned char>(peek())) && peek() != '_')
      fail("expected identifier");
    std::string s;
    while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')
      s += advance();
    return s;
  }

  double number() {
    std::size_t start = pos_;
    if (peek() == '+' || peek() == '-') advance();
    bool digits = false;
    while (std::isdigit(static_cast<unsigned char>(peek()))) {
      advance();
      digits = true;
    }
    if (peek() == '.') {
      advance();
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        advance();
        digits = true;
      }
    }
    if (!digits) fail("expected number");
    if (peek() == 'e' || peek() == 'E') {
      advance();
      if (peek() == '+' || peek() == '-') advance();
      if (!std::isdigit(static_cast<unsigned char>(peek())))
        fail("malformed exponent");
      while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
    }
    return std::stod(text_.substr(start, pos_ - start));
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    advance();
  }

  MpStatement statement() {
    MpStatement st;
    ident();  // container name (conventionally "mpc"); only FIELD matters
    expect('.');
    st.field = ident();
    skip_space();
    expect('=');
    skip_space();
    if (peek() == '[') {
      advance();
      st.is_matrix = true;
      std::vector<double> row;
      for (;;) {
        skip_space(/*stop_at_newline=*/true);
        char c = peek();
        if (c == '\0') fail("unterminated matrix");
        if (c == ']') {
          advance();
          if (!row.empty()) st.rows.push_back(std::move(row));
          break;
        }
        if (c == ';' || c == '\n') {
          advance();
          if (!row.empty()) {
            st.rows.push_back(std::move(row));
            row.clear();
          }
          continue;
        }
        row.push_back(number());
      }
    } else {
      st.scalar = number();
    }
    skip_space();
    expect(';');
    return st;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

const MpStatement* find_field(const std::vector<MpStatement>& sts,
                              const std::string& field) {
  for (const auto& s : sts)
    if (s.field == field) return &s;
  return nullptr;
}

const MpStatement& require_matrix(const std::vector<MpStatement>& sts,
                                  const std::string& field) {
  const MpStatement* s = find_field(sts, field);
  if (!s) throw SchemaError("missing required field '" + field + "'");
  if (!s->is_matrix)
    throw SchemaError("field '" + field + "' must be a matrix");
  std::size_t width = s->rows.empty() ? 0 : s->rows.front().size();
  for (const auto& r : s->rows)
    if (r.size() != width)
      throw SchemaError("non-rectangular matrix '" + field + "'");
  return *s;
}

double col_or(const std::vector<double>& row, std::size_t idx, double fallback) {
  return idx < row.size() ? row[idx] : fallback;
}

std::string bus_name(double v) {
  return std::to_string(static_cast<long long>(std::llround(v)));
}

}  // namespace

CaseDocument parse_matpower_case(const std::string& text,
                                 const MatpowerOptions& opts) {
  const auto statements = MpLexer(text).parse_all();

  const MpStatement* base = find_field(statements, "baseMVA");
  if (!base) throw SchemaError("missing required field 'baseMVA'");
  if (base->is_matrix) throw SchemaError("field 'baseMVA' must be a scalar");

  const MpStatement& bus = require_matrix(statements, "bus");
  const MpStatement& gen = require_matrix(statements, "gen");
  const MpStatement& branch = require_matrix(statements, "branch");
  const MpStatement* gencost = find_field(statements, "gencost");
  if (gencost) require_matrix(statements, "gencost");

  CaseDocument doc;
  doc.base_mva = base->scalar;

  // Columns: BUS_I, BUS_TYPE, PD, ... Type 3 marks the reference bus.
  double total_load = 0.0;
  for (const auto& row : bus.rows) {
    if (row.size() < 3) throw SchemaError("bus matrix needs at least 3 columns");
    CaseDocument::Bus b;
    b.id = bus_name(row[0]);
    b.load_mw = row[2];
    total_load += std::abs(b.load_mw);
    if (std::llround(row[1]) == 3 && doc.slack_bus.empty()) doc.slack_bus = b.id;
    doc.buses.push_back(std::move(b));
  }

  // Columns: GEN_BUS, PG, QG, QMAX, QMIN, VG, MBASE, GEN_STATUS, PMAX, PMIN,
  // ..., RAMP_10 at index 17. Out-of-service rows are dropped but keep their
  // row index for gencost alignment.
  int kept = 0;
  for (std::size_t r = 0; r < gen.rows.size(); ++r) {
    const auto& row = gen.rows[r];
    if (row.size() < 10) throw SchemaError("gen matrix needs at least 10 columns");
    if (col_or(row, 7, 1.0) <= 0.0) continue;  // GEN_STATUS
    CaseDocument::Generator g;
    g.id = "g" + std::to_string(++kept);
    g.bus = bus_name(row[0]);
    g.p_max = row[8];
    g.p_min = row[9];
    const double ramp10 = col_or(row, 17, 0.0);
    const double ramp = ramp10 > 0.0 ? ramp10 : opts.ramp_fraction * g.p_max;
    g.ramp_up = ramp;
    g.ramp_down = ramp;
    g.cost = 1.0;
    if (gencost) {
      if (r >= gencost->rows.size())
        throw SchemaError("gencost has fewer rows than gen");
      const auto& c = gencost->rows[r];
      if (c.size() < 4) throw SchemaError("gencost row too short");
      const long long model = std::llround(c[0]);
      const long long ncoef = std::llround(c[3]);
      if (model != 2)
        throw SchemaError("unsupported gencost model " + std::to_string(model) +
                          " (only polynomial costs are accepted)");
      if (ncoef >= 2) {
        const std::size_t c1 = 4 + static_cast<std::size_t>(ncoef) - 2;
        if (c1 >= c.size()) throw SchemaError("gencost row too short");
        g.cost = c[c1];  // linear coefficient; higher orders ignored
      }
    }
    doc.generators.push_back(std::move(g));
  }

  // Columns: F_BUS, T_BUS, BR_R, BR_X, BR_B, RATE_A, ..., BR_STATUS at 10.
  const double unlimited =
      total_load > 0.0 ? opts.unlimited_cap_factor * total_load : 1e4;
  kept = 0;
  for (const auto& row : branch.rows) {
    if (row.size() < 6)
      throw SchemaError("branch matrix needs at least 6 columns");
    if (col_or(row, 10, 1.0) <= 0.0) continue;  // BR_STATUS
    CaseDocument::Line l;
    l.id = "l" + std::to_string(++kept);
    l.from = bus_name(row[0]);
    l.to = bus_name(row[1]);
    l.reactance = row[3];
    l.flow_limit = row[5] > 0.0 ? row[5] : unlimited;
    doc.lines.push_back(std::move(l));
  }

  validate_case(doc);
  return doc;
}

void merge_storage_sidecar(CaseDocument& doc, const std::string& sidecar_json) {
  const ordered_json root = parse_json_or_throw(sidecar_json);
  if (!root.is_object()) schema_fail("sidecar", "top level must be an object");
  reject_unknown(root, {"storage"}, "sidecar");
  const auto& arr = require_key(root, "storage", "sidecar");
  if (!arr.is_array()) schema_fail("storage", "expected an array");
  for (std::size_t i = 0; i < arr.size(); ++i)
    doc.storage.push_back(
        parse_storage_entry(arr[i], "storage[" + std::to_string(i) + "]"));
  validate_case(doc);
}

std::string write_results_csv(const std::vector<IntervalResult>& results,
                              bool include_timings) {
  std::ostringstream out;
  out << "interval,lambda_det,lambda_sto,iterations_det,iterations_sto,"
         "converged_det,converged_sto,time_ms_det,time_ms_sto\n";
  char buf[32];
  for (const auto& r : results) {
    out << r.interval << ',';
    if (r.lambda_det) {
      std::snprintf(buf, sizeof buf, "%.6f", *r.lambda_det);
      out << buf;
    }
    out << ',';
    if (r.lambda_sto) {
      std::snprintf(buf, sizeof buf, "%.6f", *r.lambda_sto);
      out << buf;
    }
    out << ',';
    if (r.lambda_det) out << r.iterations_det;
    out << ',';
    if (r.lambda_sto) out << r.iterations_sto;
    out << ',';
    if (r.lambda_det) out << (r.converged_det ? "true" : "false");
    out << ',';
    if (r.lambda_sto) out << (r.converged_sto ? "true" : "false");
    out << ',';
    if (include_timings && r.lambda_det) {
      std::snprintf(buf, sizeof buf, "%.1f", r.time_ms_det);
      out << buf;
    }
    out << ',';
    if (include_timings && r.lambda_sto) {
      std::snprintf(buf, sizeof buf, "%.1f", r.time_ms_sto);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace gridflex
