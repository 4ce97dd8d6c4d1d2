#include "etk/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace etk {
namespace {

std::vector<std::string> split_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) throw ValidationError("line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(std::move(field));
  return fields;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::optional<double> parse_number(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  double value = 0.0;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::size_t require_column(const CsvTable& table, const std::string& name, const char* role) {
  const auto idx = table.column(name);
  if (!idx) throw ValidationError(std::string(role) + " column '" + name + "' not found in header");
  return *idx;
}

}  // namespace

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable parse_csv(std::string_view text) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  CsvTable table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t next = text.find('\n', pos);
    if (next == std::string_view::npos) next = text.size();
    std::string_view line = text.substr(pos, next - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    pos = next + 1;
    if (trim(std::string(line)).empty()) continue;
    auto fields = split_line(line, line_no);
    if (table.header.empty()) {
      for (auto& f : fields) f = trim(f);
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(table.header.size()) + " fields, found " +
                            std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (table.header.empty()) throw ValidationError("data file has no header row");
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open data file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str());
}

Dataset dataset_from_csv(const CsvTable& table, const ColumnRoles& roles, bool require_outcome) {
  const std::size_t t_col = require_column(table, roles.treatment, "treatment");
  std::optional<std::size_t> y_col;
  if (roles.outcome) {
    y_col = table.column(*roles.outcome);
    if (!y_col && require_outcome) {
      throw ValidationError("outcome column '" + *roles.outcome + "' not found in header");
    }
  } else if (require_outcome) {
    throw ValidationError("no outcome column configured");
  }

  std::vector<std::string> names = roles.covariates;
  if (names.empty()) {
    for (const auto& h : table.header) {
      if (h != roles.treatment && (!roles.outcome || h != *roles.outcome)) names.push_back(h);
    }
  }
  std::vector<std::size_t> x_cols;
  for (const auto& name : names) {
    const std::size_t c = require_column(table, name, "covariate");
    if (c == t_col || (y_col && c == *y_col)) {
      throw ValidationError("column '" + name + "' cannot be both a covariate and another role");
    }
    x_cols.push_back(c);
  }

  std::vector<std::vector<double>> rows;
  std::vector<int> t;
  std::vector<std::optional<double>> y;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    auto cell_error = [&](std::size_t col, const std::string& what) {
      return ValidationError("column '" + table.header[col] + "', unit " + std::to_string(r) +
                             ": " + what);
    };
    std::vector<double> x;
    for (std::size_t c : x_cols) {
      const auto v = parse_number(row[c]);
      if (!v) throw cell_error(c, "'" + row[c] + "' is not a number");
      if (!std::isfinite(*v)) throw cell_error(c, "non-finite covariate value");
      x.push_back(*v);
    }
    const auto tv = parse_number(row[t_col]);
    if (!tv || (*tv != 0.0 && *tv != 1.0)) {
      throw cell_error(t_col, "treatment must be 0 or 1, found '" + row[t_col] + "'");
    }
    std::optional<double> outcome;
    if (y_col) {
      if (!trim(row[*y_col]).empty()) {
        outcome = parse_number(row[*y_col]);
        if (!outcome) throw cell_error(*y_col, "'" + row[*y_col] + "' is not a number");
      } else if (require_outcome) {
        throw cell_error(*y_col, "missing outcome");
      }
    }
    rows.push_back(std::move(x));
    t.push_back(static_cast<int>(*tv));
    y.push_back(outcome);
  }
  return Dataset::from_columns(std::move(names), rows, t, y);
}

std::string dataset_to_csv(const Dataset& dataset, const ColumnRoles& roles) {
  std::ostringstream out;
  for (const auto& name : dataset.covariate_names()) out << name << ',';
  out << roles.treatment;
  if (roles.outcome) out << ',' << *roles.outcome;
  out << '\n';
  for (const Unit& u : dataset.units()) {
    for (double v : u.covariates) out << format_number(v) << ',';
    out << u.treatment;
    if (roles.outcome) {
      out << ',';
      if (u.outcome) out << format_number(*u.outcome);
    }
    out << '\n';
  }
  return out.str();
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

}  // namespace etk
