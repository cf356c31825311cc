#include "ivtrial/trial_data.hpp"

#include "ivtrial/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

namespace ivtrial {

TrialData TrialData::from_records(std::span<const TrialRecord> records) {
  TrialData out;
  std::vector<double> r, t, y;
  for (const auto& rec : records) {
    r.push_back(rec.r);
    t.push_back(rec.t);
    y.push_back(rec.y);
  }
  out.add_column("r", std::move(r)).add_column("t", std::move(t)).add_column("y", std::move(y));
  if (records.empty()) return out;

  auto optional_column = [&](const char* name, auto member) {
    const bool any = std::any_of(records.begin(), records.end(), [&](const TrialRecord& rec) { return (rec.*member).has_value(); });
    if (!any) return;
    std::vector<double> values;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& v = records[i].*member;
      if (!v) throw Error(ErrorKind::MissingColumn, std::string("record ") + std::to_string(i) + " lacks '" + name + "'");
      values.push_back(*v);
    }
    out.add_column(name, std::move(values));
  };
  optional_column("a", &TrialRecord::a);
  optional_column("z", &TrialRecord::z);

  for (const auto& [name, unused] : records.front().covariates) {
    std::vector<double> values;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto it = records[i].covariates.find(name);
      if (it == records[i].covariates.end()) {
        throw Error(ErrorKind::MissingColumn, "record " + std::to_string(i) + " lacks covariate '" + name + "'");
      }
      values.push_back(it->second);
    }
    out.add_column(name, std::move(values));
  }
  return out;
}

bool TrialData::has(std::string_view name) const noexcept {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t TrialData::index_of(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw Error(ErrorKind::MissingColumn, "no column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

std::span<const double> TrialData::column(std::string_view name) const { return columns_[index_of(name)]; }

TrialData& TrialData::add_column(std::string name, std::vector<double> values) {
  if (has(name)) throw Error(ErrorKind::InvalidParam, "duplicate column '" + name + "'");
  if (names_.empty()) {
    rows_ = values.size();
  } else if (values.size() != rows_) {
    throw Error(ErrorKind::DimensionMismatch, "column '" + name + "' has " + std::to_string(values.size()) +
                                                  " rows, expected " + std::to_string(rows_));
  }
  names_.push_back(std::move(name));
  columns_.push_back(std::move(values));
  return *this;
}

TrialData TrialData::select_rows(std::span<const std::size_t> rows) const {
  TrialData out;
  for (std::size_t c = 0; c < names_.size(); ++c) {
    std::vector<double> values;
    values.reserve(rows.size());
    for (auto i : rows) values.push_back(columns_[c].at(i));
    out.add_column(names_[c], std::move(values));
  }
  return out;
}

TrialData TrialData::filter_equal(std::string_view name, double value) const {
  const auto key = column(name);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < rows_; ++i) {
    if (key[i] == value) keep.push_back(i);
  }
  return select_rows(keep);
}

TrialData TrialData::project(std::span<const std::string> names) const {
  TrialData out;
  for (const auto& n : names) {
    const auto col = column(n);
    out.add_column(n, std::vector<double>(col.begin(), col.end()));
  }
  return out;
}

TrialRecord TrialData::record(std::size_t row) const {
  TrialRecord rec;
  for (std::size_t c = 0; c < names_.size(); ++c) {
    const double v = columns_[c].at(row);
    const auto& n = names_[c];
    if (n == "r") rec.r = v;
    else if (n == "t") rec.t = v;
    else if (n == "y") rec.y = v;
    else if (n == "a") rec.a = v;
    else if (n == "z") rec.z = v;
    else rec.covariates[n] = v;
  }
  return rec;
}

void require_binary(const TrialData& data, std::string_view name) {
  const auto col = data.column(name);
  for (std::size_t i = 0; i < col.size(); ++i) {
    if (col[i] != 0.0 && col[i] != 1.0) {
      throw Error(ErrorKind::InvalidParam, "column '" + std::string(name) + "' row " + std::to_string(i) +
                                               ": expected 0/1, got " + format_shortest(col[i]));
    }
  }
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    std::string field = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    const auto first = field.find_first_not_of(" \t");
    const auto last = field.find_last_not_of(" \t\r");
    fields.push_back(first == std::string::npos ? std::string() : field.substr(first, last - first + 1));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

TrialData read_csv(std::istream& in, std::string_view source) {
  const std::string where(source);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) {
      header = split_fields(line);
      break;
    }
  }
  if (header.empty()) throw Error(ErrorKind::ParseError, where + ": missing header row");
  std::set<std::string> seen;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c].empty()) {
      throw Error(ErrorKind::ParseError, where + ": header column " + std::to_string(c + 1) + " is empty");
    }
    if (!seen.insert(header[c]).second) {
      throw Error(ErrorKind::ParseError, where + ": duplicate header column '" + header[c] + "'");
    }
  }

  std::vector<std::vector<double>> columns(header.size());
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorKind::ParseError, where + " line " + std::to_string(line_no) + ": expected " +
                                             std::to_string(header.size()) + " fields, found " +
                                             std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto& f = fields[c];
      double value = 0.0;
      const auto* begin = f.data();
      const auto* end = f.data() + f.size();
      if (!f.empty() && *begin == '+') ++begin;
      const auto [ptr, ec] = std::from_chars(begin, end, value);
      if (f.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
        throw Error(ErrorKind::ParseError, where + " line " + std::to_string(line_no) + ", column '" + header[c] +
                                               "': cannot parse '" + f + "' as a number");
      }
      columns[c].push_back(value);
    }
  }

  TrialData out;
  for (std::size_t c = 0; c < header.size(); ++c) out.add_column(header[c], std::move(columns[c]));
  return out;
}

TrialData read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for reading");
  return read_csv(in, path);
}

std::string format_shortest(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw Error(ErrorKind::InvalidParam, "cannot format number");
  std::string s(buf, ptr);
  if (s == "-0") s = "0";
  return s;
}

void write_csv(std::ostream& out, const TrialData& data) {
  const auto& names = data.names();
  for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
  out << '\n';
  std::vector<std::span<const double>> cols;
  for (const auto& n : names) cols.push_back(data.column(n));
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << format_shortest(cols[c][i]);
    out << '\n';
  }
}

void write_csv_file(const std::string& path, const TrialData& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for writing");
  write_csv(out, data);
  if (!out) throw Error(ErrorKind::IoError, "write to '" + path + "' failed");
}

}  // namespace ivtrial
