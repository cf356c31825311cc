#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ivtrial {

/// One subject's observed tuple. Which binary plays "treatment received" or
/// "intercurrent event" depends on the analysis roles.
struct TrialRecord {
  double r = 0.0;
  double t = 0.0;
  double y = 0.0;
  std::map<std::string, double> covariates;
  std::optional<double> a;  // adherence
  std::optional<double> z;  // biomarker response
};

/// Column store of named real columns, all of equal length.
class TrialData {
 public:
  TrialData() = default;

  static TrialData from_records(std::span<const TrialRecord> records);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  bool has(std::string_view name) const noexcept;

  /// Throws MissingColumn.
  std::span<const double> column(std::string_view name) const;

  /// The first column fixes the row count. Throws DimensionMismatch or
  /// InvalidParam on a duplicate name.
  TrialData& add_column(std::string name, std::vector<double> values);

  /// Rows in the given order (duplicates allowed, as in a bootstrap resample).
  TrialData select_rows(std::span<const std::size_t> rows) const;
  /// Rows where `name` equals `value`.
  TrialData filter_equal(std::string_view name, double value) const;
  /// Same rows, only the named columns, in that order.
  TrialData project(std::span<const std::string> names) const;

  TrialRecord record(std::size_t row) const;

 private:
  std::size_t index_of(std::string_view name) const;

  std::size_t rows_ = 0;
  std::vector<std::string> names_;
  std::vector<std::vector<double>> columns_;
};

/// Validates that every entry of `name` is 0 or 1. Throws InvalidParam naming
/// the column and the first offending row (0-based).
void require_binary(const TrialData& data, std::string_view name);

/// Header row plus decimal fields; empty cells and non-numeric text are
/// ParseErrors naming the line and column. `source` only labels messages.
TrialData read_csv(std::istream& in, std::string_view source = "<stream>");
TrialData read_csv_file(const std::string& path);

/// Shortest round-trip decimal for every value; 0/1 columns therefore come out
/// as bare 0 and 1.
void write_csv(std::ostream& out, const TrialData& data);
void write_csv_file(const std::string& path, const TrialData& data);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_shortest(double value);

}  // namespace ivtrial
