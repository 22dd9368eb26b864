#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace neuroboot {

/// Writes RFC-4180 rows; fields containing ',', '"' or newlines are quoted.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& out_;
};

/// Parses RFC-4180 text into rows of fields.
std::vector<std::vector<std::string>> parse_csv(std::istream& in);

/// Shortest decimal text that round-trips the double.
std::string format_number(double v);

struct DecodingRow {
  std::string subject;
  std::string condition;
  std::string scheme;
  std::size_t source = 0;
  std::size_t k = 0;
  std::size_t fold = 0;
  /// Time in seconds for time-resolved rows, "start:end" for window rows.
  std::string t_or_window;
  double accuracy = 0.0;
};

struct SummaryPoint {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n_subjects = 0;
};

/// Decoding accuracies keyed by subject, condition, fold and time.
class DecodingReport {
 public:
  static constexpr const char* kHeader[] = {"subject", "condition", "scheme", "source",
                                           "k",       "fold",      "t_or_window", "accuracy"};

  std::vector<DecodingRow> rows;

  void append(const DecodingReport& other);
  /// Orders rows by (subject, condition, scheme, source, k, t_or_window position, fold).
  void sort();

  /// Mean over folds per (subject, t_or_window), for rows matching the
  /// optional condition and scheme filters (empty = any).
  std::map<std::string, std::map<std::string, double>> subject_means(
      const std::string& condition = {}, const std::string& scheme = {}) const;

  /// Mean and SE across subjects for each t_or_window, in first-seen order.
  std::vector<std::pair<std::string, SummaryPoint>> summary(
      const std::string& condition = {}, const std::string& scheme = {}) const;

  void write_csv(std::ostream& out) const;
  void save_csv(const std::filesystem::path& path) const;
  static DecodingReport read_csv(std::istream& in);
  static DecodingReport load_csv(const std::filesystem::path& path);
};

}  // namespace neuroboot
