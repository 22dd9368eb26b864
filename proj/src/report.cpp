#include "neuroboot/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <tuple>

#include "neuroboot/core.hpp"
#include "neuroboot/stats.hpp"

namespace neuroboot {

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out_ << ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\r\n") == std::string::npos) {
      out_ << f;
      continue;
    }
    out_ << '"';
    for (char ch : f) {
      if (ch == '"') out_ << '"';
      out_ << ch;
    }
    out_ << '"';
  }
  out_ << "\r\n";
}

std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  char ch;
  while (in.get(ch)) {
    any = true;
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
      continue;
    }
    if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (ch == '\n' || ch == '\r') {
      if (ch == '\r' && in.peek() == '\n') in.get(ch);
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else {
      field += ch;
    }
  }
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

double time_key(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  return res.ec == std::errc{} ? v : std::numeric_limits<double>::infinity();
}

std::size_t parse_count(const std::string& s, const char* what) {
  std::size_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw InvalidArgument(std::string("bad ") + what + " value '" + s + "' in report");
  }
  return v;
}

}  // namespace

void DecodingReport::append(const DecodingReport& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

void DecodingReport::sort() {
  auto key = [](const DecodingRow& r) {
    return std::tuple(r.subject, r.condition, r.scheme, r.source, r.k, time_key(r.t_or_window),
                      r.t_or_window, r.fold);
  };
  std::stable_sort(rows.begin(), rows.end(),
                   [&](const DecodingRow& a, const DecodingRow& b) { return key(a) < key(b); });
}

std::map<std::string, std::map<std::string, double>> DecodingReport::subject_means(
    const std::string& condition, const std::string& scheme) const {
  std::map<std::string, std::map<std::string, std::pair<double, std::size_t>>> acc;
  for (const auto& r : rows) {
    if (!condition.empty() && r.condition != condition) continue;
    if (!scheme.empty() && r.scheme != scheme) continue;
    auto& cell = acc[r.subject][r.t_or_window];
    cell.first += r.accuracy;
    cell.second += 1;
  }
  std::map<std::string, std::map<std::string, double>> out;
  for (const auto& [subject, times] : acc) {
    for (const auto& [t, cell] : times) {
      out[subject][t] = cell.first / static_cast<double>(cell.second);
    }
  }
  return out;
}

std::vector<std::pair<std::string, SummaryPoint>> DecodingReport::summary(
    const std::string& condition, const std::string& scheme) const {
  const auto means = subject_means(condition, scheme);
  std::vector<std::string> order;
  std::map<std::string, std::vector<double>> per_time;
  for (const auto& [subject, times] : means) {
    for (const auto& [t, v] : times) {
      if (!per_time.contains(t)) order.push_back(t);
      per_time[t].push_back(v);
    }
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const std::string& a, const std::string& b) {
                     return std::pair(time_key(a), a) < std::pair(time_key(b), b);
                   });
  std::vector<std::pair<std::string, SummaryPoint>> out;
  for (const auto& t : order) {
    const auto& v = per_time[t];
    out.emplace_back(t, SummaryPoint{mean(v), standard_error(v), v.size()});
  }
  return out;
}

void DecodingReport::write_csv(std::ostream& out) const {
  CsvWriter w(out);
  w.row(std::vector<std::string>(std::begin(kHeader), std::end(kHeader)));
  for (const auto& r : rows) {
    w.row({r.subject, r.condition, r.scheme, std::to_string(r.source), std::to_string(r.k),
           std::to_string(r.fold), r.t_or_window, format_number(r.accuracy)});
  }
}

void DecodingReport::save_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_csv(out);
}

DecodingReport DecodingReport::read_csv(std::istream& in) {
  const auto table = parse_csv(in);
  if (table.empty()) throw InvalidArgument("report CSV is empty");
  const std::vector<std::string> header(std::begin(kHeader), std::end(kHeader));
  if (table.front() != header) throw InvalidArgument("report CSV has an unexpected header");
  DecodingReport report;
  for (std::size_t i = 1; i < table.size(); ++i) {
    const auto& f = table[i];
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != header.size()) {
      throw InvalidArgument("report CSV row " + std::to_string(i) + " has the wrong field count");
    }
    DecodingRow r;
    r.subject = f[0];
    r.condition = f[1];
    r.scheme = f[2];
    r.source = parse_count(f[3], "source");
    r.k = parse_count(f[4], "k");
    r.fold = parse_count(f[5], "fold");
    r.t_or_window = f[6];
    const auto res = std::from_chars(f[7].data(), f[7].data() + f[7].size(), r.accuracy);
    if (res.ec != std::errc{}) throw InvalidArgument("bad accuracy value '" + f[7] + "'");
    report.rows.push_back(std::move(r));
  }
  return report;
}

DecodingReport DecodingReport::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_csv(in);
}

}  // namespace neuroboot
