#include "tailforge/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <mutex>

#include "tailforge/error.hpp"

namespace tailforge {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.emplace_back(trim(cur));
  return out;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Dataset ingest_csv(std::string_view text, const IngestOptions& opts) {
  if (trim(text).empty()) fail(ErrorKind::invalid_argument, "empty file");
  Dataset ds;
  ds.checksum = fnv1a_hex(text);

  std::vector<double> values;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  std::optional<std::size_t> col = opts.column_index;
  if (opts.column_name) require(opts.header != HeaderMode::absent, "a column name needs a header row");

  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (trim(line).empty()) {
      if (end < text.size()) ds.skipped_lines.push_back(line_no);
      continue;
    }
    const auto fields = split_fields(line);

    if (!header_seen && opts.header != HeaderMode::absent) {
      header_seen = true;
      bool is_header = opts.header == HeaderMode::present || opts.column_name.has_value();
      if (!is_header) {
        const std::size_t c = col.value_or(0);
        is_header = c < fields.size() && !parse_number(fields[c]);
      }
      if (is_header) {
        if (opts.column_name) {
          std::size_t i = 0;
          while (i < fields.size() && fields[i] != *opts.column_name) ++i;
          if (i == fields.size()) fail(ErrorKind::invalid_argument, "no column named '" + *opts.column_name + "'");
          col = i;
        }
        continue;
      }
    }
    header_seen = true;

    const std::size_t c = col.value_or(0);
    if (c >= fields.size())
      fail(ErrorKind::invalid_argument, "row " + std::to_string(line_no) + ": missing column " + std::to_string(c));
    const auto v = parse_number(fields[c]);
    if (!v) fail(ErrorKind::invalid_argument, "row " + std::to_string(line_no) + ": non-numeric value '" + fields[c] + "'");
    if (!std::isfinite(*v)) fail(ErrorKind::invalid_argument, "row " + std::to_string(line_no) + ": non-finite value");
    values.push_back(*v);
    ++ds.rows;
  }
  if (values.empty()) fail(ErrorKind::invalid_argument, "no observations found");
  ds.sample = Sample(std::move(values));
  return ds;
}

std::string DatasetRegistry::add(Dataset ds) {
  std::unique_lock lock(mutex_);
  if (ds.id.empty()) {
    do {
      ds.id = "ds" + std::to_string(next_++);
    } while (items_.count(ds.id));
  } else if (items_.count(ds.id)) {
    fail(ErrorKind::conflict, "dataset '" + ds.id + "' already exists");
  }
  if (ds.name.empty()) ds.name = ds.id;
  const std::string id = ds.id;
  items_.emplace(id, std::make_shared<const Dataset>(std::move(ds)));
  order_.push_back(id);
  return id;
}

std::shared_ptr<const Dataset> DatasetRegistry::get(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto it = items_.find(id);
  if (it == items_.end()) fail(ErrorKind::not_found, "unknown dataset '" + id + "'");
  return it->second;
}

std::vector<std::shared_ptr<const Dataset>> DatasetRegistry::list() const {
  std::shared_lock lock(mutex_);
  std::vector<std::shared_ptr<const Dataset>> out;
  for (const auto& id : order_) out.push_back(items_.at(id));
  return out;
}

}  // namespace tailforge
