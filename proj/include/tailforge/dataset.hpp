#pragma once

#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "tailforge/empirical.hpp"

namespace tailforge {

enum class HeaderMode { detect, present, absent };

struct IngestOptions {
  // Column by header name or by 0-based index; default is the first column.
  std::optional<std::string> column_name;
  std::optional<std::size_t> column_index;
  HeaderMode header = HeaderMode::detect;
};

struct Dataset {
  std::string id;
  std::string name;
  Sample sample;
  std::string checksum;  // FNV-1a 64 of the raw bytes, hex
  std::size_t rows = 0;  // data rows read (excluding the header)
  std::vector<std::size_t> skipped_lines;  // blank lines, 1-based
};

// Parses one numeric observation per row. Non-numeric or non-finite cells
// are errors naming the 1-based line.
Dataset ingest_csv(std::string_view text, const IngestOptions& opts = {});

std::string fnv1a_hex(std::string_view bytes);

// Append-only, concurrently readable collection of datasets.
class DatasetRegistry {
 public:
  // Registers under ds.id, or a fresh id when empty; returns the id.
  // A duplicate id is a conflict.
  std::string add(Dataset ds);
  std::shared_ptr<const Dataset> get(const std::string& id) const;
  std::vector<std::shared_ptr<const Dataset>> list() const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<const Dataset>> items_;
  std::vector<std::string> order_;
  std::size_t next_ = 1;
};

}  // namespace tailforge
