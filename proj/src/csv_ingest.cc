#include "dlbac/csv_ingest.h"

#include <charconv>
#include <limits>
#include <map>

#include "dlbac/error.h"

namespace dlbac {
namespace {

std::size_t column_of(const std::vector<std::string>& header,
                      const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ParseError(0, "missing column '" + name + "'");
}

std::uint64_t parse_cell(const std::string& cell, std::size_t row,
                         const std::string& column) {
  std::uint64_t value = 0;
  const auto [ptr, ec] =
      std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ParseError(row, "column '" + column +
                              "' holds a non-categorical value '" + cell + "'");
  }
  return value;
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;

  const auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  const auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record[0].empty())) {
      records.push_back(std::move(record));
    }
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started) {
          throw ParseError(line, "quote inside an unquoted field");
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (in_quotes) throw ParseError(line, "unterminated quoted field");
  if (field_started || !record.empty()) end_record();
  return records;
}

Dataset ingest_csv(std::string_view text, const CsvSchema& schema) {
  if (schema.user_meta_columns.empty()) {
    throw ConfigError("schema needs at least one user metadata column");
  }
  if (schema.resource_id_column.empty()) {
    throw ConfigError("schema needs a resource id column");
  }
  if (schema.label_columns.empty()) {
    throw ConfigError("schema needs at least one label column");
  }
  const auto records = parse_csv(text);
  if (records.empty()) throw ParseError(0, "CSV without a header row");
  const auto& header = records[0];

  std::vector<std::size_t> ucols, rcols, lcols;
  for (const auto& name : schema.user_meta_columns) {
    ucols.push_back(column_of(header, name));
  }
  for (const auto& name : schema.res_meta_columns) {
    rcols.push_back(column_of(header, name));
  }
  for (const auto& name : schema.label_columns) {
    lcols.push_back(column_of(header, name));
  }
  const std::size_t rid_col = column_of(header, schema.resource_id_column);
  const bool has_uid = !schema.user_id_column.empty();
  const std::size_t uid_col = has_uid ? column_of(header, schema.user_id_column) : 0;

  std::map<std::vector<MetaValue>, EntityId> user_ids;
  struct Seen {
    std::size_t row;
    std::size_t index;
  };
  std::map<std::pair<EntityId, EntityId>, Seen> row_of_pair;
  std::vector<AuthorizationTuple> tuples;

  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size()) {
      throw ParseError(r, "expected " + std::to_string(header.size()) +
                              " fields, found " + std::to_string(rec.size()));
    }
    const auto value_at = [&](std::size_t col) {
      const auto v = parse_cell(rec[col], r, header[col]);
      if (v > std::numeric_limits<MetaValue>::max()) {
        throw ParseError(r, "value out of range in column '" + header[col] + "'");
      }
      return static_cast<MetaValue>(v);
    };
    AuthorizationTuple t;
    for (const auto c : ucols) t.umeta.push_back(value_at(c));
    t.rid = parse_cell(rec[rid_col], r, header[rid_col]);
    for (const auto c : rcols) t.rmeta.push_back(value_at(c));
    if (rcols.empty()) {
      if (t.rid > std::numeric_limits<MetaValue>::max()) {
        throw ParseError(r, "resource id too large for a metadata value");
      }
      t.rmeta.push_back(static_cast<MetaValue>(t.rid));
    }
    for (const auto c : lcols) {
      const auto bit = parse_cell(rec[c], r, header[c]);
      if (bit > 1) {
        throw ParseError(r, "label column '" + header[c] + "' must be 0 or 1");
      }
      t.ops.push_back(static_cast<std::uint8_t>(bit));
    }
    if (has_uid) {
      t.uid = parse_cell(rec[uid_col], r, header[uid_col]);
    } else {
      t.uid = user_ids.try_emplace(t.umeta, user_ids.size()).first->second;
    }

    const auto [it, inserted] =
        row_of_pair.try_emplace({t.uid, t.rid}, Seen{r, tuples.size()});
    if (!inserted) {
      // Rows repeating a pair are dropped when they agree with it.
      const AuthorizationTuple& prior = tuples[it->second.index];
      if (prior.ops != t.ops || prior.umeta != t.umeta ||
          prior.rmeta != t.rmeta) {
        throw ParseError(r, "rows " + std::to_string(it->second.row) + " and " +
                                std::to_string(r) +
                                " give conflicting records for user " +
                                std::to_string(t.uid) + ", resource " +
                                std::to_string(t.rid));
      }
      continue;
    }
    tuples.push_back(std::move(t));
  }
  const std::size_t nr = rcols.empty() ? 1 : rcols.size();
  return Dataset(ucols.size(), nr, lcols.size(), std::move(tuples));
}

}  // namespace dlbac
