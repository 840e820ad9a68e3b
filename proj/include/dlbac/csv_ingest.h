#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dlbac/dataset.h"

namespace dlbac {

// Maps CSV columns onto a dataset. Without an explicit user id column, users
// are identified by their metadata vector and numbered in order of first
// appearance. With no resource metadata columns the resource id becomes the
// single resource metadata value.
struct CsvSchema {
  std::vector<std::string> user_meta_columns;
  std::vector<std::string> res_meta_columns;
  std::string resource_id_column;
  std::string user_id_column;  // optional
  std::vector<std::string> label_columns;
};

// RFC 4180 records: comma separated, optional double quotes with "" escapes,
// CRLF or LF line ends. The first record is the header.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

// Throws ParseError whose line is the 1-based data row index.
Dataset ingest_csv(std::string_view text, const CsvSchema& schema);

}  // namespace dlbac
