#pragma once

#include <string>
#include <vector>

namespace htc::csv {

// RFC-4180 style records: double-quoted fields may contain the separator,
// doubled quotes and embedded newlines. Works for CSV (',') and TSV ('\t').
// Records keep file order; a trailing newline does not create an empty record.
std::vector<std::vector<std::string>> parse(const std::string& content, char separator);

std::vector<std::vector<std::string>> read_file(const std::string& path, char separator);

// Quotes a field only when it contains the separator, a quote or a newline.
std::string escape_field(const std::string& field, char separator);

std::string format_row(const std::vector<std::string>& fields, char separator);

}  // namespace htc::csv
