#include "htc/csv.hpp"

#include <fstream>
#include <sstream>

#include "htc/errors.hpp"

namespace htc::csv {

std::vector<std::vector<std::string>> parse(const std::string& content, char separator) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;  // distinguishes "" (one empty field) from an empty line

  std::size_t i = 0;
  const std::size_t n = content.size();
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(row));
    row.clear();
  };

  while (i < n) {
    char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < n && content[i + 1] == '"') {
          field.push_back('"');
          i += 2;
        } else {
          in_quotes = false;
          ++i;
        }
      } else {
        field.push_back(c);
        ++i;
      }
      continue;
    }
    if (c == '"' && field.empty() && !field_started) {
      in_quotes = true;
      field_started = true;
      ++i;
    } else if (c == separator) {
      end_field();
      ++i;
    } else if (c == '\r' && i + 1 < n && content[i + 1] == '\n') {
      end_record();
      i += 2;
    } else if (c == '\n' || c == '\r') {
      end_record();
      ++i;
    } else {
      field.push_back(c);
      field_started = true;
      ++i;
    }
  }
  if (in_quotes) {
    throw DataError(ErrorCode::malformed_row, "csv: unterminated quoted field at end of input");
  }
  if (field_started || !field.empty() || !row.empty()) {
    end_record();
  }
  return records;
}

std::vector<std::vector<std::string>> read_file(const std::string& path, char separator) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError(ErrorCode::malformed_row, "csv: cannot open file '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), separator);
}

std::string escape_field(const std::string& field, char separator) {
  bool needs_quotes = false;
  for (char c : field) {
    if (c == separator || c == '"' || c == '\n' || c == '\r') {
      needs_quotes = true;
      break;
    }
  }
  if (!needs_quotes) return field;
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_row(const std::vector<std::string>& fields, char separator) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out.push_back(separator);
    out += escape_field(fields[i], separator);
  }
  out.push_back('\n');
  return out;
}

}  // namespace htc::csv
