#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace condcov::csv {

using Row = std::vector<std::string>;

/// RFC 4180 parser: quoted fields may contain commas, doubled quotes, and
/// newlines; rows end at LF or CRLF. The final row needs no newline.
std::vector<Row> parse(std::string_view text);

/// Quotes a field when it contains a comma, quote, or newline.
std::string escape_field(const std::string& field);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace condcov::csv
