#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace fairtext::csv {

using Row = std::vector<std::string>;

// RFC 4180 reader. Accepts LF or CRLF record separators, quoted fields with
// embedded commas, quotes ("") and newlines. A trailing newline at EOF does
// not produce an empty record. Throws ParseError carrying the byte offset of
// the offending character.
std::vector<Row> parse(std::string_view content);

// Quotes a field only when it contains a comma, quote, CR or LF.
void write_row(std::ostream& out, const Row& row);

}  // namespace fairtext::csv
