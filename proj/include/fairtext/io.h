#pragma once

#include <string>
#include <string_view>

namespace fairtext {

// Throws DataError if the file cannot be opened.
std::string read_file(const std::string& path);

// Writes to `path.tmp` then renames over `path`, so readers never observe a
// partially written file.
void write_file_atomic(const std::string& path, std::string_view content);

// Shortest representation that parses back to the same double.
std::string format_double(double value);
// Throws DataError unless the whole of `text` is a number.
double parse_double(std::string_view text);

}  // namespace fairtext
