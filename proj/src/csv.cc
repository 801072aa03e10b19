#include "fairtext/csv.h"

#include "fairtext/error.h"

namespace fairtext::csv {

std::vector<Row> parse(std::string_view content) {
  std::vector<Row> rows;
  Row row;
  std::string field;
  std::size_t i = 0;
  const std::size_t n = content.size();
  // A record only exists once any byte of it has been seen.
  bool record_started = false;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
  };
  auto end_record = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
    record_started = false;
  };

  while (i < n) {
    char c = content[i];
    record_started = true;
    if (c == '"') {
      if (!field.empty()) {
        throw ParseError("unexpected quote inside unquoted field at byte " + std::to_string(i), i);
      }
      std::size_t open = i++;
      bool closed = false;
      while (i < n) {
        if (content[i] == '"') {
          if (i + 1 < n && content[i + 1] == '"') {
            field.push_back('"');
            i += 2;
            continue;
          }
          closed = true;
          ++i;
          break;
        }
        field.push_back(content[i++]);
      }
      if (!closed) {
        throw ParseError("unterminated quoted field starting at byte " + std::to_string(open), open);
      }
      if (i < n && content[i] != ',' && content[i] != '\n' && content[i] != '\r') {
        throw ParseError("unexpected character after closing quote at byte " + std::to_string(i), i);
      }
      continue;
    }
    if (c == ',') {
      end_field();
      ++i;
      continue;
    }
    if (c == '\r' && i + 1 < n && content[i + 1] == '\n') {
      end_record();
      i += 2;
      continue;
    }
    if (c == '\n') {
      end_record();
      ++i;
      continue;
    }
    field.push_back(c);
    ++i;
  }
  if (record_started) end_record();
  return rows;
}

void write_row(std::ostream& out, const Row& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    const std::string& f = row[i];
    if (f.find_first_of(",\"\r\n") == std::string::npos) {
      out << f;
      continue;
    }
    out << '"';
    for (char c : f) {
      if (c == '"') out << '"';
      out << c;
    }
    out << '"';
  }
  out << '\n';
}

}  // namespace fairtext::csv
