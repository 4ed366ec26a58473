#pragma once

#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace dpi {

// Minimal RFC-4180-style reader: header row, quoted fields, embedded
// commas/newlines inside quotes. Carriage returns before a newline are
// stripped.
class CsvReader {
public:
    explicit CsvReader(std::istream& in);

    const std::vector<std::string>& header() const { return header_; }

    // Column index by name, -1 if absent.
    int column(const std::string& name) const;

    // Reads the next data row. Returns false at end of input.
    // line_no receives the 1-based line the row started on.
    bool next(std::vector<std::string>& row, size_t& line_no);

private:
    bool read_record(std::vector<std::string>& row);

    std::istream& in_;
    std::vector<std::string> header_;
    std::unordered_map<std::string, int> index_;
    size_t line_ = 0;
};

std::string csv_quote(const std::string& field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest round-trip decimal representation (via std::to_chars).
std::string format_double(double v);

}
