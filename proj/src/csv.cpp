#include "dpi/csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>

namespace dpi {

CsvReader::CsvReader(std::istream& in) : in_(in) {
    read_record(header_);
    for (size_t i = 0; i < header_.size(); ++i)
        index_.emplace(header_[i], static_cast<int>(i));
}

int CsvReader::column(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
}

bool CsvReader::next(std::vector<std::string>& row, size_t& line_no) {
    line_no = line_ + 1;
    return read_record(row);
}

bool CsvReader::read_record(std::vector<std::string>& row) {
    row.clear();
    int c = in_.peek();
    if (c == std::char_traits<char>::eof()) return false;

    std::string field;
    bool in_quotes = false;
    bool any = false;
    while (true) {
        c = in_.get();
        if (c == std::char_traits<char>::eof()) {
            if (!any && field.empty() && row.empty()) return false;
            row.push_back(std::move(field));
            ++line_;
            return true;
        }
        any = true;
        char ch = static_cast<char>(c);
        if (in_quotes) {
            if (ch == '"') {
                if (in_.peek() == '"') {
                    in_.get();
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                if (ch == '\n') ++line_;
                field.push_back(ch);
            }
        } else if (ch == '"') {
            in_quotes = true;
        } else if (ch == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (ch == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            row.push_back(std::move(field));
            ++line_;
            return true;
        } else {
            field.push_back(ch);
        }
    }
}

std::string csv_quote(const std::string& field) {
    bool needs = field.find_first_of(",\"\n\r") != std::string::npos;
    if (!needs) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) out.put(',');
        out << csv_quote(fields[i]);
    }
    out.put('\n');
}

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}
