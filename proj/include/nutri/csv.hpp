#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nutri::csv {

// RFC 4180 reader: quoted fields, doubled quotes, embedded separators and
// newlines, CRLF or LF records. A leading UTF-8 BOM is skipped.
class Reader {
public:
    explicit Reader(std::istream& in, char sep = ',');

    // False at end of input. Blank lines are skipped.
    bool next(std::vector<std::string>& row);

    // 1-based line number where the last returned record started.
    std::size_t line() const noexcept { return record_line_; }

private:
    std::istream& in_;
    char sep_;
    std::size_t line_ = 1;
    std::size_t record_line_ = 0;
    bool first_ = true;
};

// Quotes a field only when it contains a separator, quote, CR or LF.
std::string escape(std::string_view field, char sep = ',');

std::string join_row(const std::vector<std::string>& fields, char sep = ',');

// Shortest round-trip decimal form; identical bits always print identically.
std::string format_number(double v);

std::string format_optional(const std::optional<double>& v);

// Strict full-string parse; nullopt on garbage or trailing characters.
std::optional<double> parse_number(std::string_view s);

}  // namespace nutri::csv
