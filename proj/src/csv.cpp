#include "nutri/csv.hpp"

#include <charconv>
#include <cmath>

#include "nutri/text.hpp"

namespace nutri::csv {

Reader::Reader(std::istream& in, char sep) : in_(in), sep_(sep) {}

bool Reader::next(std::vector<std::string>& row) {
    if (first_) {
        first_ = false;
        if (in_.peek() == 0xEF) {
            char bom[3];
            in_.read(bom, 3);
            if (!(static_cast<unsigned char>(bom[1]) == 0xBB &&
                  static_cast<unsigned char>(bom[2]) == 0xBF)) {
                in_.clear();
                in_.seekg(0);
            }
        }
    }

    while (true) {
        row.clear();
        if (in_.peek() == std::char_traits<char>::eof()) return false;

        record_line_ = line_;
        std::string field;
        bool in_quotes = false;
        bool any_content = false;
        char c;
        while (in_.get(c)) {
            if (in_quotes) {
                if (c == '"') {
                    if (in_.peek() == '"') {
                        in_.get(c);
                        field.push_back('"');
                    } else {
                        in_quotes = false;
                    }
                } else {
                    if (c == '\n') ++line_;
                    field.push_back(c);
                }
                continue;
            }
            if (c == '"') {
                in_quotes = true;
                any_content = true;
            } else if (c == sep_) {
                row.push_back(std::move(field));
                field.clear();
                any_content = true;
            } else if (c == '\r') {
                if (in_.peek() == '\n') continue;
                ++line_;
                break;
            } else if (c == '\n') {
                ++line_;
                break;
            } else {
                field.push_back(c);
                any_content = true;
            }
        }
        if (!any_content && field.empty()) {
            if (!in_) return false;
            continue;
        }
        row.push_back(std::move(field));
        return true;
    }
}

std::string escape(std::string_view field, char sep) {
    const bool needs_quotes = field.find_first_of(std::string{sep, '"', '\r', '\n'}) !=
                              std::string_view::npos;
    if (!needs_quotes) return std::string(field);
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

std::string join_row(const std::vector<std::string>& fields, char sep) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(sep);
        out += escape(fields[i], sep);
    }
    return out;
}

std::string format_number(double v) {
    if (v == 0.0) return "0";  // folds -0
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_optional(const std::optional<double>& v) {
    return v ? format_number(*v) : std::string{};
}

std::optional<double> parse_number(std::string_view s) {
    s = text::trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

}  // namespace nutri::csv
