#include "matef/csv.hpp"

#include "matef/errors.hpp"

namespace matef::csv {

std::string escape(std::string_view field) {
    const bool needs_quote = field.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!needs_quote) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::string join_row(std::span<const std::string> fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i != 0) out += ',';
        out += escape(fields[i]);
    }
    return out;
}

std::vector<std::vector<std::string>> parse(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (field.empty() && !field_started) {
                    in_quotes = true;
                    field_started = true;
                } else {
                    throw ParseError("unexpected quote inside unquoted CSV field", line);
                }
                break;
            case ',':
                end_field();
                break;
            case '\r':
                break;  // swallowed; row ends at \n
            case '\n':
                end_row();
                ++line;
                break;
            default:
                field += c;
                field_started = true;
                break;
        }
    }
    if (in_quotes) throw ParseError("unterminated quoted CSV field", line);
    if (field_started || !field.empty() || !row.empty()) end_row();
    return rows;
}

}  // namespace matef::csv
