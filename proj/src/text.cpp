#include "switchboard/text.hpp"

#include <cctype>

namespace switchboard::text {

std::string fold(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

std::string_view trim(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n\f\v";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

bool is_word_char(char c) {
    const auto u = static_cast<unsigned char>(c);
    // Non-ASCII bytes are treated as letters so UTF-8 words stay intact.
    return std::isalnum(u) != 0 || c == '_' || u >= 0x80;
}

std::vector<std::string> tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (is_word_char(c)) {
            cur.push_back(c);
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::size_t count_substring(std::string_view hay, std::string_view needle) {
    if (needle.empty()) return 0;
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string_view::npos;
         pos = hay.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

std::size_t count_whole_word(std::string_view hay, std::string_view needle) {
    if (needle.empty()) return 0;
    std::size_t n = 0;
    std::size_t pos = hay.find(needle);
    while (pos != std::string_view::npos) {
        const auto end = pos + needle.size();
        const bool left = pos == 0 || !is_word_char(hay[pos - 1]);
        const bool right = end == hay.size() || !is_word_char(hay[end]);
        if (left && right) {
            ++n;
            pos = hay.find(needle, end);
        } else {
            pos = hay.find(needle, pos + 1);
        }
    }
    return n;
}

} // namespace switchboard::text
