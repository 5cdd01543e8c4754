#ifndef XIDS_XML_CHECK_HPP
#define XIDS_XML_CHECK_HPP

#include <cctype>
#include <string>
#include <vector>

namespace xids::test {

// Minimal XML well-formedness check: balanced tags, quoted attributes,
// known entities, one root element. Returns an empty string when well formed.
inline std::string xml_problem(const std::string& s) {
    std::vector<std::string> stack;
    std::size_t i = 0;
    int roots = 0;
    const auto name_at = [&](std::size_t& p) {
        const std::size_t b = p;
        while (p < s.size() && (std::isalnum(static_cast<unsigned char>(s[p])) || s[p] == '-' || s[p] == '_' || s[p] == ':'))
            ++p;
        return s.substr(b, p - b);
    };
    const auto entity_ok = [&](std::size_t p) {
        for (const char* e : {"&amp;", "&lt;", "&gt;", "&quot;", "&apos;"})
            if (s.compare(p, std::char_traits<char>::length(e), e) == 0) return true;
        return false;
    };
    if (s.rfind("<?xml", 0) == 0) {
        i = s.find("?>");
        if (i == std::string::npos) return "unterminated declaration";
        i += 2;
    }
    while (i < s.size()) {
        if (s[i] == '&') {
            if (!entity_ok(i)) return "bad entity at " + std::to_string(i);
            ++i;
            continue;
        }
        if (s[i] != '<') {
            if (stack.empty() && !std::isspace(static_cast<unsigned char>(s[i]))) return "text outside root";
            ++i;
            continue;
        }
        ++i;
        if (i < s.size() && s[i] == '/') {
            ++i;
            const std::string n = name_at(i);
            if (stack.empty() || stack.back() != n) return "mismatched close tag " + n;
            stack.pop_back();
            if (i >= s.size() || s[i] != '>') return "bad close tag";
            ++i;
            continue;
        }
        const std::string n = name_at(i);
        if (n.empty()) return "empty tag name at " + std::to_string(i);
        while (true) {
            while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
            if (i >= s.size()) return "unterminated tag " + n;
            if (s[i] == '>') {
                if (stack.empty()) ++roots;
                stack.push_back(n);
                ++i;
                break;
            }
            if (s.compare(i, 2, "/>") == 0) {
                if (stack.empty()) ++roots;
                i += 2;
                break;
            }
            const std::string attr = name_at(i);
            if (attr.empty() || i >= s.size() || s[i] != '=') return "bad attribute in " + n;
            ++i;
            if (i >= s.size() || s[i] != '"') return "unquoted attribute " + attr;
            ++i;
            while (i < s.size() && s[i] != '"') {
                if (s[i] == '<') return "'<' inside attribute " + attr;
                if (s[i] == '&' && !entity_ok(i)) return "bad entity in attribute " + attr;
                ++i;
            }
            if (i >= s.size()) return "unterminated attribute " + attr;
            ++i;
        }
    }
    if (!stack.empty()) return "unclosed " + stack.back();
    if (roots != 1) return "expected one root element";
    return {};
}

}  // namespace xids::test

#endif
