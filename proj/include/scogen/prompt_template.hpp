#pragma once

#include <map>
#include <string>
#include <string_view>

namespace scogen {

/// Single-pass substitution of `{name}` placeholders. Substituted values are
/// copied verbatim and never rescanned, so braces inside them survive.
/// Unknown placeholders are left untouched.
inline std::string render_template(std::string_view tmpl, const std::map<std::string, std::string, std::less<>>& values) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            const std::size_t close = tmpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                if (auto it = values.find(tmpl.substr(i + 1, close - i - 1)); it != values.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tmpl[i++]);
    }
    return out;
}

}  // namespace scogen
