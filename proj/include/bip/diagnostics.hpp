// Copyright (c) bipkit contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

namespace bip {

/// Byte range in a source file, with 1-based line/column of the start.
struct SourceSpan {
    std::string file;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::uint32_t line = 0;
    std::uint32_t column = 0;

    bool valid() const { return line > 0; }
};

enum class Severity { Error, Warning };

struct Diagnostic {
    Severity severity = Severity::Error;
    std::string code;     // stable machine-readable tag, e.g. "dup-port"
    std::string message;
    SourceSpan span;

    std::string format() const {
        std::ostringstream os;
        if (!span.file.empty() || span.valid()) {
            os << (span.file.empty() ? "<input>" : span.file) << ':' << span.line << ':'
               << span.column << ": ";
        }
        os << (severity == Severity::Error ? "error: " : "warning: ") << message;
        if (!code.empty()) os << " [" << code << "]";
        return os.str();
    }
};

inline bool has_errors(const std::vector<Diagnostic>& diags) {
    for (const auto& d : diags)
        if (d.severity == Severity::Error) return true;
    return false;
}

}  // namespace bip
