#pragma once

#include <string>

#include "driftlab/errors.hpp"

namespace driftlab {

enum class BugKind { VarMisuse, WrongBinop, ArgSwap };

inline std::string to_string(BugKind kind) {
    switch (kind) {
        case BugKind::VarMisuse: return "var-misuse";
        case BugKind::WrongBinop: return "wrong-binop";
        case BugKind::ArgSwap: return "arg-swap";
    }
    return "unknown";
}

inline BugKind bug_kind_from_string(const std::string& name) {
    if (name == "var-misuse") return BugKind::VarMisuse;
    if (name == "wrong-binop") return BugKind::WrongBinop;
    if (name == "arg-swap") return BugKind::ArgSwap;
    throw ConfigError("unknown bug kind: " + name);
}

}  // namespace driftlab
