#pragma once

#include <string>

namespace sdnr {

enum class IndexName { SigmaMin, External };
enum class Orientation { HigherIsStable, LowerIsStable };

/// Which stability index a value refers to and which direction is safer.
struct IndexKind {
    IndexName name = IndexName::SigmaMin;
    Orientation orientation = Orientation::HigherIsStable;

    static IndexKind sigma_min() { return {IndexName::SigmaMin, Orientation::HigherIsStable}; }
    static IndexKind external(Orientation o) { return {IndexName::External, o}; }

    bool operator==(const IndexKind&) const = default;
};

inline std::string to_string(IndexName name) { return name == IndexName::SigmaMin ? "sigma_min" : "external"; }
inline std::string to_string(Orientation o) {
    return o == Orientation::HigherIsStable ? "higher_is_stable" : "lower_is_stable";
}

}  // namespace sdnr
