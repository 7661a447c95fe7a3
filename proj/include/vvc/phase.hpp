#ifndef VVC_PHASE_HPP
#define VVC_PHASE_HPP

#include "vvc/types.hpp"

#include <array>
#include <string>
#include <string_view>

namespace vvc {

/// One phase of a three-phase circuit. Canonical ordering is a < b < c and
/// is used everywhere phase quantities are stacked.
enum class Phase : int { a = 0, b = 1, c = 2 };

inline char phase_char(Phase p) { return static_cast<char>('a' + static_cast<int>(p)); }

/// Ordered subset of {a, b, c}, stored as a bit mask. Iteration always
/// yields phases in canonical order regardless of input order.
class PhaseSet {
public:
    PhaseSet() = default;

    static PhaseSet parse(std::string_view s) {
        PhaseSet ps;
        for (char ch : s) {
            if (ch < 'a' || ch > 'c') throw_data("invalid phase character '" + std::string(1, ch) + "' (expected subset of \"abc\")");
            Phase p = static_cast<Phase>(ch - 'a');
            if (ps.contains(p)) throw_data("duplicate phase '" + std::string(1, ch) + "' in phase set");
            ps.insert(p);
        }
        return ps;
    }

    void insert(Phase p) { mask_ |= bit(p); }
    bool contains(Phase p) const { return (mask_ & bit(p)) != 0; }
    int size() const { return (mask_ & 1) + ((mask_ >> 1) & 1) + ((mask_ >> 2) & 1); }
    bool empty() const { return mask_ == 0; }
    bool subset_of(PhaseSet other) const { return (mask_ & ~other.mask_) == 0; }
    bool operator==(const PhaseSet&) const = default;

    /// Phases in canonical order; only the first size() entries are valid.
    std::array<Phase, 3> ordered() const {
        std::array<Phase, 3> out{};
        int k = 0;
        for (int i = 0; i < 3; ++i)
            if (contains(static_cast<Phase>(i))) out[k++] = static_cast<Phase>(i);
        return out;
    }

    /// Position of `p` within the canonical ordering of this set, or -1.
    int position(Phase p) const {
        if (!contains(p)) return -1;
        int pos = 0;
        for (int i = 0; i < static_cast<int>(p); ++i)
            if (contains(static_cast<Phase>(i))) ++pos;
        return pos;
    }

    std::string str() const {
        std::string s;
        for (int i = 0; i < 3; ++i)
            if (contains(static_cast<Phase>(i))) s.push_back(static_cast<char>('a' + i));
        return s;
    }

    static PhaseSet all() { return parse("abc"); }

private:
    static unsigned bit(Phase p) { return 1u << static_cast<int>(p); }
    unsigned mask_ = 0;
};

}  // namespace vvc

#endif
