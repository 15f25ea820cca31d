#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>

namespace ffl::digits {

// One 8x8 binary glyph. Pixels are stored row-major from the top-left;
// serialization order is a separate concern (see experiments).
struct DigitBitmap {
    std::array<std::uint8_t, 64> px{};  // 1 = black

    bool at(int row, int col) const { return px[static_cast<std::size_t>(row * 8 + col)] != 0; }
    int black_count() const;
    // True when every black pixel of this glyph is also black in `other`.
    bool subset_of(const DigitBitmap& other) const;
};

struct DigitSet {
    std::array<DigitBitmap, 10> glyphs;

    const DigitBitmap& operator[](int d) const { return glyphs[static_cast<std::size_t>(d)]; }

    // Ten blocks of 8 lines of 8 characters ('#' black, '.' white),
    // blank-line separated, digit order 0-9.
    static DigitSet parse(std::istream& in);
    static DigitSet load_file(const std::string& path);
    void save(std::ostream& out) const;

    // The dataset shipped with the repo.
    static const DigitSet& builtin();

    // Structural requirements: digit 3's black set is a strict subset of
    // digit 8's, black counts are pairwise distinct, and no other ordered
    // pair is in a subset relation. Throws std::invalid_argument.
    void validate() const;
};

}  // namespace ffl::digits
