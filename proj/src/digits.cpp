#include "ffl/digits.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ffl::digits {

int DigitBitmap::black_count() const {
    int n = 0;
    for (auto v : px) n += v != 0;
    return n;
}

bool DigitBitmap::subset_of(const DigitBitmap& other) const {
    for (std::size_t i = 0; i < px.size(); ++i)
        if (px[i] && !other.px[i]) return false;
    return true;
}

namespace {

// Stylized 8x8 glyphs. The set is drawn so that 3 is strictly contained in
// 8 (with a wide pixel-count gap) and 0 shares all but one pixel of 4;
// those overlaps set the decision margins of the in-memory classifier.
constexpr const char* kBuiltin[10] = {
    // 0
    "..####.."
    "..#..##."
    ".#...#.."
    ".##..##."
    ".#...#.."
    ".##..#.."
    "...###.."
    "........",
    // 1
    "...##..."
    "....#..."
    "....#..."
    "....#..."
    "....#..."
    "....#..."
    "...###.."
    "........",
    // 2
    "..####.."
    ".#....#."
    "......#."
    ".....#.."
    "...##..."
    "..#....."
    ".######."
    "........",
    // 3
    "...###.."
    "......#."
    "......#."
    "....##.."
    "......#."
    "......#."
    "...###.."
    "........",
    // 4
    "...#.#.."
    "..#..#.."
    ".#...#.."
    ".######."
    ".....#.."
    ".....#.."
    ".....#.."
    "........",
    // 5
    ".#####.."
    ".#......"
    ".#......"
    ".####..."
    ".....#.."
    ".#...#.."
    "..####.."
    "........",
    // 6
    "..####.."
    ".#....#."
    ".##....."
    ".#####.."
    ".##..#.."
    ".#....#."
    "..####.."
    "........",
    // 7
    ".######."
    "....##.."
    "....#..."
    "...#...."
    "...#...."
    "..#....."
    "..#....."
    "........",
    // 8
    "..####.."
    ".##..##."
    ".##...#."
    "..####.."
    ".##...#."
    ".##..##."
    "..####.."
    "........",
    // 9
    "..####.."
    ".#...#.."
    ".#...#.."
    "..####.."
    ".....#.."
    "....#..."
    ".##....."
    "........",
};

DigitBitmap from_chars(const char* s) {
    DigitBitmap b;
    for (std::size_t i = 0; i < 64; ++i) b.px[i] = s[i] == '#' ? 1 : 0;
    return b;
}

}  // namespace

DigitSet DigitSet::parse(std::istream& in) {
    DigitSet set;
    std::string line;
    for (int d = 0; d < 10; ++d) {
        int row = 0;
        while (row < 8) {
            if (!std::getline(in, line))
                throw std::invalid_argument("dataset truncated at digit " + std::to_string(d));
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;  // blank separators
            if (line.size() != 8)
                throw std::invalid_argument("dataset line must be 8 characters: '" + line + "'");
            for (int col = 0; col < 8; ++col) {
                const char c = line[static_cast<std::size_t>(col)];
                if (c != '#' && c != '.')
                    throw std::invalid_argument("dataset characters must be '#' or '.'");
                set.glyphs[static_cast<std::size_t>(d)]
                    .px[static_cast<std::size_t>(row * 8 + col)] = c == '#';
            }
            ++row;
        }
    }
    set.validate();
    return set;
}

DigitSet DigitSet::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open dataset file: " + path);
    return parse(in);
}

void DigitSet::save(std::ostream& out) const {
    for (int d = 0; d < 10; ++d) {
        for (int row = 0; row < 8; ++row) {
            for (int col = 0; col < 8; ++col)
                out << (glyphs[static_cast<std::size_t>(d)].at(row, col) ? '#' : '.');
            out << '\n';
        }
        if (d != 9) out << '\n';
    }
}

const DigitSet& DigitSet::builtin() {
    static const DigitSet set = [] {
        DigitSet s;
        for (int d = 0; d < 10; ++d) s.glyphs[static_cast<std::size_t>(d)] = from_chars(kBuiltin[d]);
        s.validate();
        return s;
    }();
    return set;
}

void DigitSet::validate() const {
    for (int a = 0; a < 10; ++a)
        for (int b = 0; b < 10; ++b) {
            if (a == b) continue;
            const bool sub = glyphs[static_cast<std::size_t>(a)].subset_of(
                glyphs[static_cast<std::size_t>(b)]);
            if (a == 3 && b == 8) {
                if (!sub) throw std::invalid_argument("digit 3 must be contained in digit 8");
            } else if (sub) {
                throw std::invalid_argument("unexpected subset pair: " + std::to_string(a) +
                                            " within " + std::to_string(b));
            }
        }
    if (glyphs[3].black_count() >= glyphs[8].black_count())
        throw std::invalid_argument("digit 3 must have strictly fewer black pixels than 8");
    for (int a = 0; a < 10; ++a)
        for (int b = a + 1; b < 10; ++b)
            if (glyphs[static_cast<std::size_t>(a)].black_count() ==
                glyphs[static_cast<std::size_t>(b)].black_count())
                throw std::invalid_argument("digits " + std::to_string(a) + " and " +
                                            std::to_string(b) + " have equal black counts");
}

}  // namespace ffl::digits
