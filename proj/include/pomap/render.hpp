#pragma once

#include "pomap/model.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace pomap {

// Cell characters: '.' label 0, '#' label 1, '?' fractional, digits for labels
// above 1, ' ' for nodes outside the picture.
struct CharGrid {
   std::size_t rows = 0;
   std::size_t cols = 0;
   std::vector<char> cells;   // row-major, node r·cols + c
};

char label_char(Label s);

// -1 shows as '?'.
CharGrid labels_grid(std::size_t rows, std::size_t cols, const std::vector<Label>& labels);
// A node with an integral marginal shows its label, otherwise '?'.
CharGrid marginals_grid(std::size_t rows, std::size_t cols, const ExactMarginals& mu);
// '#' inside `set`, '.' outside.
CharGrid mask_grid(std::size_t rows, std::size_t cols, const std::vector<int>& set);

std::string to_ascii(const CharGrid& grid);

// Binary PPM, `scale` pixels per node: label 1 red, label 0 blue, fractional
// green, higher labels grey, blank cells white.
void write_ppm(std::ostream& out, const CharGrid& grid, std::size_t scale = 16);

} // namespace pomap
