#include "pomap/render.hpp"

#include "pomap/error.hpp"

#include <algorithm>
#include <array>
#include <ostream>

namespace pomap {

namespace {

CharGrid blank(std::size_t rows, std::size_t cols, std::size_t n)
{
   if (rows * cols != n)
      throw Error(ErrorCode::not_a_grid,
                  std::to_string(n) + " nodes do not fill a " + std::to_string(rows) + "x" + std::to_string(cols) + " grid");
   return {rows, cols, std::vector<char>(n, ' ')};
}

} // namespace

char label_char(Label s)
{
   if (s == 0) return '.';
   if (s == 1) return '#';
   if (s >= 2 && s <= 9) return static_cast<char>('0' + s);
   return '*';
}

CharGrid labels_grid(std::size_t rows, std::size_t cols, const std::vector<Label>& labels)
{
   CharGrid g = blank(rows, cols, labels.size());
   for (std::size_t i = 0; i < labels.size(); ++i) g.cells[i] = labels[i] < 0 ? '?' : label_char(labels[i]);
   return g;
}

CharGrid marginals_grid(std::size_t rows, std::size_t cols, const ExactMarginals& mu)
{
   CharGrid g = blank(rows, cols, mu.num_nodes());
   for (std::size_t i = 0; i < mu.num_nodes(); ++i) {
      g.cells[i] = '?';
      for (std::size_t s = 0; s < mu.num_labels; ++s)
         if (mu.node(i, static_cast<Label>(s)) == 1) g.cells[i] = label_char(static_cast<Label>(s));
   }
   return g;
}

CharGrid mask_grid(std::size_t rows, std::size_t cols, const std::vector<int>& set)
{
   CharGrid g = blank(rows, cols, rows * cols);
   std::fill(g.cells.begin(), g.cells.end(), '.');
   for (int i : set) g.cells.at(i) = '#';
   return g;
}

std::string to_ascii(const CharGrid& grid)
{
   std::string out;
   for (std::size_t r = 0; r < grid.rows; ++r) {
      out.append(grid.cells.begin() + static_cast<std::ptrdiff_t>(r * grid.cols),
                 grid.cells.begin() + static_cast<std::ptrdiff_t>((r + 1) * grid.cols));
      out.push_back('\n');
   }
   return out;
}

void write_ppm(std::ostream& out, const CharGrid& grid, std::size_t scale)
{
   if (scale == 0) throw Error(ErrorCode::invalid_argument, "PPM scale must be positive");
   out << "P6\n" << grid.cols * scale << ' ' << grid.rows * scale << "\n255\n";
   for (std::size_t y = 0; y < grid.rows * scale; ++y)
      for (std::size_t x = 0; x < grid.cols * scale; ++x) {
         std::array<unsigned char, 3> rgb{255, 255, 255};
         switch (grid.cells[(y / scale) * grid.cols + x / scale]) {
            case '#': rgb = {220, 30, 30}; break;
            case '.': rgb = {30, 60, 220}; break;
            case '?': rgb = {30, 180, 60}; break;
            case ' ': break;
            default: rgb = {128, 128, 128}; break;
         }
         out.write(reinterpret_cast<const char*>(rgb.data()), 3);
      }
}

} // namespace pomap
