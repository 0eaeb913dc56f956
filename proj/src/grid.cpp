#include "tanpano/grid.hpp"

#include <algorithm>

namespace tanpano {

GridOrdering parse_ordering(std::string_view name)
{
    if (name == "custom_polar_first") return GridOrdering::CustomPolarFirst;
    if (name == "row_wise") return GridOrdering::RowWise;
    if (name == "column_wise") return GridOrdering::ColumnWise;
    throw LayoutError("unknown grid ordering '" + std::string(name) + "'");
}

std::string_view ordering_name(GridOrdering o)
{
    switch (o) {
        case GridOrdering::CustomPolarFirst: return "custom_polar_first";
        case GridOrdering::RowWise: return "row_wise";
        case GridOrdering::ColumnWise: return "column_wise";
    }
    return "custom_polar_first";
}

GridLayout GridLayout::make(GridOrdering ordering, int rows, int cols, int tile_px, BandCounts bands)
{
    if (rows < 1 || cols < 1 || tile_px < 1) throw LayoutError("grid rows, cols and tile size must be positive");
    GridLayout g;
    g.rows = rows;
    g.cols = cols;
    g.tile_px = tile_px;
    g.ordering = ordering;
    const int n = rows * cols;
    g.cell_of_plane.resize(n);
    switch (ordering) {
        case GridOrdering::RowWise:
            for (int i = 0; i < n; ++i) g.cell_of_plane[i] = i;
            break;
        case GridOrdering::ColumnWise:
            // plane c*rows + r sits at cell (r, c)
            for (int i = 0; i < n; ++i) g.cell_of_plane[i] = (i % rows) * cols + i / rows;
            break;
        case GridOrdering::CustomPolarFirst: {
            if (bands.total() != n) {
                throw LayoutError("band counts sum to " + std::to_string(bands.total()) + " but grid has "
                                  + std::to_string(n) + " cells");
            }
            if (bands.north + bands.south > cols) {
                throw LayoutError("polar planes do not fit in the first grid row");
            }
            // Cells in fill order: north, south, then both equatorial bands.
            std::vector<int> order;
            const int south_begin = bands.north + bands.upper + bands.lower;
            for (int i = 0; i < bands.north; ++i) order.push_back(i);
            for (int i = 0; i < bands.south; ++i) order.push_back(south_begin + i);
            const int eq_begin = bands.north;
            const int eq_count = bands.upper + bands.lower;
            // equatorial bands start on row 1 even when the polar row is short
            int cell = cols;
            std::vector<int> cells(n, -1);
            for (int k = 0; k < static_cast<int>(order.size()); ++k) cells[k] = order[k];
            for (int k = 0; k < eq_count; ++k) {
                if (cell >= n) throw LayoutError("equatorial planes do not fit below the polar row");
                cells[cell++] = eq_begin + k;
            }
            for (int c = 0; c < n; ++c) {
                if (cells[c] < 0) throw LayoutError("custom_polar_first leaves empty cells for these band counts");
                g.cell_of_plane[cells[c]] = c;
            }
            break;
        }
    }
    g.validate();
    return g;
}

std::vector<int> GridLayout::plane_of_cell() const
{
    std::vector<int> inv(cell_of_plane.size(), -1);
    for (std::size_t p = 0; p < cell_of_plane.size(); ++p) inv[cell_of_plane[p]] = static_cast<int>(p);
    return inv;
}

void GridLayout::validate() const
{
    if (rows < 1 || cols < 1 || tile_px < 1) throw LayoutError("grid rows, cols and tile size must be positive");
    if (static_cast<int>(cell_of_plane.size()) != rows * cols) {
        throw LayoutError("mapping has " + std::to_string(cell_of_plane.size()) + " entries for "
                          + std::to_string(rows * cols) + " cells");
    }
    std::vector<char> seen(cell_of_plane.size(), 0);
    for (int c : cell_of_plane) {
        if (c < 0 || c >= rows * cols || seen[c]) throw LayoutError("grid mapping is not a bijection");
        seen[c] = 1;
    }
}

} // namespace tanpano
