#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tanpano/image.hpp"
#include "tanpano/raster.hpp"

namespace tanpano {

enum class GridOrdering { CustomPolarFirst, RowWise, ColumnWise };

GridOrdering parse_ordering(std::string_view name);
std::string_view ordering_name(GridOrdering o);

/// Plane counts of the four latitude bands, in plane-index order
/// (north, upper equatorial, lower equatorial, south).
struct BandCounts
{
    int north = 3;
    int upper = 6;
    int lower = 6;
    int south = 3;

    int total() const { return north + upper + lower + south; }
};

/// Placement of tangent tiles into a rows x cols mosaic. `cell_of_plane[i]`
/// is the row-major cell index holding plane i.
struct GridLayout
{
    int rows = 3;
    int cols = 6;
    int tile_px = 192;
    GridOrdering ordering = GridOrdering::CustomPolarFirst;
    std::vector<int> cell_of_plane;

    static GridLayout make(GridOrdering ordering, int rows = 3, int cols = 6, int tile_px = 192,
                           BandCounts bands = {});

    int plane_count() const { return rows * cols; }
    int grid_width() const { return cols * tile_px; }
    int grid_height() const { return rows * tile_px; }

    std::vector<int> plane_of_cell() const;

    /// Throws LayoutError unless the mapping is a bijection onto the cells.
    void validate() const;
};

/// Tiles every image into a single mosaic.
template <class Scalar>
Image<Scalar> assemble(const std::vector<Image<Scalar>>& tiles, const GridLayout& layout)
{
    layout.validate();
    if (static_cast<int>(tiles.size()) != layout.plane_count()) {
        throw LayoutError("grid needs " + std::to_string(layout.plane_count()) + " tiles, got "
                          + std::to_string(tiles.size()));
    }
    const int ch = tiles.front().channels();
    for (std::size_t i = 0; i < tiles.size(); ++i) {
        if (tiles[i].width() != layout.tile_px || tiles[i].height() != layout.tile_px || tiles[i].channels() != ch) {
            throw LayoutError("tile " + std::to_string(i) + " does not match " + std::to_string(layout.tile_px)
                              + " px / " + std::to_string(ch) + " channels");
        }
    }
    Image<Scalar> grid(layout.grid_width(), layout.grid_height(), ch);
    const int n = layout.tile_px;
    for (std::size_t i = 0; i < tiles.size(); ++i) {
        const int cell = layout.cell_of_plane[i];
        const int ox = (cell % layout.cols) * n;
        const int oy = (cell / layout.cols) * n;
        for (int y = 0; y < n; ++y) {
            std::copy_n(tiles[i].pixel(0, y), std::size_t(n) * ch, grid.pixel(ox, oy + y));
        }
    }
    return grid;
}

template <class Scalar>
Image<Scalar> assemble(const TangentSet<Scalar>& ts, const GridLayout& layout)
{
    ts.validate();
    return assemble(ts.images, layout);
}

/// Inverse of assemble; tiles come back in plane-index order.
template <class Scalar>
std::vector<Image<Scalar>> split(const Image<Scalar>& grid, const GridLayout& layout)
{
    layout.validate();
    if (grid.width() != layout.grid_width() || grid.height() != layout.grid_height()) {
        throw LayoutError("grid raster is " + std::to_string(grid.width()) + "x" + std::to_string(grid.height())
                          + ", layout expects " + std::to_string(layout.grid_width()) + "x"
                          + std::to_string(layout.grid_height()));
    }
    const int n = layout.tile_px;
    const int ch = grid.channels();
    std::vector<Image<Scalar>> tiles;
    tiles.reserve(layout.plane_count());
    for (int i = 0; i < layout.plane_count(); ++i) {
        const int cell = layout.cell_of_plane[i];
        const int ox = (cell % layout.cols) * n;
        const int oy = (cell / layout.cols) * n;
        Image<Scalar> t(n, n, ch);
        for (int y = 0; y < n; ++y) std::copy_n(grid.pixel(ox, oy + y), std::size_t(n) * ch, t.pixel(0, y));
        tiles.push_back(std::move(t));
    }
    return tiles;
}

template <class Scalar>
TangentSet<Scalar> split(const Image<Scalar>& grid, const GridLayout& layout, std::vector<TangentPlaneSpec> specs)
{
    TangentSet<Scalar> ts{std::move(specs), split(grid, layout)};
    ts.validate();
    return ts;
}

} // namespace tanpano
