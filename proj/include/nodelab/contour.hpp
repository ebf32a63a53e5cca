#pragma once

#include "nodelab/grid.hpp"

#include <array>
#include <vector>

namespace nodelab {

/// Closed loop of grid points joined by axis-aligned unit steps. The loop
/// never wraps across a periodic boundary.
class Contour {
public:
    using Node = std::array<std::size_t, 2>;

    /// Throws unless the first node equals the last and consecutive nodes are
    /// grid neighbours.
    Contour(const Grid& grid, std::vector<Node> nodes);

    /// Digital circle: the grid points nearest to a finely sampled circle,
    /// joined by axis-aligned steps, traversed counter-clockwise.
    static Contour circle(const Grid& grid, Point center, double radius);

    /// Counter-clockwise boundary of the index box [ix0, ix1] x [iy0, iy1].
    static Contour rectangle(const Grid& grid, std::size_t ix0, std::size_t iy0, std::size_t ix1, std::size_t iy1);

    const Grid& grid() const { return grid_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    std::size_t flat(std::size_t k) const { return grid_.index(nodes_[k][0], nodes_[k][1]); }
    Point point(std::size_t k) const;
    std::size_t size() const { return nodes_.size(); }

    /// Even-odd point-in-polygon test against the loop's vertices.
    bool encloses(const Point& p) const;

private:
    Grid grid_;
    std::vector<Node> nodes_;
};

} // namespace nodelab
