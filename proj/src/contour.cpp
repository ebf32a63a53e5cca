#include "nodelab/contour.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nodelab {

Contour::Contour(const Grid& grid, std::vector<Node> nodes) : grid_(grid), nodes_(std::move(nodes))
{
    if (grid_.dim() != 2) {
        throw std::invalid_argument("contours live on 2D grids");
    }
    if (nodes_.size() < 5 || nodes_.front() != nodes_.back()) {
        throw std::invalid_argument("contour must be closed (first node equals last) with at least 4 steps");
    }
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        if (nodes_[k][0] >= grid_.points(0) || nodes_[k][1] >= grid_.points(1)) {
            throw std::invalid_argument("contour node outside grid");
        }
        if (k == 0) {
            continue;
        }
        const auto dx = static_cast<long>(nodes_[k][0]) - static_cast<long>(nodes_[k - 1][0]);
        const auto dy = static_cast<long>(nodes_[k][1]) - static_cast<long>(nodes_[k - 1][1]);
        if (std::abs(dx) + std::abs(dy) != 1) {
            throw std::invalid_argument("consecutive contour nodes must be grid neighbours");
        }
    }
}

Contour Contour::circle(const Grid& grid, Point center, double radius)
{
    const double h = std::min(grid.spacing(0), grid.spacing(1));
    const auto samples = static_cast<std::size_t>(std::ceil(16.0 * 2.0 * std::numbers::pi * radius / h)) + 16;
    auto to_index = [&](double v, int axis) {
        const Axis& a = grid.axis(axis);
        const long i = std::lround((v - a.lo) / a.spacing());
        if (i < 0 || i >= static_cast<long>(a.points)) {
            throw std::invalid_argument("circle does not fit inside the grid");
        }
        return static_cast<std::size_t>(i);
    };
    std::vector<Node> raw;
    for (std::size_t s = 0; s < samples; ++s) {
        const double th = 2.0 * std::numbers::pi * static_cast<double>(s) / static_cast<double>(samples);
        const Node n{to_index(center[0] + radius * std::cos(th), 0), to_index(center[1] + radius * std::sin(th), 1)};
        if (raw.empty() || raw.back() != n) {
            raw.push_back(n);
        }
    }
    raw.push_back(raw.front());
    std::vector<Node> path{raw.front()};
    for (std::size_t k = 1; k < raw.size(); ++k) {
        Node cur = path.back();
        const Node target = raw[k];
        while (cur[0] != target[0]) {
            cur[0] += cur[0] < target[0] ? 1 : static_cast<std::size_t>(-1);
            path.push_back(cur);
        }
        while (cur[1] != target[1]) {
            cur[1] += cur[1] < target[1] ? 1 : static_cast<std::size_t>(-1);
            path.push_back(cur);
        }
    }
    return Contour(grid, std::move(path));
}

Contour Contour::rectangle(const Grid& grid, std::size_t ix0, std::size_t iy0, std::size_t ix1, std::size_t iy1)
{
    if (!(ix0 < ix1 && iy0 < iy1)) {
        throw std::invalid_argument("rectangle corners must satisfy ix0 < ix1 and iy0 < iy1");
    }
    std::vector<Node> path;
    for (std::size_t i = ix0; i < ix1; ++i) {
        path.push_back({i, iy0});
    }
    for (std::size_t j = iy0; j < iy1; ++j) {
        path.push_back({ix1, j});
    }
    for (std::size_t i = ix1; i > ix0; --i) {
        path.push_back({i, iy1});
    }
    for (std::size_t j = iy1; j > iy0; --j) {
        path.push_back({ix0, j});
    }
    path.push_back({ix0, iy0});
    return Contour(grid, std::move(path));
}

Point Contour::point(std::size_t k) const
{
    return {grid_.axis(0).coord(nodes_[k][0]), grid_.axis(1).coord(nodes_[k][1])};
}

bool Contour::encloses(const Point& p) const
{
    bool inside = false;
    for (std::size_t k = 0; k + 1 < nodes_.size(); ++k) {
        const Point a = point(k);
        const Point b = point(k + 1);
        if ((a[1] > p[1]) != (b[1] > p[1])) {
            const double xc = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if (p[0] < xc) {
                inside = !inside;
            }
        }
    }
    return inside;
}

} // namespace nodelab
