#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "ifsjulia/geometry.hpp"

namespace ifsjulia {

/// Square view rectangle [cx-hw, cx+hw] x [cy-hw, cy+hw].
struct Window {
    cplx center{0.0, 0.0};
    double half_width = 1.2;

    bool contains_closed_unit_disk() const {
        return half_width >= 1.0 + std::abs(center.real()) &&
               half_width >= 1.0 + std::abs(center.imag());
    }
};

/// Binary raster over a window; row 0 holds the top of the picture
/// (largest imaginary part), matching image conventions.
struct GridMask {
    std::size_t res = 0;
    Window window;
    std::vector<std::uint8_t> cells;  // row-major, res*res, 255 = marked

    GridMask() = default;
    GridMask(std::size_t resolution, Window w)
        : res(resolution), window(w), cells(resolution * resolution, 0) {}

    double pixel_size() const { return 2.0 * window.half_width / static_cast<double>(res); }

    cplx pixel_center(std::size_t ix, std::size_t iy) const {
        const double w = pixel_size();
        return cplx(window.center.real() - window.half_width + (static_cast<double>(ix) + 0.5) * w,
                    window.center.imag() + window.half_width - (static_cast<double>(iy) + 0.5) * w);
    }

    /// Pixel indices covering a point, or false if outside the window.
    bool locate(const cplx& z, std::size_t& ix, std::size_t& iy) const {
        const double w = pixel_size();
        const double fx = (z.real() - (window.center.real() - window.half_width)) / w;
        const double fy = ((window.center.imag() + window.half_width) - z.imag()) / w;
        if (fx < 0.0 || fy < 0.0) return false;
        ix = static_cast<std::size_t>(fx);
        iy = static_cast<std::size_t>(fy);
        return ix < res && iy < res;
    }

    std::uint8_t& at(std::size_t ix, std::size_t iy) { return cells[iy * res + ix]; }
    std::uint8_t at(std::size_t ix, std::size_t iy) const { return cells[iy * res + ix]; }

    void mark(const cplx& z) {
        std::size_t ix, iy;
        if (locate(z, ix, iy)) at(ix, iy) = 255;
    }

    std::size_t marked_count() const {
        std::size_t n = 0;
        for (auto c : cells) n += (c != 0);
        return n;
    }

    std::vector<cplx> marked_points() const {
        std::vector<cplx> pts;
        for (std::size_t iy = 0; iy < res; ++iy)
            for (std::size_t ix = 0; ix < res; ++ix)
                if (at(ix, iy)) pts.push_back(pixel_center(ix, iy));
        return pts;
    }
};

/// Binary P5 PGM, maxval 255. The byte layout is fixed so identical masks
/// produce identical files on every platform.
inline void write_pgm(const GridMask& mask, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_pgm: cannot open " + path);
    out << "P5\n" << mask.res << " " << mask.res << "\n255\n";
    out.write(reinterpret_cast<const char*>(mask.cells.data()),
              static_cast<std::streamsize>(mask.cells.size()));
    if (!out) throw std::runtime_error("write_pgm: write failed for " + path);
}

/// Rasterizes a point cloud: marks every pixel containing a sample.
inline GridMask rasterize(const std::vector<cplx>& points, std::size_t res, Window window) {
    GridMask mask(res, window);
    for (const auto& p : points) mask.mark(p);
    return mask;
}

}  // namespace ifsjulia
