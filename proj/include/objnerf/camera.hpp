#pragma once

#include <stdexcept>

namespace objnerf {

// Pinhole intrinsics, pixel units. Pixel centers sit at integer + 0.5.
struct CameraIntrinsics {
    int width = 0;
    int height = 0;
    double fx = 0;
    double fy = 0;
    double cx = 0;
    double cy = 0;

    void validate() const {
        if (width < 1 || height < 1) throw std::runtime_error("intrinsics: degenerate image size");
        if (fx <= 0 || fy <= 0) throw std::runtime_error("intrinsics: focal length must be positive");
        if (cx < 0 || cx >= width || cy < 0 || cy >= height)
            throw std::runtime_error("intrinsics: principal point outside image");
    }

    bool operator==(const CameraIntrinsics& o) const {
        return width == o.width && height == o.height && fx == o.fx && fy == o.fy &&
               cx == o.cx && cy == o.cy;
    }
};

} // namespace objnerf
