#pragma once

#include <cstdint>
#include <vector>

namespace objnerf {

// Dense row-major raster, interleaved channels, top-left origin.
template <typename T>
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<T> data;

    Image() = default;
    Image(int w, int h, int c, T fill = T(0)) : width(w), height(h), channels(c) {
        data.assign(size_t(w) * h * c, fill);
    }

    size_t pixel_count() const { return size_t(width) * height; }

    T& at(int x, int y, int c = 0) { return data[(size_t(y) * width + x) * channels + c]; }
    const T& at(int x, int y, int c = 0) const {
        return data[(size_t(y) * width + x) * channels + c];
    }

    bool same_shape(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }

    bool operator==(const Image& o) const {
        return same_shape(o) && data == o.data;
    }
};

using ImageU8 = Image<uint8_t>;
using ImageF = Image<float>;

} // namespace objnerf
