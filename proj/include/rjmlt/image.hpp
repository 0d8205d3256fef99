#pragma once

#include "math.hpp"

#include <string>
#include <vector>

namespace rjmlt {

// Linear RGB framebuffer. Pixel (0,0) is the top-left corner; PFM output
// flips rows since the format stores scanlines bottom-up.
class Image {
public:
    Image() = default;
    Image(int width, int height)
    : _width(width), _height(height), _pixels(size_t(width)*height) {}

    int width() const { return _width; }
    int height() const { return _height; }

    Vec3 &at(int x, int y) { return _pixels[size_t(y)*_width + x]; }
    const Vec3 &at(int x, int y) const { return _pixels[size_t(y)*_width + x]; }

    std::vector<Vec3> &pixels() { return _pixels; }
    const std::vector<Vec3> &pixels() const { return _pixels; }

    void scale(double factor);
    void add(const Image &other);

private:
    int _width = 0, _height = 0;
    std::vector<Vec3> _pixels;
};

// 32-bit little-endian float RGB, scanlines bottom-up, scale line "-1.0".
void writePfm(const Image &image, const std::string &path);
Image readPfm(const std::string &path);

// 8-bit PPM with gamma 2.2 for quick inspection.
void writePpm(const Image &image, const std::string &path);

double mse(const Image &a, const Image &b);
double relativeMse(const Image &img, const Image &ref);

} // namespace rjmlt
