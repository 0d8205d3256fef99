#include "rjmlt/image.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <limits>
#include <memory>
#include <stdexcept>

namespace rjmlt {

void Image::scale(double factor)
{
    for (auto &p : _pixels)
        p *= factor;
}

void Image::add(const Image &other)
{
    if (other._width != _width || other._height != _height)
        throw std::invalid_argument("image dimensions mismatch");
    for (size_t i = 0; i < _pixels.size(); ++i)
        _pixels[i] += other._pixels[i];
}

namespace {

struct FileCloser {
    void operator()(std::FILE *f) const { if (f) std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Writes through a temp file so a failed run never leaves partial output.
template<typename Body>
void atomicWrite(const std::string &path, Body &&body)
{
    std::string tmp = path + ".tmp";
    {
        FilePtr f(std::fopen(tmp.c_str(), "wb"));
        if (!f)
            throw std::runtime_error("failed to open " + tmp + " for writing");
        body(f.get());
        if (std::fflush(f.get()) != 0)
            throw std::runtime_error("failed to write " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw std::runtime_error("failed to move " + tmp + " into place");
    }
}

} // namespace

void writePfm(const Image &image, const std::string &path)
{
    atomicWrite(path, [&](std::FILE *f) {
        std::fprintf(f, "PF\n%d %d\n-1.0\n", image.width(), image.height());
        std::vector<float> row(size_t(image.width())*3);
        for (int y = image.height() - 1; y >= 0; --y) {
            for (int x = 0; x < image.width(); ++x) {
                const Vec3 &p = image.at(x, y);
                row[size_t(x)*3 + 0] = float(p.x);
                row[size_t(x)*3 + 1] = float(p.y);
                row[size_t(x)*3 + 2] = float(p.z);
            }
            if (std::fwrite(row.data(), sizeof(float), row.size(), f) != row.size())
                throw std::runtime_error("short write on " + path);
        }
    });
}

Image readPfm(const std::string &path)
{
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f)
        throw std::runtime_error("failed to open " + path);

    char magic[3] = {};
    int w = 0, h = 0;
    double scale = 0.0;
    if (std::fscanf(f.get(), "%2s %d %d %lf", magic, &w, &h, &scale) != 4 ||
            std::strcmp(magic, "PF") != 0 || w <= 0 || h <= 0 || scale >= 0.0)
        throw std::runtime_error("unsupported PFM header in " + path);
    if (std::fgetc(f.get()) != '\n')
        throw std::runtime_error("malformed PFM header in " + path);

    Image image(w, h);
    std::vector<float> row(size_t(w)*3);
    for (int y = h - 1; y >= 0; --y) {
        if (std::fread(row.data(), sizeof(float), row.size(), f.get()) != row.size())
            throw std::runtime_error("truncated PFM data in " + path);
        for (int x = 0; x < w; ++x)
            image.at(x, y) = Vec3(row[size_t(x)*3], row[size_t(x)*3 + 1], row[size_t(x)*3 + 2]);
    }
    return image;
}

void writePpm(const Image &image, const std::string &path)
{
    auto quantize = [](double v) {
        double g = std::pow(std::fmax(0.0, std::fmin(1.0, v)), 1.0/2.2);
        return uint8_t(std::fmin(255.0, g*255.0 + 0.5));
    };
    atomicWrite(path, [&](std::FILE *f) {
        std::fprintf(f, "P6\n%d %d\n255\n", image.width(), image.height());
        std::vector<uint8_t> row(size_t(image.width())*3);
        for (int y = 0; y < image.height(); ++y) {
            for (int x = 0; x < image.width(); ++x) {
                const Vec3 &p = image.at(x, y);
                row[size_t(x)*3 + 0] = quantize(p.x);
                row[size_t(x)*3 + 1] = quantize(p.y);
                row[size_t(x)*3 + 2] = quantize(p.z);
            }
            if (std::fwrite(row.data(), 1, row.size(), f) != row.size())
                throw std::runtime_error("short write on " + path);
        }
    });
}

double mse(const Image &a, const Image &b)
{
    if (a.width() != b.width() || a.height() != b.height())
        throw std::invalid_argument("image dimensions mismatch");
    double sum = 0.0;
    for (size_t i = 0; i < a.pixels().size(); ++i) {
        Vec3 d = a.pixels()[i] - b.pixels()[i];
        sum += d.x*d.x + d.y*d.y + d.z*d.z;
    }
    return sum/(3.0*a.pixels().size());
}

double relativeMse(const Image &img, const Image &ref)
{
    double err = mse(img, ref);
    double norm = 0.0;
    for (const Vec3 &p : ref.pixels())
        norm += p.x*p.x + p.y*p.y + p.z*p.z;
    norm /= 3.0*ref.pixels().size();
    if (norm == 0.0)
        return err == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return err/norm;
}

} // namespace rjmlt
