#include "djrhr/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

namespace djrhr {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Tensor read_png(const std::string& path, int want_channels) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open image: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng init failed for " + path);
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("failed to decode PNG: " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_packing(png);
    png_set_expand(png);
    if (want_channels == 3) {
        png_set_gray_to_rgb(png);
    } else {
        const int color = png_get_color_type(png, info);
        if (color & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    }
    png_read_update_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int channels = static_cast<int>(png_get_channels(png, info));
    if (channels != want_channels) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("unexpected channel count " + std::to_string(channels) + " in " + path);
    }

    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * channels);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) {
        rows[y] = raw.data() + static_cast<std::size_t>(y) * w * channels;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Tensor out(1, want_channels, h, w);
    const float scale = 1.0f / 255.0f;
    for (png_uint_32 y = 0; y < h; ++y) {
        for (png_uint_32 x = 0; x < w; ++x) {
            for (int c = 0; c < want_channels; ++c) {
                out.at(0, c, y, x) =
                    scale * raw[(static_cast<std::size_t>(y) * w + x) * channels + c];
            }
        }
    }
    return out;
}

void write_png(const std::string& path, const Tensor& img, int channels) {
    const Dims& d = img.dims();
    if (d.n != 1 || d.c != channels) {
        throw ShapeError("write_png: expected (1," + std::to_string(channels) + ",H,W), got " +
                         d.str());
    }
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot open image for writing: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng init failed for " + path);
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed to encode PNG: " + path);
    }
    png_init_io(png, fp.get());
    // fixed settings keep output byte-reproducible
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, static_cast<png_uint_32>(d.w), static_cast<png_uint_32>(d.h), 8,
                 channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<unsigned char> row(static_cast<std::size_t>(d.w) * channels);
    for (std::int64_t y = 0; y < d.h; ++y) {
        for (std::int64_t x = 0; x < d.w; ++x) {
            for (int c = 0; c < channels; ++c) {
                float v = img.at(0, c, y, x);
                v = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
                row[static_cast<std::size_t>(x) * channels + c] =
                    static_cast<unsigned char>(std::lround(v * 255.0f));
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

Tensor read_png_rgb(const std::string& path) { return read_png(path, 3); }
Tensor read_png_gray(const std::string& path) { return read_png(path, 1); }
void write_png_rgb(const std::string& path, const Tensor& img) { write_png(path, img, 3); }
void write_png_gray(const std::string& path, const Tensor& img) { write_png(path, img, 1); }

}  // namespace djrhr
