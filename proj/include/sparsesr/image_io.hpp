#pragma once

// Grayscale raster I/O: binary PGM (P5) and PNG, 8 or 16 bits per sample.
// Loaded samples are divided by the format's max value; saved pixels are clamped
// to [0, 1] and quantized with round-half-up.

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "sparsesr/error.hpp"
#include "sparsesr/image.hpp"

namespace sparsesr {

enum class ImageFormat { pgm, png };

namespace detail {

inline std::uint32_t quantize(double v, std::uint32_t max_sample) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint32_t>(std::floor(c * max_sample + 0.5));
}

inline ImageFormat format_from_extension(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (ext == ".pgm") return ImageFormat::pgm;
    if (ext == ".png") return ImageFormat::png;
    fail(ErrorCode::unsupported_format, "unsupported image extension: " + path.string());
}

inline Image decode_pgm(const std::vector<unsigned char>& bytes, const std::string& name) {
    std::size_t pos = 2; // past "P5"
    std::optional<double> pixel_size;
    auto skip_space_and_comments = [&] {
        for (;;) {
            while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
            if (pos < bytes.size() && bytes[pos] == '#') {
                const std::size_t start = pos;
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
                std::istringstream line(std::string(bytes.begin() + start + 1, bytes.begin() + pos));
                std::string key;
                double value = 0.0;
                if (line >> key >> value && key == "pixel_size") pixel_size = value;
                continue;
            }
            break;
        }
    };
    auto read_uint = [&]() -> unsigned long {
        skip_space_and_comments();
        unsigned long v = 0;
        bool any = false;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + static_cast<unsigned long>(bytes[pos] - '0');
            ++pos;
            any = true;
        }
        if (!any) fail(ErrorCode::corrupt_file, "malformed PGM header: " + name);
        return v;
    };
    const unsigned long width = read_uint();
    const unsigned long height = read_uint();
    const unsigned long maxval = read_uint();
    if (width == 0 || height == 0 || maxval == 0 || maxval > 65535)
        fail(ErrorCode::corrupt_file, "invalid PGM header values: " + name);
    ++pos; // single whitespace before the raster
    const std::size_t bps = maxval < 256 ? 1 : 2;
    const std::size_t count = width * height;
    if (bytes.size() < pos + count * bps) fail(ErrorCode::corrupt_file, "truncated PGM raster: " + name);
    std::vector<double> pixels(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t s =
            bps == 1 ? bytes[pos + i] : (std::uint32_t{bytes[pos + 2 * i]} << 8) | bytes[pos + 2 * i + 1];
        if (s > maxval) fail(ErrorCode::corrupt_file, "PGM sample exceeds maxval: " + name);
        pixels[i] = static_cast<double>(s) / static_cast<double>(maxval);
    }
    Image img(width, height, std::move(pixels));
    img.set_pixel_size(pixel_size);
    return img;
}

struct PngReadState {
    png_uint_32 width = 0;
    png_uint_32 height = 0;
    int bit_depth = 0;
    int color_type = 0;
    std::vector<unsigned char>* raster = nullptr;
    double pixel_size = -1.0;
    const char* error = nullptr;
};

// Plain C-style routine so that longjmp never skips a C++ destructor.
inline bool png_read_raw(std::FILE* fp, PngReadState& st) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        st.error = "libpng decode error";
        return false;
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    st.width = png_get_image_width(png, info);
    st.height = png_get_image_height(png, info);
    st.bit_depth = png_get_bit_depth(png, info);
    st.color_type = png_get_color_type(png, info);
    if (st.color_type != PNG_COLOR_TYPE_GRAY) {
        png_destroy_read_struct(&png, &info, nullptr);
        st.error = "non-grayscale";
        return false;
    }
    if (st.bit_depth < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
        st.bit_depth = 8;
    }
    png_textp text = nullptr;
    int num_text = 0;
    if (png_get_text(png, info, &text, &num_text) > 0) {
        for (int i = 0; i < num_text; ++i)
            if (std::string_view(text[i].key) == "pixel_size") st.pixel_size = std::atof(text[i].text);
    }
    png_read_update_info(png, info);
    const std::size_t row_bytes = png_get_rowbytes(png, info);
    st.raster->resize(row_bytes * st.height);
    for (png_uint_32 r = 0; r < st.height; ++r) png_read_row(png, st.raster->data() + r * row_bytes, nullptr);
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

inline bool png_write_raw(std::FILE* fp, std::uint32_t width, std::uint32_t height, int bit_depth,
                          const unsigned char* raster, const char* pixel_size_text) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, width, height, bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_text text{};
    if (pixel_size_text) {
        text.compression = PNG_TEXT_COMPRESSION_NONE;
        text.key = const_cast<char*>("pixel_size");
        text.text = const_cast<char*>(pixel_size_text);
        png_set_text(png, info, &text, 1);
    }
    png_write_info(png, info);
    const std::size_t row_bytes = static_cast<std::size_t>(width) * (bit_depth / 8);
    for (std::uint32_t r = 0; r < height; ++r)
        png_write_row(png, const_cast<unsigned char*>(raster + r * row_bytes));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline Image load_png(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) fail(ErrorCode::io, "cannot open " + path.string());
    std::vector<unsigned char> raster;
    PngReadState st;
    st.raster = &raster;
    if (!png_read_raw(fp.get(), st)) {
        if (st.error && std::string_view(st.error) == "non-grayscale")
            fail(ErrorCode::unsupported_format, "non-grayscale PNG (convert to grayscale first): " + path.string());
        fail(ErrorCode::corrupt_file, "cannot decode PNG: " + path.string());
    }
    const std::size_t count = static_cast<std::size_t>(st.width) * st.height;
    const double maxval = st.bit_depth == 16 ? 65535.0 : 255.0;
    std::vector<double> pixels(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t s = st.bit_depth == 16 ? (std::uint32_t{raster[2 * i]} << 8) | raster[2 * i + 1]
                                                   : std::uint32_t{raster[i]};
        pixels[i] = static_cast<double>(s) / maxval;
    }
    Image img(st.width, st.height, std::move(pixels));
    if (st.pixel_size > 0) img.set_pixel_size(st.pixel_size);
    return img;
}

} // namespace detail

/// Reads a grayscale PGM (P5) or PNG; the format is detected from the file's magic bytes.
inline Image load_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) detail::fail(ErrorCode::io, "cannot open " + path.string());
    unsigned char magic[8] = {};
    in.read(reinterpret_cast<char*>(magic), 8);
    const auto got = in.gcount();
    static constexpr unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (got == 8 && std::equal(magic, magic + 8, png_sig)) {
        in.close();
        return detail::load_png(path);
    }
    if (got >= 2 && magic[0] == 'P') {
        if (magic[1] == '5') {
            in.seekg(0);
            std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            return detail::decode_pgm(bytes, path.string());
        }
        if (magic[1] == '6' || magic[1] == '3')
            detail::fail(ErrorCode::unsupported_format, "non-grayscale PNM (convert to grayscale first): " + path.string());
    }
    detail::fail(ErrorCode::unsupported_format, "unsupported image format: " + path.string());
}

/// Writes PGM or PNG (chosen by extension) at 8 or 16 bits per sample.
inline void save_image(const Image& image, const std::filesystem::path& path, int bit_depth = 16) {
    detail::require(bit_depth == 8 || bit_depth == 16, ErrorCode::invalid_argument, "bit depth must be 8 or 16");
    detail::require(!image.empty(), ErrorCode::invalid_argument, "cannot save an empty image");
    const auto format = detail::format_from_extension(path);
    const std::uint32_t max_sample = bit_depth == 16 ? 65535u : 255u;
    const std::size_t bps = bit_depth / 8;
    std::vector<unsigned char> raster(image.size() * bps);
    const auto px = image.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) {
        const std::uint32_t s = detail::quantize(px[i], max_sample);
        if (bps == 1) {
            raster[i] = static_cast<unsigned char>(s);
        } else {
            raster[2 * i] = static_cast<unsigned char>(s >> 8);
            raster[2 * i + 1] = static_cast<unsigned char>(s & 0xff);
        }
    }
    std::string pixel_size_text;
    if (image.pixel_size()) {
        std::ostringstream os;
        os.precision(17);
        os << *image.pixel_size();
        pixel_size_text = os.str();
    }

    if (format == ImageFormat::pgm) {
        std::ofstream out(path, std::ios::binary);
        if (!out) detail::fail(ErrorCode::io, "cannot write " + path.string());
        out << "P5\n";
        if (!pixel_size_text.empty()) out << "# pixel_size " << pixel_size_text << "\n";
        out << image.width() << ' ' << image.height() << '\n' << max_sample << '\n';
        out.write(reinterpret_cast<const char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
        if (!out) detail::fail(ErrorCode::io, "write failed: " + path.string());
        return;
    }
    detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) detail::fail(ErrorCode::io, "cannot write " + path.string());
    if (!detail::png_write_raw(fp.get(), static_cast<std::uint32_t>(image.width()),
                               static_cast<std::uint32_t>(image.height()), bit_depth, raster.data(),
                               pixel_size_text.empty() ? nullptr : pixel_size_text.c_str()))
        detail::fail(ErrorCode::io, "PNG encode failed: " + path.string());
}

} // namespace sparsesr
