#include "tanet/data/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "tanet/core/error.hpp"

namespace tanet {
namespace {

std::vector<unsigned char> slurp(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw NotFoundError("cannot open image file " + file.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool is_png(const std::vector<unsigned char>& b) {
    static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    return b.size() >= 8 && std::memcmp(b.data(), sig, 8) == 0;
}

bool is_jpeg(const std::vector<unsigned char>& b) {
    return b.size() >= 2 && b[0] == 0xff && b[1] == 0xd8;
}

Image from_rgb8(const std::vector<unsigned char>& px, int h, int w) {
    Image im(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t o = (static_cast<std::size_t>(y) * w + x) * 3;
            im.at(0, y, x) = px[o] / 255.0;
            im.at(1, y, x) = px[o + 1] / 255.0;
            im.at(2, y, x) = px[o + 2] / 255.0;
        }
    return im;
}

Image read_png_bytes(const std::vector<unsigned char>& bytes,
                     const std::filesystem::path& file) {
    png_image pim;
    std::memset(&pim, 0, sizeof pim);
    pim.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&pim, bytes.data(), bytes.size()))
        throw FormatError("bad PNG in " + file.string() + ": " + pim.message);
    pim.format = PNG_FORMAT_RGB;
    std::vector<unsigned char> px(PNG_IMAGE_SIZE(pim));
    if (!png_image_finish_read(&pim, nullptr, px.data(), 0, nullptr)) {
        const std::string msg = pim.message;
        png_image_free(&pim);
        throw FormatError("bad PNG in " + file.string() + ": " + msg);
    }
    return from_rgb8(px, static_cast<int>(pim.height), static_cast<int>(pim.width));
}

struct JpegErr {
    jpeg_error_mgr mgr;
    std::jmp_buf jb;
    char msg[JMSG_LENGTH_MAX] = {0};
};

void jpeg_err_exit(j_common_ptr cinfo) {
    auto* e = reinterpret_cast<JpegErr*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, e->msg);
    std::longjmp(e->jb, 1);
}

Image read_jpeg_bytes(const std::vector<unsigned char>& bytes,
                      const std::filesystem::path& file) {
    jpeg_decompress_struct cinfo;
    JpegErr err;
    cinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = jpeg_err_exit;
    std::vector<unsigned char> px;
    int h = 0, w = 0;
    if (setjmp(err.jb)) {
        jpeg_destroy_decompress(&cinfo);
        throw FormatError("bad JPEG in " + file.string() + ": " + err.msg);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    h = static_cast<int>(cinfo.output_height);
    w = static_cast<int>(cinfo.output_width);
    px.resize(static_cast<std::size_t>(h) * w * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        unsigned char* row = px.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return from_rgb8(px, h, w);
}

unsigned char to_byte(double v) {
    return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

} // namespace

Image read_image(const std::filesystem::path& file) {
    const auto bytes = slurp(file);
    if (is_png(bytes)) return read_png_bytes(bytes, file);
    if (is_jpeg(bytes)) return read_jpeg_bytes(bytes, file);
    throw FormatError("unrecognized image format in " + file.string() +
                      " (expected PNG or JPEG)");
}

void write_png(const std::filesystem::path& file, const Image& im) {
    const int h = im.height(), w = im.width();
    std::vector<unsigned char> px(static_cast<std::size_t>(h) * w * 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t o = (static_cast<std::size_t>(y) * w + x) * 3;
            px[o] = to_byte(im.at(0, y, x));
            px[o + 1] = to_byte(im.at(1, y, x));
            px[o + 2] = to_byte(im.at(2, y, x));
        }
    png_image pim;
    std::memset(&pim, 0, sizeof pim);
    pim.version = PNG_IMAGE_VERSION;
    pim.width = static_cast<png_uint_32>(w);
    pim.height = static_cast<png_uint_32>(h);
    pim.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&pim, file.string().c_str(), 0, px.data(), 0, nullptr))
        throw IoError("cannot write PNG " + file.string() + ": " + pim.message);
}

void write_jpeg(const std::filesystem::path& file, const Image& im, int quality) {
    const int h = im.height(), w = im.width();
    std::vector<unsigned char> px(static_cast<std::size_t>(h) * w * 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t o = (static_cast<std::size_t>(y) * w + x) * 3;
            px[o] = to_byte(im.at(0, y, x));
            px[o + 1] = to_byte(im.at(1, y, x));
            px[o + 2] = to_byte(im.at(2, y, x));
        }
    FILE* fp = std::fopen(file.string().c_str(), "wb");
    if (!fp) throw IoError("cannot open " + file.string() + " for writing");
    jpeg_compress_struct cinfo;
    JpegErr err;
    cinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = jpeg_err_exit;
    if (setjmp(err.jb)) {
        jpeg_destroy_compress(&cinfo);
        std::fclose(fp);
        throw IoError("JPEG encode failed for " + file.string() + ": " + err.msg);
    }
    jpeg_create_compress(&cinfo);
    jpeg_stdio_dest(&cinfo, fp);
    cinfo.image_width = static_cast<JDIMENSION>(w);
    cinfo.image_height = static_cast<JDIMENSION>(h);
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    while (cinfo.next_scanline < cinfo.image_height) {
        JSAMPROW row = px.data() +
                       static_cast<std::size_t>(cinfo.next_scanline) * cinfo.image_width * 3;
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
    std::fclose(fp);
}

void write_png_gray(const std::filesystem::path& file, const Tensor& map) {
    Tensor m = map;
    if (m.rank() == 3 && m.dim(0) == 1) m = m.reshaped({m.dim(1), m.dim(2)});
    if (m.rank() != 2)
        throw ShapeError("grayscale PNG expects (h,w) or (1,h,w), got " + map.shape_string());
    const int h = m.dim(0), w = m.dim(1);
    std::vector<unsigned char> px(static_cast<std::size_t>(h) * w);
    for (long i = 0; i < m.numel(); ++i) px[static_cast<std::size_t>(i)] = to_byte(m[i]);
    png_image pim;
    std::memset(&pim, 0, sizeof pim);
    pim.version = PNG_IMAGE_VERSION;
    pim.width = static_cast<png_uint_32>(w);
    pim.height = static_cast<png_uint_32>(h);
    pim.format = PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&pim, file.string().c_str(), 0, px.data(), 0, nullptr))
        throw IoError("cannot write PNG " + file.string() + ": " + pim.message);
}

} // namespace tanet
