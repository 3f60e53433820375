#include "splatalign/image_io.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include "splatalign/errors.hpp"

namespace splatalign {

namespace {

const unsigned char kPngSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

void append_u32(std::vector<unsigned char>& out, uint32_t v) {
    out.push_back((v >> 24) & 0xff);
    out.push_back((v >> 16) & 0xff);
    out.push_back((v >> 8) & 0xff);
    out.push_back(v & 0xff);
}

uint32_t read_u32(const unsigned char* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | p[3];
}

void append_chunk(std::vector<unsigned char>& out, const char* type,
                  const std::vector<unsigned char>& payload) {
    append_u32(out, uint32_t(payload.size()));
    std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    uLong crc = crc32(0L, out.data() + crc_start, uInt(out.size() - crc_start));
    append_u32(out, uint32_t(crc));
}

unsigned char to_byte(double v) {
    double s = std::round(clamp01(v) * 255.0);
    return (unsigned char)(s < 0.0 ? 0 : (s > 255.0 ? 255 : s));
}

int paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

}  // namespace

std::vector<unsigned char> encode_png(const ImageBuffer& image, bool with_alpha) {
    if (image.width <= 0 || image.height <= 0)
        throw invalid_parameter_error("encode_png: empty image");
    const int bpp = with_alpha ? 4 : 3;
    const std::size_t stride = std::size_t(image.width) * bpp;

    // Filter 0 scanlines; zlib does the heavy lifting.
    std::vector<unsigned char> raw((stride + 1) * image.height);
    std::size_t o = 0;
    for (int y = 0; y < image.height; ++y) {
        raw[o++] = 0;
        for (int x = 0; x < image.width; ++x) {
            raw[o++] = to_byte(image.at(x, y, 0));
            raw[o++] = to_byte(image.at(x, y, 1));
            raw[o++] = to_byte(image.at(x, y, 2));
            if (with_alpha) raw[o++] = to_byte(image.a(x, y));
        }
    }

    uLongf bound = compressBound(uLong(raw.size()));
    std::vector<unsigned char> compressed(bound);
    if (compress2(compressed.data(), &bound, raw.data(), uLong(raw.size()), 6) != Z_OK)
        throw io_error("encode_png: deflate failed");
    compressed.resize(bound);

    std::vector<unsigned char> out(kPngSignature, kPngSignature + 8);
    std::vector<unsigned char> ihdr;
    append_u32(ihdr, uint32_t(image.width));
    append_u32(ihdr, uint32_t(image.height));
    ihdr.push_back(8);                         // bit depth
    ihdr.push_back(with_alpha ? 6 : 2);        // color type
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);                         // no interlace
    append_chunk(out, "IHDR", ihdr);
    append_chunk(out, "IDAT", compressed);
    append_chunk(out, "IEND", {});
    return out;
}

ImageBuffer decode_png(const std::vector<unsigned char>& bytes, bool* had_alpha) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSignature, 8) != 0)
        throw io_error("decode_png: not a PNG stream");

    uint32_t width = 0, height = 0;
    int color_type = -1, bit_depth = 0;
    std::vector<unsigned char> idat;

    std::size_t pos = 8;
    while (pos + 8 <= bytes.size()) {
        uint32_t len = read_u32(bytes.data() + pos);
        if (pos + 12 + len > bytes.size()) throw io_error("decode_png: truncated chunk");
        std::string type(bytes.begin() + pos + 4, bytes.begin() + pos + 8);
        const unsigned char* payload = bytes.data() + pos + 8;
        if (type == "IHDR") {
            if (len < 13) throw io_error("decode_png: bad IHDR");
            width = read_u32(payload);
            height = read_u32(payload + 4);
            bit_depth = payload[8];
            color_type = payload[9];
            if (payload[12] != 0) throw io_error("decode_png: interlaced PNG unsupported");
        } else if (type == "IDAT") {
            idat.insert(idat.end(), payload, payload + len);
        } else if (type == "IEND") {
            break;
        }
        pos += 12 + len;
    }
    if (width == 0 || height == 0 || bit_depth != 8)
        throw io_error("decode_png: unsupported header (8-bit non-interlaced only)");

    int channels;
    switch (color_type) {
        case 0: channels = 1; break;
        case 2: channels = 3; break;
        case 4: channels = 2; break;
        case 6: channels = 4; break;
        default: throw io_error("decode_png: unsupported color type");
    }
    bool alpha = color_type == 4 || color_type == 6;
    if (had_alpha) *had_alpha = alpha;

    const std::size_t stride = std::size_t(width) * channels;
    std::vector<unsigned char> raw((stride + 1) * height);
    uLongf raw_size = uLongf(raw.size());
    if (uncompress(raw.data(), &raw_size, idat.data(), uLong(idat.size())) != Z_OK ||
        raw_size != raw.size())
        throw io_error("decode_png: inflate failed");

    // Undo the per-scanline filters in place.
    std::vector<unsigned char> prev(stride, 0);
    std::vector<unsigned char> line(stride);
    ImageBuffer image{int(width), int(height)};
    for (uint32_t y = 0; y < height; ++y) {
        const unsigned char* src = raw.data() + y * (stride + 1);
        int filter = src[0];
        for (std::size_t i = 0; i < stride; ++i) {
            int a = i >= std::size_t(channels) ? line[i - channels] : 0;
            int b = prev[i];
            int c = i >= std::size_t(channels) ? prev[i - channels] : 0;
            int v = src[1 + i];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw io_error("decode_png: unknown scanline filter");
            }
            line[i] = (unsigned char)(v & 0xff);
        }
        for (uint32_t x = 0; x < width; ++x) {
            const unsigned char* px = line.data() + std::size_t(x) * channels;
            double r, g, bch, al = 1.0;
            switch (color_type) {
                case 0: r = g = bch = px[0] / 255.0; break;
                case 4: r = g = bch = px[0] / 255.0; al = px[1] / 255.0; break;
                case 2: r = px[0] / 255.0; g = px[1] / 255.0; bch = px[2] / 255.0; break;
                default:
                    r = px[0] / 255.0;
                    g = px[1] / 255.0;
                    bch = px[2] / 255.0;
                    al = px[3] / 255.0;
            }
            image.at(int(x), int(y), 0) = r;
            image.at(int(x), int(y), 1) = g;
            image.at(int(x), int(y), 2) = bch;
            image.a(int(x), int(y)) = al;
        }
        prev = line;
    }
    return image;
}

void write_png(const std::string& path, const ImageBuffer& image, bool with_alpha) {
    auto bytes = encode_png(image, with_alpha);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("write_png: cannot open " + path);
    os.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!os) throw io_error("write_png: write failed for " + path);
}

ImageBuffer read_png(const std::string& path, bool* had_alpha) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("read_png: cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                     std::istreambuf_iterator<char>());
    return decode_png(bytes, had_alpha);
}

namespace {
const char kB64Chars[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(const unsigned char* data, std::size_t size) {
    std::string out;
    out.reserve((size + 2) / 3 * 4);
    for (std::size_t i = 0; i < size; i += 3) {
        uint32_t v = uint32_t(data[i]) << 16;
        if (i + 1 < size) v |= uint32_t(data[i + 1]) << 8;
        if (i + 2 < size) v |= uint32_t(data[i + 2]);
        out.push_back(kB64Chars[(v >> 18) & 63]);
        out.push_back(kB64Chars[(v >> 12) & 63]);
        out.push_back(i + 1 < size ? kB64Chars[(v >> 6) & 63] : '=');
        out.push_back(i + 2 < size ? kB64Chars[v & 63] : '=');
    }
    return out;
}

std::vector<unsigned char> base64_decode(const std::string& text) {
    auto value_of = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    std::vector<unsigned char> out;
    uint32_t buffer = 0;
    int bits = 0;
    for (char c : text) {
        if (c == '=' || c == '\n' || c == '\r') continue;
        int v = value_of(c);
        if (v < 0) throw io_error("base64_decode: invalid character");
        buffer = (buffer << 6) | uint32_t(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back((unsigned char)((buffer >> bits) & 0xff));
        }
    }
    return out;
}

}  // namespace splatalign
