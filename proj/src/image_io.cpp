#include "thermoface/image_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>

#include "thermoface/errors.hpp"

namespace thermoface {

namespace {

constexpr std::uint64_t kMaxPixels = 1ull << 28;  // 256M pixels

void check_dims(std::uint64_t w, std::uint64_t h, std::uint64_t c) {
    if (w == 0 || h == 0) throw UnsupportedFormatError("zero image dimension");
    if (w * h > kMaxPixels || w * h * c > kMaxPixels * 3)
        throw DimensionOverflowError("declared dimensions exceed the pixel budget");
}

std::uint8_t to_byte(float v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

// ---- PNM (P5/P6) ----

struct PnmReader {
    const std::vector<std::uint8_t>& b;
    std::size_t pos = 0;

    int next_token_int() {
        // skip whitespace and '#' comments
        while (pos < b.size()) {
            if (std::isspace(b[pos])) {
                ++pos;
            } else if (b[pos] == '#') {
                while (pos < b.size() && b[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
        if (pos >= b.size()) throw TruncatedStreamError("pnm: header ended early");
        if (!std::isdigit(b[pos])) throw UnsupportedFormatError("pnm: non-numeric header token");
        long v = 0;
        while (pos < b.size() && std::isdigit(b[pos])) {
            v = v * 10 + (b[pos] - '0');
            if (v > 1'000'000'000) throw DimensionOverflowError("pnm: header value overflow");
            ++pos;
        }
        return static_cast<int>(v);
    }
};

Image load_pnm(const std::vector<std::uint8_t>& bytes, int channels) {
    PnmReader r{bytes, 2};
    const int w = r.next_token_int();
    const int h = r.next_token_int();
    const int maxval = r.next_token_int();
    if (maxval != 255) throw UnsupportedFormatError("pnm: only maxval 255 is supported");
    check_dims(w, h, channels);
    if (r.pos >= bytes.size() || !std::isspace(bytes[r.pos]))
        throw UnsupportedFormatError("pnm: missing whitespace after maxval");
    ++r.pos;  // single whitespace byte before raster
    const std::size_t need = static_cast<std::size_t>(w) * h * channels;
    if (bytes.size() - r.pos < need) throw TruncatedStreamError("pnm: raster shorter than declared");
    Image img(w, h, channels);
    // interleaved bytes -> planar floats
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c)
                img.at(x, y, c) = bytes[r.pos + (static_cast<std::size_t>(y) * w + x) * channels + c] / 255.0f;
    return img;
}

std::vector<std::uint8_t> save_pnm(const Image& img, int channels) {
    if (img.channels != channels)
        throw InvalidArgument("save_image: channel count does not match the format");
    std::string header = std::string(channels == 1 ? "P5" : "P6") + "\n" +
                         std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + img.plane_size() * channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < channels; ++c) out.push_back(to_byte(img.at(x, y, c)));
    return out;
}

// ---- PNG ----

const std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

std::uint32_t be32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void put_be32(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back(std::uint8_t(x >> 24));
    v.push_back(std::uint8_t(x >> 16));
    v.push_back(std::uint8_t(x >> 8));
    v.push_back(std::uint8_t(x));
}

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

std::vector<std::uint8_t> zlib_inflate(const std::uint8_t* src, std::size_t n, std::size_t expect) {
    std::vector<std::uint8_t> out(expect);
    uLongf dst_len = static_cast<uLongf>(expect);
    const int rc = uncompress(out.data(), &dst_len, src, static_cast<uLong>(n));
    if (rc == Z_BUF_ERROR || rc == Z_DATA_ERROR)
        throw TruncatedStreamError("png: corrupt or short compressed stream");
    if (rc != Z_OK || dst_len != expect) throw TruncatedStreamError("png: bad inflate result");
    return out;
}

Image load_png(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 + 25) throw TruncatedStreamError("png: stream shorter than the minimal file");
    std::size_t pos = 8;
    bool seen_ihdr = false, seen_iend = false;
    std::uint32_t w = 0, h = 0;
    int channels = 0;
    std::vector<std::uint8_t> idat;
    while (pos + 8 <= bytes.size()) {
        const std::uint32_t len = be32(&bytes[pos]);
        if (pos + 12 + static_cast<std::size_t>(len) > bytes.size())
            throw TruncatedStreamError("png: chunk overruns the stream");
        const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
        const std::uint8_t* payload = &bytes[pos + 8];
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw UnsupportedFormatError("png: bad IHDR length");
            w = be32(payload);
            h = be32(payload + 4);
            const int depth = payload[8], color = payload[9];
            const int comp = payload[10], filter = payload[11], interlace = payload[12];
            if (depth != 8) throw UnsupportedFormatError("png: only 8-bit depth is supported");
            if (color == 0)
                channels = 1;
            else if (color == 2)
                channels = 3;
            else
                throw UnsupportedFormatError("png: only grayscale and RGB are supported");
            if (comp != 0 || filter != 0) throw UnsupportedFormatError("png: unknown compression/filter method");
            if (interlace != 0) throw UnsupportedFormatError("png: interlaced streams are not supported");
            check_dims(w, h, channels);
            seen_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), payload, payload + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            seen_iend = true;
            break;
        }
        pos += 12 + len;
    }
    if (!seen_ihdr) throw TruncatedStreamError("png: missing IHDR");
    if (!seen_iend) throw TruncatedStreamError("png: missing IEND");
    if (idat.empty()) throw TruncatedStreamError("png: no IDAT data");

    const std::size_t stride = static_cast<std::size_t>(w) * channels;
    std::vector<std::uint8_t> raw = zlib_inflate(idat.data(), idat.size(), (stride + 1) * h);

    // undo per-row filters in place
    std::vector<std::uint8_t> pix(stride * h);
    for (std::uint32_t y = 0; y < h; ++y) {
        const std::uint8_t ftype = raw[(stride + 1) * y];
        const std::uint8_t* src = &raw[(stride + 1) * y + 1];
        std::uint8_t* cur = &pix[stride * y];
        const std::uint8_t* up = y > 0 ? &pix[stride * (y - 1)] : nullptr;
        for (std::size_t i = 0; i < stride; ++i) {
            const int a = i >= static_cast<std::size_t>(channels) ? cur[i - channels] : 0;
            const int b = up ? up[i] : 0;
            const int c = (up && i >= static_cast<std::size_t>(channels)) ? up[i - channels] : 0;
            int v = src[i];
            switch (ftype) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw UnsupportedFormatError("png: unknown row filter");
            }
            cur[i] = static_cast<std::uint8_t>(v);
        }
    }

    Image img(static_cast<int>(w), static_cast<int>(h), channels);
    for (std::uint32_t y = 0; y < h; ++y)
        for (std::uint32_t x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c)
                img.at(static_cast<int>(x), static_cast<int>(y), c) =
                    pix[stride * y + static_cast<std::size_t>(x) * channels + c] / 255.0f;
    return img;
}

void append_chunk(std::vector<std::uint8_t>& out, const char* type, const std::vector<std::uint8_t>& payload) {
    put_be32(out, static_cast<std::uint32_t>(payload.size()));
    const std::size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    const uLong crc = crc32(0, out.data() + start, static_cast<uInt>(out.size() - start));
    put_be32(out, static_cast<std::uint32_t>(crc));
}

std::vector<std::uint8_t> save_png(const Image& img) {
    const int channels = img.channels;
    const std::size_t stride = static_cast<std::size_t>(img.width) * channels;
    std::vector<std::uint8_t> raw((stride + 1) * img.height);
    for (int y = 0; y < img.height; ++y) {
        raw[(stride + 1) * y] = 0;  // filter type none
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < channels; ++c)
                raw[(stride + 1) * y + 1 + static_cast<std::size_t>(x) * channels + c] = to_byte(img.at(x, y, c));
    }
    uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> comp(comp_len);
    if (compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
        throw Error("png: deflate failed");
    comp.resize(comp_len);

    std::vector<std::uint8_t> out(kPngSig, kPngSig + 8);
    std::vector<std::uint8_t> ihdr;
    put_be32(ihdr, static_cast<std::uint32_t>(img.width));
    put_be32(ihdr, static_cast<std::uint32_t>(img.height));
    ihdr.push_back(8);                          // bit depth
    ihdr.push_back(channels == 1 ? 0 : 2);      // color type
    ihdr.push_back(0);                          // compression
    ihdr.push_back(0);                          // filter
    ihdr.push_back(0);                          // interlace
    append_chunk(out, "IHDR", ihdr);
    append_chunk(out, "IDAT", comp);
    append_chunk(out, "IEND", {});
    return out;
}

}  // namespace

Image load_image(const std::vector<std::uint8_t>& bytes) {
    if (bytes.empty()) throw TruncatedStreamError("empty byte stream");
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return load_pnm(bytes, 1);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return load_pnm(bytes, 3);
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0) return load_png(bytes);
    throw UnsupportedFormatError("unrecognized image signature");
}

std::vector<std::uint8_t> save_image(const Image& img, ImageFormat format) {
    if (!img.valid()) throw InvalidArgument("save_image: invalid image");
    switch (format) {
        case ImageFormat::pgm: return save_pnm(img, 1);
        case ImageFormat::ppm: return save_pnm(img, 3);
        case ImageFormat::png: return save_png(img);
    }
    throw InvalidArgument("save_image: unknown format");
}

Image load_image_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return load_image(bytes);
}

void save_image_file(const Image& img, const std::string& path) {
    ImageFormat fmt;
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".pgm") == 0)
        fmt = ImageFormat::pgm;
    else if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".ppm") == 0)
        fmt = ImageFormat::ppm;
    else if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".png") == 0)
        fmt = ImageFormat::png;
    else
        throw InvalidArgument("save_image_file: unknown extension on " + path);
    // grayscale data saved as ppm/png gets replicated, color to pgm goes via luminance
    Image out = img;
    if (fmt == ImageFormat::pgm && img.channels == 3) out = to_luminance(img);
    if (fmt == ImageFormat::ppm && img.channels == 1) {
        out = Image(img.width, img.height, 3);
        for (int c = 0; c < 3; ++c)
            std::copy(img.data.begin(), img.data.end(), out.data.begin() + c * img.plane_size());
    }
    const std::vector<std::uint8_t> bytes = save_image(out, fmt);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error("short write to " + path);
}

}  // namespace thermoface
