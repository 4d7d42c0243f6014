#include "objnerf/raster_io.hpp"

#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <stdexcept>

namespace objnerf {

std::vector<uint8_t> read_file_bytes(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("file not found: " + path);
    std::fseek(f, 0, SEEK_END);
    long n = std::ftell(f);
    std::fseek(f, 0, SEEK_SET);
    std::vector<uint8_t> buf(static_cast<size_t>(n), 0);
    size_t got = n > 0 ? std::fread(buf.data(), 1, size_t(n), f) : 0;
    std::fclose(f);
    if (got != size_t(n)) throw std::runtime_error("short read: " + path);
    return buf;
}

void write_file_bytes(const std::string& path, const void* data, size_t n) {
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    size_t put = n > 0 ? std::fwrite(data, 1, n, f) : 0;
    int rc = std::fclose(f);
    if (put != n || rc != 0) throw std::runtime_error("short write: " + path);
}

namespace {

void put_u32be(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(uint8_t(v >> 24));
    out.push_back(uint8_t(v >> 16));
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v));
}

uint32_t get_u32be(const uint8_t* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

void append_chunk(std::vector<uint8_t>& out, const char type[4], const std::vector<uint8_t>& payload) {
    put_u32be(out, uint32_t(payload.size()));
    size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    uint32_t crc = uint32_t(crc32(0, out.data() + start, uInt(out.size() - start)));
    put_u32be(out, crc);
}

uint8_t paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return uint8_t(a);
    if (pb <= pc) return uint8_t(b);
    return uint8_t(c);
}

const uint8_t kPngSig[8] = {137, 80, 78, 71, 13, 10, 26, 10};

} // namespace

std::vector<uint8_t> encode_png(const ImageU8& img) {
    if (img.channels != 1 && img.channels != 3)
        throw std::runtime_error("png encoder supports 1 or 3 channels");
    if (img.width < 1 || img.height < 1) throw std::runtime_error("png encoder: empty image");

    std::vector<uint8_t> out(kPngSig, kPngSig + 8);

    std::vector<uint8_t> ihdr;
    put_u32be(ihdr, uint32_t(img.width));
    put_u32be(ihdr, uint32_t(img.height));
    ihdr.push_back(8);                                  // bit depth
    ihdr.push_back(img.channels == 1 ? 0 : 2);          // gray / rgb
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    append_chunk(out, "IHDR", ihdr);

    size_t stride = size_t(img.width) * img.channels;
    std::vector<uint8_t> raw;
    raw.reserve((stride + 1) * img.height);
    for (int y = 0; y < img.height; ++y) {
        raw.push_back(0); // filter: none
        const uint8_t* row = img.data.data() + size_t(y) * stride;
        raw.insert(raw.end(), row, row + stride);
    }

    uLongf bound = compressBound(uLong(raw.size()));
    std::vector<uint8_t> comp(bound);
    // fixed compression level keeps output byte-identical across runs
    if (compress2(comp.data(), &bound, raw.data(), uLong(raw.size()), 6) != Z_OK)
        throw std::runtime_error("png encoder: deflate failed");
    comp.resize(bound);
    append_chunk(out, "IDAT", comp);
    append_chunk(out, "IEND", {});
    return out;
}

ImageU8 decode_png(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSig, 8) != 0)
        throw std::runtime_error("png decoder: bad signature");

    size_t pos = 8;
    int width = 0, height = 0, channels = 0;
    std::vector<uint8_t> idat;
    bool saw_end = false;
    while (pos + 12 <= bytes.size() && !saw_end) {
        uint32_t len = get_u32be(&bytes[pos]);
        if (pos + 12 + len > bytes.size()) throw std::runtime_error("png decoder: truncated chunk");
        const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
        const uint8_t* payload = &bytes[pos + 8];
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw std::runtime_error("png decoder: bad IHDR");
            width = int(get_u32be(payload));
            height = int(get_u32be(payload + 4));
            int depth = payload[8], color = payload[9], interlace = payload[12];
            if (depth != 8 || (color != 0 && color != 2) || interlace != 0)
                throw std::runtime_error("png decoder: unsupported format (need 8-bit gray/rgb)");
            channels = color == 0 ? 1 : 3;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), payload, payload + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            saw_end = true;
        }
        pos += 12 + len;
    }
    if (width <= 0 || height <= 0 || channels == 0 || idat.empty())
        throw std::runtime_error("png decoder: missing IHDR/IDAT");

    size_t stride = size_t(width) * channels;
    std::vector<uint8_t> raw((stride + 1) * height);
    uLongf raw_len = uLongf(raw.size());
    if (uncompress(raw.data(), &raw_len, idat.data(), uLong(idat.size())) != Z_OK ||
        raw_len != raw.size())
        throw std::runtime_error("png decoder: inflate failed");

    ImageU8 img(width, height, channels);
    int bpp = channels; // bytes per pixel at 8-bit depth
    for (int y = 0; y < height; ++y) {
        uint8_t filter = raw[size_t(y) * (stride + 1)];
        const uint8_t* src = &raw[size_t(y) * (stride + 1) + 1];
        uint8_t* dst = img.data.data() + size_t(y) * stride;
        const uint8_t* up = y > 0 ? img.data.data() + size_t(y - 1) * stride : nullptr;
        for (size_t i = 0; i < stride; ++i) {
            int a = i >= size_t(bpp) ? dst[i - bpp] : 0;
            int b = up ? up[i] : 0;
            int c = (up && i >= size_t(bpp)) ? up[i - bpp] : 0;
            int v = src[i];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw std::runtime_error("png decoder: bad filter type");
            }
            dst[i] = uint8_t(v);
        }
    }
    return img;
}

void write_png(const std::string& path, const ImageU8& img) {
    auto bytes = encode_png(img);
    write_file_bytes(path, bytes.data(), bytes.size());
}

ImageU8 read_png(const std::string& path) { return decode_png(read_file_bytes(path)); }

namespace {

void put_u32le(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(uint8_t(v));
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v >> 16));
    out.push_back(uint8_t(v >> 24));
}

uint32_t get_u32le(const uint8_t* p) {
    return uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) | (uint32_t(p[3]) << 24);
}

} // namespace

void write_dpt(const std::string& path, const ImageF& img) {
    if (img.channels != 1) throw std::runtime_error("dpt writer: single channel only");
    std::vector<uint8_t> out;
    out.reserve(12 + img.data.size() * 4);
    out.insert(out.end(), {'D', 'P', 'T', '1'});
    put_u32le(out, uint32_t(img.width));
    put_u32le(out, uint32_t(img.height));
    for (float v : img.data) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put_u32le(out, bits);
    }
    write_file_bytes(path, out.data(), out.size());
}

ImageF read_dpt(const std::string& path) {
    auto bytes = read_file_bytes(path);
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "DPT1", 4) != 0)
        throw std::runtime_error("dpt reader: bad magic in " + path);
    uint32_t w = get_u32le(&bytes[4]);
    uint32_t h = get_u32le(&bytes[8]);
    if (bytes.size() != 12 + size_t(w) * h * 4)
        throw std::runtime_error("dpt reader: size mismatch in " + path);
    ImageF img(int(w), int(h), 1);
    for (size_t i = 0; i < size_t(w) * h; ++i) {
        uint32_t bits = get_u32le(&bytes[12 + i * 4]);
        std::memcpy(&img.data[i], &bits, 4);
    }
    return img;
}

} // namespace objnerf
