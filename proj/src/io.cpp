#include "denselp/io.h"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

namespace denselp {

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open file: " + path);
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>());
}

[[noreturn]] void corrupt(const std::string& path, std::size_t offset, const std::string& what) {
    throw std::runtime_error(path + ": " + what + " at byte " + std::to_string(offset));
}

FeatureField from_rgb(int width, int height, const std::vector<std::uint8_t>& rgb) {
    if (width < 1 || height < 1 || std::int64_t(width) * height > 64ll * 1024 * 1024)
        throw std::runtime_error("image dimensions out of range");
    FeatureField f;
    f.width = width;
    f.height = height;
    f.n = width * height;
    f.positions.resize(std::size_t(f.n) * 2);
    f.colors.resize(std::size_t(f.n) * 3);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const int a = y * width + x;
            f.positions[2 * a + 0] = float(x);
            f.positions[2 * a + 1] = float(y);
            for (int c = 0; c < 3; ++c)
                f.colors[3 * a + c] = float(rgb[std::size_t(a) * 3 + c]);
        }
    return f;
}

FeatureField load_ppm(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::size_t pos = 2; // past "P6"
    auto skip_space = [&]() {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n')
                    ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() {
        skip_space();
        if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
            corrupt(path, pos, "expected integer in PPM header");
        long v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1 << 30)
                corrupt(path, pos, "PPM header value overflows");
            ++pos;
        }
        return int(v);
    };
    const int width = read_int();
    const int height = read_int();
    const int maxval = read_int();
    if (maxval != 255)
        corrupt(path, pos, "only 8-bit PPM supported (maxval 255)");
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        corrupt(path, pos, "missing whitespace after PPM header");
    ++pos;
    const std::size_t need = std::size_t(width) * height * 3;
    if (bytes.size() - pos < need)
        corrupt(path, bytes.size(), "PPM pixel data truncated");
    std::vector<std::uint8_t> rgb(bytes.begin() + pos, bytes.begin() + pos + need);
    return from_rgb(width, height, rgb);
}

std::uint32_t be32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

std::vector<std::uint8_t> zlib_inflate(const std::vector<std::uint8_t>& in,
                                       std::size_t expected) {
    std::vector<std::uint8_t> out(expected);
    z_stream zs;
    std::memset(&zs, 0, sizeof(zs));
    if (inflateInit(&zs) != Z_OK)
        throw std::runtime_error("zlib init failed");
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = uInt(in.size());
    zs.next_out = out.data();
    zs.avail_out = uInt(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || zs.total_out != expected)
        throw std::runtime_error("PNG inflate failed or size mismatch");
    return out;
}

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc)
        return a;
    return pb <= pc ? b : c;
}

FeatureField load_png(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    if (bytes.size() < 8 || std::memcmp(bytes.data(), sig, 8) != 0)
        corrupt(path, 0, "bad PNG signature");

    int width = 0, height = 0, color_type = -1;
    std::vector<std::uint8_t> idat;
    std::size_t pos = 8;
    bool saw_ihdr = false, saw_iend = false;
    while (pos + 8 <= bytes.size() && !saw_iend) {
        const std::uint32_t len = be32(&bytes[pos]);
        if (pos + 12 + len > bytes.size())
            corrupt(path, pos, "PNG chunk overruns file");
        const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
        const std::uint8_t* data = &bytes[pos + 8];
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13)
                corrupt(path, pos, "bad IHDR length");
            width = int(be32(data));
            height = int(be32(data + 4));
            const int bit_depth = data[8];
            color_type = data[9];
            const int interlace = data[12];
            if (bit_depth != 8)
                corrupt(path, pos + 8 + 8, "only 8-bit PNG supported");
            if (color_type != 0 && color_type != 2 && color_type != 6)
                corrupt(path, pos + 8 + 9, "only gray/RGB/RGBA PNG supported");
            if (interlace != 0)
                corrupt(path, pos + 8 + 12, "interlaced PNG not supported");
            saw_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            saw_iend = true;
        }
        pos += 12 + len;
    }
    if (!saw_ihdr || idat.empty())
        corrupt(path, pos, "PNG missing IHDR or IDAT");

    const int bpp = color_type == 0 ? 1 : (color_type == 2 ? 3 : 4);
    const std::size_t stride = std::size_t(width) * bpp;
    const std::vector<std::uint8_t> raw = zlib_inflate(idat, (stride + 1) * height);

    std::vector<std::uint8_t> pixels(stride * height);
    for (int y = 0; y < height; ++y) {
        const std::uint8_t filter = raw[(stride + 1) * y];
        const std::uint8_t* src = &raw[(stride + 1) * y + 1];
        std::uint8_t* cur = &pixels[stride * y];
        const std::uint8_t* up = y > 0 ? &pixels[stride * (y - 1)] : nullptr;
        for (std::size_t i = 0; i < stride; ++i) {
            const int a = i >= std::size_t(bpp) ? cur[i - bpp] : 0;
            const int b = up ? up[i] : 0;
            const int c = (up && i >= std::size_t(bpp)) ? up[i - bpp] : 0;
            int v = src[i];
            switch (filter) {
            case 0: break;
            case 1: v += a; break;
            case 2: v += b; break;
            case 3: v += (a + b) / 2; break;
            case 4: v += paeth(a, b, c); break;
            default: corrupt(path, (stride + 1) * y, "bad PNG filter type");
            }
            cur[i] = std::uint8_t(v);
        }
    }

    std::vector<std::uint8_t> rgb(std::size_t(width) * height * 3);
    for (std::size_t a = 0; a < std::size_t(width) * height; ++a)
        for (int c = 0; c < 3; ++c)
            rgb[a * 3 + c] = pixels[a * bpp + (bpp == 1 ? 0 : c)];
    return from_rgb(width, height, rgb);
}

} // namespace

FeatureField load_image(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6')
        return load_ppm(path, bytes);
    if (bytes.size() >= 8 && bytes[0] == 0x89 && bytes[1] == 'P')
        return load_png(path, bytes);
    corrupt(path, 0, "unsupported image format (want PPM P6 or PNG)");
}

void save_ppm(const std::string& path, int width, int height,
              const std::vector<std::uint8_t>& rgb) {
    if (rgb.size() != std::size_t(width) * height * 3)
        throw std::invalid_argument("save_ppm: pixel buffer size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write file: " + path);
    out << "P6\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(rgb.data()), std::streamsize(rgb.size()));
}

Mat load_unaries(const std::string& path, int expected_n, int expected_m) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "UNR1", 4) != 0)
        corrupt(path, 0, "bad unary magic (want UNR1)");
    std::uint32_t n, m;
    std::memcpy(&n, &bytes[4], 4);
    std::memcpy(&m, &bytes[8], 4);
    if (expected_n >= 0 && int(n) != expected_n)
        throw std::runtime_error(path + ": unary pixel count " + std::to_string(n) +
                                 " does not match image pixel count " +
                                 std::to_string(expected_n));
    if (expected_m >= 0 && int(m) != expected_m)
        throw std::runtime_error(path + ": unary label count " + std::to_string(m) +
                                 " does not match expected " + std::to_string(expected_m));
    if (n < 1 || m < 2 || std::uint64_t(n) * m > (1ull << 31))
        corrupt(path, 4, "unary dimensions out of range");
    if (bytes.size() != 12 + std::size_t(n) * m * 4)
        corrupt(path, bytes.size(), "unary payload size mismatch");
    Mat u{int(n), int(m), {}};
    u.v.resize(std::size_t(n) * m);
    std::memcpy(u.data(), &bytes[12], std::size_t(n) * m * 4);
    return u;
}

void save_unaries(const std::string& path, const Mat& unaries) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write file: " + path);
    const std::uint32_t n = std::uint32_t(unaries.rows), m = std::uint32_t(unaries.cols);
    out.write("UNR1", 4);
    out.write(reinterpret_cast<const char*>(&n), 4);
    out.write(reinterpret_cast<const char*>(&m), 4);
    out.write(reinterpret_cast<const char*>(unaries.data()),
              std::streamsize(unaries.size() * 4));
}

void label_palette(int label, std::uint8_t rgb[3]) {
    // Bit-reversal colormap: bit j of the label id feeds bit (7-j) of the
    // channels in round-robin order.
    rgb[0] = rgb[1] = rgb[2] = 0;
    int id = label & 0xff;
    for (int j = 0; j < 8 && id; ++j, id >>= 3) {
        rgb[0] |= std::uint8_t(((id >> 0) & 1) << (7 - j));
        rgb[1] |= std::uint8_t(((id >> 1) & 1) << (7 - j));
        rgb[2] |= std::uint8_t(((id >> 2) & 1) << (7 - j));
    }
}

void save_label_ppm(const std::string& path, const LabelScores& integral, int width,
                    int height) {
    if (integral.rows != width * height)
        throw std::invalid_argument("save_label_ppm: dimensions mismatch");
    std::vector<std::uint8_t> rgb(std::size_t(integral.rows) * 3);
    const LabelScores rounded = argmax_round(integral);
    for (int a = 0; a < rounded.rows; ++a) {
        int label = 0;
        for (int i = 0; i < rounded.cols; ++i)
            if (rounded(a, i) == 1.f)
                label = i;
        label_palette(label, &rgb[std::size_t(a) * 3]);
    }
    save_ppm(path, width, height, rgb);
}

void save_label_idx(const std::string& path, const LabelScores& integral) {
    if (integral.cols > 256)
        throw std::invalid_argument("save_label_idx: more than 256 labels");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write file: " + path);
    const LabelScores rounded = argmax_round(integral);
    std::vector<std::uint8_t> idx(rounded.rows);
    for (int a = 0; a < rounded.rows; ++a)
        for (int i = 0; i < rounded.cols; ++i)
            if (rounded(a, i) == 1.f)
                idx[a] = std::uint8_t(i);
    out.write(reinterpret_cast<const char*>(idx.data()), std::streamsize(idx.size()));
}

Fixture make_fixture(int width, int height, int labels, std::uint64_t seed) {
    if (width < 2 || height < 2 || labels < 2)
        throw std::invalid_argument("make_fixture: degenerate dimensions");
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> noise(0.f, 0.8f);
    std::uniform_real_distribution<float> jitter(-6.f, 6.f);

    Fixture fx;
    std::vector<std::uint8_t> rgb(std::size_t(width) * height * 3);
    const int cell = std::max(8, width / 8);
    fx.unaries = Mat(width * height, labels);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const int a = y * width + x;
            // Color gradient plus a strong per-cell tint so the bilateral
            // kernel separates the checkerboard cells.
            const int cx = x / cell, cy = y / cell;
            const int pref = (cx + cy * 3) % labels;
            rgb[std::size_t(a) * 3 + 0] =
                std::uint8_t(std::clamp(160.f * x / (width - 1) + jitter(rng), 0.f, 255.f));
            rgb[std::size_t(a) * 3 + 1] =
                std::uint8_t(std::clamp(120.f * y / (height - 1) + 80.f * (pref & 1) + jitter(rng),
                                        0.f, 255.f));
            rgb[std::size_t(a) * 3 + 2] = std::uint8_t(
                std::clamp(30.f + 170.f * pref / (labels - 1) + jitter(rng), 0.f, 255.f));
            for (int i = 0; i < labels; ++i)
                fx.unaries(a, i) = (i == pref ? 0.f : 2.f) + noise(rng);
        }
    fx.image = from_rgb(width, height, rgb);
    return fx;
}

std::vector<GaussianKernel> fixture_kernels() {
    return {spatial_kernel(0.4f, 1.3f), bilateral_kernel(0.3f, 5.f, 20.f)};
}

} // namespace denselp
