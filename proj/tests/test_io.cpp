#include <doctest.h>

#include <zlib.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "denselp/io.h"
#include "denselp/runner.h"

using namespace denselp;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>());
}

void be32(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back(std::uint8_t(x >> 24));
    v.push_back(std::uint8_t(x >> 16));
    v.push_back(std::uint8_t(x >> 8));
    v.push_back(std::uint8_t(x));
}

std::uint32_t crc_of(const std::vector<std::uint8_t>& chunk, std::size_t from) {
    return std::uint32_t(crc32(0, chunk.data() + from, uInt(chunk.size() - from)));
}

// Minimal in-memory PNG writer for round-trip tests (8-bit RGB, filter 0).
std::vector<std::uint8_t> make_png(int w, int h, const std::vector<std::uint8_t>& rgb) {
    std::vector<std::uint8_t> raw;
    for (int y = 0; y < h; ++y) {
        raw.push_back(0);
        raw.insert(raw.end(), rgb.begin() + std::size_t(y) * w * 3,
                   rgb.begin() + std::size_t(y + 1) * w * 3);
    }
    uLongf bound = compressBound(uLong(raw.size()));
    std::vector<std::uint8_t> packed(bound);
    REQUIRE(compress(packed.data(), &bound, raw.data(), uLong(raw.size())) == Z_OK);
    packed.resize(bound);

    std::vector<std::uint8_t> png = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    auto chunk = [&](const char* type, const std::vector<std::uint8_t>& data) {
        be32(png, std::uint32_t(data.size()));
        const std::size_t start = png.size();
        png.insert(png.end(), type, type + 4);
        png.insert(png.end(), data.begin(), data.end());
        std::vector<std::uint8_t> body(png.begin() + start, png.end());
        be32(png, crc_of(body, 0));
    };
    std::vector<std::uint8_t> ihdr;
    be32(ihdr, std::uint32_t(w));
    be32(ihdr, std::uint32_t(h));
    ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0}); // 8-bit RGB, no interlace
    chunk("IHDR", ihdr);
    chunk("IDAT", packed);
    chunk("IEND", {});
    return png;
}

} // namespace

TEST_CASE("PPM: tiny white image and round trip") {
    const auto p = temp_file("denselp_t1.ppm");
    write_bytes(p, {'P', '6', '\n', '2', ' ', '1', '\n', '2', '5', '5', '\n', 255, 255, 255, 255,
                    255, 255});
    const FeatureField f = load_image(p.string());
    CHECK(f.n == 2);
    CHECK(f.width == 2);
    CHECK(f.height == 1);
    for (float c : f.colors)
        CHECK(c == 255.f);
    CHECK(f.positions[0] == 0.f);
    CHECK(f.positions[2] == 1.f);

    std::vector<std::uint8_t> rgb = {1, 2, 3, 4, 5, 6};
    save_ppm(p.string(), 2, 1, rgb);
    const FeatureField g = load_image(p.string());
    CHECK(g.colors[0] == 1.f);
    CHECK(g.colors[5] == 6.f);
}

TEST_CASE("PPM: corrupt header errors name the byte offset") {
    const auto p = temp_file("denselp_t2.ppm");
    write_bytes(p, {'P', '6', '\n', 'x'});
    try {
        load_image(p.string());
        FAIL("expected a load error");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("byte") != std::string::npos);
    }
    write_bytes(p, {'P', '6', '\n', '2', ' ', '2', '\n', '2', '5', '5', '\n', 9});
    CHECK_THROWS(load_image(p.string())); // truncated pixel data
}

TEST_CASE("PNG: synthetic image round trips through the reader") {
    const int w = 7, h = 5;
    std::vector<std::uint8_t> rgb(std::size_t(w) * h * 3);
    for (std::size_t i = 0; i < rgb.size(); ++i)
        rgb[i] = std::uint8_t((i * 37 + 11) & 0xff);
    const auto p = temp_file("denselp_t3.png");
    write_bytes(p, make_png(w, h, rgb));
    const FeatureField f = load_image(p.string());
    CHECK(f.width == w);
    CHECK(f.height == h);
    for (std::size_t i = 0; i < rgb.size(); ++i)
        CHECK(f.colors[i] == float(rgb[i]));

    SUBCASE("bad signature is rejected with an offset") {
        auto bytes = make_png(w, h, rgb);
        bytes[1] = 'X';
        write_bytes(p, bytes);
        CHECK_THROWS(load_image(p.string()));
    }
}

TEST_CASE("unary file: header, payload and byte-exact round trip") {
    Mat u(3, 2);
    for (std::size_t i = 0; i < u.size(); ++i)
        u.v[i] = float(i) * 0.25f - 0.5f;
    const auto p = temp_file("denselp_t4.unr");
    save_unaries(p.string(), u);

    const Mat back = load_unaries(p.string());
    CHECK(back.rows == 3);
    CHECK(back.cols == 2);
    CHECK(back.v == u.v);

    const auto bytes = read_bytes(p);
    CHECK(bytes.size() == 12 + 3 * 2 * 4);
    CHECK(std::memcmp(bytes.data(), "UNR1", 4) == 0);

    save_unaries(p.string(), back);
    CHECK(read_bytes(p) == bytes); // save -> load -> save is the identity

    CHECK_THROWS_WITH_AS(load_unaries(p.string(), 7), doctest::Contains("7"),
                         std::runtime_error);
    CHECK_THROWS(load_unaries(p.string(), 3, 5));

    auto corrupt = bytes;
    corrupt[0] = 'X';
    write_bytes(p, corrupt);
    CHECK_THROWS(load_unaries(p.string()));
}

TEST_CASE("fixture generation is seed-stable") {
    const Fixture a = make_fixture(16, 16, 4, 42);
    const Fixture b = make_fixture(16, 16, 4, 42);
    CHECK(a.unaries.v == b.unaries.v);
    CHECK(a.image.colors == b.image.colors);
    const Fixture c = make_fixture(16, 16, 4, 43);
    CHECK(a.unaries.v != c.unaries.v);

    // golden checksum: ingestion of the 64x64 fixture stays stable
    const Fixture big = make_fixture(64, 64, 4, 0);
    std::uint64_t hash = 1469598103934665603ull;
    for (float v : big.image.colors) {
        hash ^= std::uint64_t(v);
        hash *= 1099511628211ull;
    }
    for (float v : big.unaries.v) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        hash ^= bits;
        hash *= 1099511628211ull;
    }
    CHECK(hash == 10671056009984924124ull);
}

TEST_CASE("label outputs: palette render and index bytes") {
    LabelScores y(4, 3, 0.f);
    y(0, 0) = y(1, 1) = y(2, 2) = y(3, 1) = 1.f;
    const auto ppm = temp_file("denselp_t5.ppm");
    const auto idx = temp_file("denselp_t5.idx");
    save_label_ppm(ppm.string(), y, 2, 2);
    save_label_idx(idx.string(), y);
    CHECK(read_bytes(idx) == std::vector<std::uint8_t>({0, 1, 2, 1}));

    const FeatureField rendered = load_image(ppm.string());
    std::uint8_t rgb0[3], rgb1[3];
    label_palette(0, rgb0);
    label_palette(1, rgb1);
    CHECK(rendered.colors[0] == float(rgb0[0]));
    CHECK(rendered.colors[3] == float(rgb1[0]));
    CHECK(rendered.colors[4] == float(rgb1[1]));

    std::uint8_t a[3], b[3];
    label_palette(5, a);
    label_palette(5, b);
    CHECK(std::memcmp(a, b, 3) == 0); // deterministic palette
}

TEST_CASE("trace CSV parses back losslessly") {
    ProxTrace trace;
    TraceRow r;
    r.phase = "prox";
    r.k = 0;
    r.t = 4;
    r.wall_ms = 12.5;
    r.lp_energy = 1234.5625;
    r.ip_energy = 1250.25;
    r.active_labels = 4;
    r.uncertain_pixels = 17;
    trace.rows.push_back(r);
    TraceRow inner = r;
    inner.lp_energy = inner.ip_energy = std::numeric_limits<double>::quiet_NaN();
    trace.rows.push_back(inner); // inner rows carry only the dual, not written

    const auto p = temp_file("denselp_t6.csv");
    write_trace_csv(p.string(), trace);

    std::ifstream in(p);
    std::string header, line;
    std::getline(in, header);
    CHECK(header == "phase,k,t,wall_ms,lp_energy,ip_energy,active_labels,uncertain_pixels");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        char phase[16];
        int k, t, active, uncertain;
        double wall, lp, ip;
        CHECK(std::sscanf(line.c_str(), "%15[^,],%d,%d,%lf,%lf,%lf,%d,%d", phase, &k, &t, &wall,
                          &lp, &ip, &active, &uncertain) == 8);
        CHECK(std::string(phase) == "prox");
        CHECK(k == 0);
        CHECK(t == 4);
        CHECK(lp == 1234.56); // energies render at six significant digits
        CHECK(ip == 1250.25);
        CHECK(active == 4);
        CHECK(uncertain == 17);
    }
    CHECK(rows == 1);
}
