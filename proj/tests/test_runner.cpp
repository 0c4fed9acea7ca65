#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "denselp/energy.h"
#include "denselp/io.h"
#include "denselp/pairwise.h"
#include "denselp/runner.h"

using namespace denselp;

namespace {

struct RunDir {
    std::filesystem::path base;

    RunDir() {
        base = std::filesystem::temp_directory_path() / "denselp_runner_test";
        std::filesystem::remove_all(base);
        std::filesystem::create_directories(base);
        const Fixture fx = make_fixture(24, 24, 4, 11);
        std::vector<std::uint8_t> rgb(std::size_t(fx.image.n) * 3);
        for (std::size_t i = 0; i < rgb.size(); ++i)
            rgb[i] = std::uint8_t(fx.image.colors[i]);
        save_ppm((base / "image.ppm").string(), fx.image.width, fx.image.height, rgb);
        save_unaries((base / "unaries.unr").string(), fx.unaries);
        std::ofstream cfg(base / "solver.conf");
        cfg << "lambda = 0.06\nouter_steps = 4\nfw_steps = 6\nlevels = 10\n"
            << "kernel = spatial weight=0.4 sigma=1.3\n"
            << "kernel = bilateral weight=0.3 sigma_spatial=5 sigma_color=20\n";
    }

    RunSpec spec(const std::string& solver, const std::string& out) const {
        RunSpec rs;
        rs.image_path = (base / "image.ppm").string();
        rs.unary_path = (base / "unaries.unr").string();
        rs.config_path = (base / "solver.conf").string();
        rs.solver = solver;
        rs.out_dir = (base / out).string();
        return rs;
    }
};

std::vector<std::string> trace_lines(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line))
        lines.push_back(line);
    return lines;
}

} // namespace

TEST_CASE("mf5 writes exactly five mf trace rows and the expected artifacts") {
    RunDir rd;
    const RunSpec rs = rd.spec("mf5", "out_mf5");
    CHECK(run(rs) == 0);
    int mf_rows = 0;
    for (const std::string& line : trace_lines(std::filesystem::path(rs.out_dir) / "trace.csv"))
        mf_rows += line.rfind("mf,", 0) == 0;
    CHECK(mf_rows == 5);
    CHECK(std::filesystem::exists(std::filesystem::path(rs.out_dir) / "labels.ppm"));
    CHECK(std::filesystem::exists(std::filesystem::path(rs.out_dir) / "labels.idx"));
    CHECK(std::filesystem::file_size(std::filesystem::path(rs.out_dir) / "labels.idx") == 24 * 24);
    CHECK(std::filesystem::exists(std::filesystem::path(rs.out_dir) / "summary.txt"));
}

TEST_CASE("summary energies equal the last trace row") {
    RunDir rd;
    const RunSpec rs = rd.spec("proxlp", "out_prox");
    CHECK(run(rs) == 0);
    const auto lines = trace_lines(std::filesystem::path(rs.out_dir) / "trace.csv");
    REQUIRE(lines.size() > 1);
    std::string last = lines.back();
    char phase[16];
    int k, t, active, uncertain;
    double wall, lp, ip;
    REQUIRE(std::sscanf(last.c_str(), "%15[^,],%d,%d,%lf,%lf,%lf,%d,%d", phase, &k, &t, &wall,
                        &lp, &ip, &active, &uncertain) == 8);

    std::ifstream sum(std::filesystem::path(rs.out_dir) / "summary.txt");
    std::string line;
    double sum_lp = 0, sum_ip = 0;
    while (std::getline(sum, line)) {
        std::sscanf(line.c_str(), "final_lp_energy: %lf", &sum_lp);
        std::sscanf(line.c_str(), "final_ip_energy: %lf", &sum_ip);
    }
    CHECK(sum_lp == lp);
    CHECK(sum_ip == ip);
}

TEST_CASE("init=file reports that file's LP energy in the first trace row") {
    RunDir rd;
    const LabelScores y0 = [] {
        LabelScores y(24 * 24, 4, 0.f);
        for (int a = 0; a < y.rows; ++a) {
            y(a, a % 4) = 0.7f;
            y(a, (a + 1) % 4) = 0.3f;
        }
        return y;
    }();
    const auto init_path = rd.base / "init.unr";
    save_unaries(init_path.string(), y0);

    RunSpec rs = rd.spec("proxlp", "out_init");
    rs.init = "file:" + init_path.string();
    CHECK(run(rs) == 0);

    const auto lines = trace_lines(std::filesystem::path(rs.out_dir) / "trace.csv");
    REQUIRE(lines.size() > 1);
    char phase[16];
    int k, t, active, uncertain;
    double wall, lp, ip;
    REQUIRE(std::sscanf(lines[1].c_str(), "%15[^,],%d,%d,%lf,%lf,%lf,%d,%d", phase, &k, &t, &wall,
                        &lp, &ip, &active, &uncertain) == 8);
    CHECK(std::string(phase) == "init");

    const RunConfig rc = load_config(rs.config_path);
    const FeatureField image = load_image(rs.image_path);
    EnergyModel model;
    model.unaries = load_unaries(rs.unary_path);
    model.kernels = rc.kernels;
    const LatticeOperator op(image, model.kernels);
    const double expect = lp_energy(model, op, y0, rc.solver.levels);
    CHECK(std::abs(lp - expect) <= 1e-6 * std::abs(expect) + 5e-4); // six rendered digits
}

TEST_CASE("runner failures surface as exceptions for the CLI exit path") {
    RunDir rd;
    RunSpec rs = rd.spec("proxlp", "out_err");
    rs.solver = "mystery";
    CHECK_THROWS(run(rs));
    rs = rd.spec("proxlp", "out_err");
    rs.unary_path = (rd.base / "missing.unr").string();
    CHECK_THROWS(run(rs));

    // unary pixel-count mismatch names both counts
    Mat wrong(7, 4, 0.1f);
    save_unaries((rd.base / "wrong.unr").string(), wrong);
    rs = rd.spec("proxlp", "out_err");
    rs.unary_path = (rd.base / "wrong.unr").string();
    try {
        run(rs);
        FAIL("expected a mismatch error");
    } catch (const std::exception& e) {
        const std::string what = e.what();
        CHECK(what.find("7") != std::string::npos);
        CHECK(what.find("576") != std::string::npos);
    }
}

TEST_CASE("bench harness writes rows with oracle columns while guarded") {
    RunDir rd;
    BenchSpec bs;
    bs.max_n = 4096;
    bs.labels = 2;
    bs.levels = 10;
    bs.kernel = "spatial";
    bs.repeats = 1;
    bs.out_csv = (rd.base / "bench.csv").string();
    CHECK(bench_filter(bs) == 0);
    const auto lines = trace_lines(rd.base / "bench.csv");
    REQUIRE(lines.size() >= 3);
    CHECK(lines[0] == "n,m,d,t_ordered_ms,t_naive_ms,speedup,max_rel_err");
    int n, m, d;
    double t_o, t_n, speedup, err;
    REQUIRE(std::sscanf(lines[1].c_str(), "%d,%d,%d,%lf,%lf,%lf,%lf", &n, &m, &d, &t_o, &t_n,
                        &speedup, &err) == 7);
    CHECK(n == 1024);
    CHECK(d == 2);
    CHECK(err < 0.10);
    // crossover: by the largest in-guard size the linear filter wins outright
    REQUIRE(std::sscanf(lines.back().c_str(), "%d,%d,%d,%lf,%lf,%lf,%lf", &n, &m, &d, &t_o, &t_n,
                        &speedup, &err) == 7);
    CHECK(n == 4096);
    CHECK(speedup > 1.0);
}

TEST_CASE("proxlp run keeps the traced LP column non-increasing") {
    RunDir rd;
    const RunSpec rs = rd.spec("proxlp", "out_mono");
    CHECK(run(rs) == 0);
    double prev = std::numeric_limits<double>::infinity();
    bool first = true;
    for (const std::string& line : trace_lines(std::filesystem::path(rs.out_dir) / "trace.csv")) {
        char phase[16];
        int k, t, active, uncertain;
        double wall, lp, ip;
        if (std::sscanf(line.c_str(), "%15[^,],%d,%d,%lf,%lf,%lf,%d,%d", phase, &k, &t, &wall,
                        &lp, &ip, &active, &uncertain) != 8)
            continue;
        if (!first)
            CHECK(lp <= prev + 1e-3 * std::abs(prev));
        prev = lp;
        first = false;
    }
    CHECK(!first);
}
