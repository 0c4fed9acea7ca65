#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>

#include "denselp/io.h"
#include "denselp/runner.h"

int main(int argc, char** argv) {
    CLI::App app{"Dense-CRF LP inference via proximal minimization and "
                 "ordering-constrained lattice filtering"};
    app.require_subcommand(1);

    denselp::RunSpec rs;
    CLI::App* solve = app.add_subcommand("solve", "Run a solver on an image + unary pair");
    solve->add_option("--image", rs.image_path, "Input image (PPM P6 or PNG)")
        ->required()
        ->check(CLI::ExistingFile);
    solve->add_option("--unaries", rs.unary_path, "Unary potentials (UNR1)")
        ->required()
        ->check(CLI::ExistingFile);
    solve->add_option("--config", rs.config_path, "Solver configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    solve->add_option("--solver", rs.solver, "mf | mf5 | sglp | proxlp | proxlp_l | proxlp_acc");
    solve->add_option("--init", rs.init, "uniform | mf | file:<path>");
    solve->add_option("--out", rs.out_dir, "Output directory")->required();
    solve->add_option("--seed", rs.seed, "Deterministic seed recorded in summary.txt");

    denselp::BenchSpec bs;
    CLI::App* bench = app.add_subcommand("bench", "Filter benchmark: timing and oracle fidelity");
    bench->add_option("--max-n", bs.max_n, "Largest point count (doubling from 1024)");
    bench->add_option("--labels", bs.labels, "Label channels per conditional gradient");
    bench->add_option("--levels", bs.levels, "Discretization levels H");
    bench->add_option("--kernel", bs.kernel, "spatial | bilateral");
    bench->add_option("--repeats", bs.repeats, "Timing repetitions per size");
    bench->add_option("--out", bs.out_csv, "Output CSV path")->required();
    bench->add_option("--seed", bs.seed, "Bench instance seed");

    int fw = 96, fh = 96, fm = 4;
    std::uint64_t fseed = 0;
    std::string fdir;
    CLI::App* fixture =
        app.add_subcommand("make-fixture", "Write a synthetic image/unary/config triple");
    fixture->add_option("--width", fw);
    fixture->add_option("--height", fh);
    fixture->add_option("--labels", fm);
    fixture->add_option("--seed", fseed);
    fixture->add_option("--out", fdir, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed())
            return denselp::run(rs);
        if (bench->parsed())
            return denselp::bench_filter(bs);
        if (fixture->parsed()) {
            const denselp::Fixture fx = denselp::make_fixture(fw, fh, fm, fseed);
            std::filesystem::create_directories(fdir);
            const std::filesystem::path dir(fdir);
            std::vector<std::uint8_t> rgb(std::size_t(fx.image.n) * 3);
            for (std::size_t i = 0; i < rgb.size(); ++i)
                rgb[i] = std::uint8_t(fx.image.colors[i]);
            denselp::save_ppm((dir / "image.ppm").string(), fx.image.width, fx.image.height, rgb);
            denselp::save_unaries((dir / "unaries.unr").string(), fx.unaries);
            std::ofstream cfg((dir / "solver.conf").string());
            cfg << "# synthetic fixture defaults\n"
                << "lambda = 0.06\nouter_steps = 10\nfw_steps = 8\nlevels = 10\n"
                << "accel_switch_step = 5\n"
                << "kernel = spatial weight=0.4 sigma=1.3\n"
                << "kernel = bilateral weight=0.3 sigma_spatial=5 sigma_color=20\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
