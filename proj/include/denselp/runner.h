#pragma once

#include <cstdint>
#include <string>

#include "denselp/io.h"
#include "denselp/proxlp.h"

namespace denselp {

struct RunSpec {
    std::string image_path;
    std::string unary_path;
    std::string config_path;
    std::string solver = "proxlp"; // mf | mf5 | sglp | proxlp | proxlp_l | proxlp_acc
    std::string init = "uniform";  // uniform | mf | file:<path>
    std::string out_dir = ".";
    std::uint64_t seed = 0;
};

// Loads inputs, runs the requested solver and writes labels.ppm, labels.idx,
// trace.csv and summary.txt into out_dir. Returns the process exit code.
int run(const RunSpec& spec);

struct BenchSpec {
    int max_n = 100000;
    int labels = 2;
    int levels = 10;
    std::string kernel = "bilateral"; // spatial (d=2) | bilateral (d=5)
    int repeats = 5;
    std::string out_csv;
    std::uint64_t seed = 0;
};

// Conditional-gradient timing rows over doubling point counts, with the
// O(n^2) oracle columns filled while n stays inside the naive guard.
int bench_filter(const BenchSpec& spec);

void write_trace_csv(const std::string& path, const ProxTrace& trace);

} // namespace denselp
