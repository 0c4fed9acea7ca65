#include "denselp/model.h"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace denselp {

bool is_feasible(const LabelScores& y, double tol) {
    if (y.rows < 1 || y.cols < 2)
        return false;
    for (int a = 0; a < y.rows; ++a) {
        double sum = 0.0;
        for (int i = 0; i < y.cols; ++i) {
            float s = y(a, i);
            if (!(s >= 0.f) || !std::isfinite(s))
                return false;
            sum += s;
        }
        if (std::abs(sum - 1.0) > tol)
            return false;
    }
    return true;
}

bool is_integral(const LabelScores& y) {
    if (!is_feasible(y))
        return false;
    for (float s : y.v)
        if (s != 0.f && s != 1.f)
            return false;
    return true;
}

LabelScores argmax_round(const LabelScores& y) {
    LabelScores out(y.rows, y.cols, 0.f);
    for (int a = 0; a < y.rows; ++a) {
        const float* row = y.row(a);
        int best = 0;
        for (int i = 1; i < y.cols; ++i)
            if (row[i] > row[best])
                best = i;
        out(a, best) = 1.f;
    }
    return out;
}

void GaussianKernel::validate() const {
    if (weight < 0.f)
        throw std::invalid_argument("kernel weight must be nonnegative");
    if ((int)sigmas.size() != dim())
        throw std::invalid_argument("kernel sigma count does not match feature dimension");
    for (float s : sigmas)
        if (!(s > 0.f))
            throw std::invalid_argument("kernel sigma must be strictly positive");
}

GaussianKernel spatial_kernel(float weight, float sigma) {
    GaussianKernel k;
    k.kind = FeatureKind::Spatial;
    k.weight = weight;
    k.sigmas = {sigma, sigma};
    k.validate();
    return k;
}

GaussianKernel bilateral_kernel(float weight, float sigma_spatial, float sigma_color) {
    GaussianKernel k;
    k.kind = FeatureKind::Bilateral;
    k.weight = weight;
    k.sigmas = {sigma_spatial, sigma_spatial, sigma_color, sigma_color, sigma_color};
    k.validate();
    return k;
}

Mat make_features(const FeatureField& image, const GaussianKernel& kernel) {
    kernel.validate();
    const int d = kernel.dim();
    Mat f(image.n, d);
    for (int a = 0; a < image.n; ++a) {
        float* row = f.row(a);
        row[0] = image.positions[2 * a + 0] / kernel.sigmas[0];
        row[1] = image.positions[2 * a + 1] / kernel.sigmas[1];
        if (kernel.kind == FeatureKind::Bilateral)
            for (int c = 0; c < 3; ++c)
                row[2 + c] = image.colors[3 * a + c] / kernel.sigmas[2 + c];
    }
    return f;
}

float EnergyModel::kernel_weight_sum() const {
    float w = 0.f;
    for (const auto& k : kernels)
        w += k.weight;
    return w;
}

void SolverConfig::validate() const {
    if (!(lambda > 0.f))
        throw std::invalid_argument("lambda must be positive");
    if (outer_steps < 1 || fw_steps < 1)
        throw std::invalid_argument("outer_steps and fw_steps must be positive");
    if (levels < 2)
        throw std::invalid_argument("levels must be at least 2");
    if (!(label_prune_threshold > 0.f && label_prune_threshold < 1.f))
        throw std::invalid_argument("label_prune_threshold must lie in (0,1)");
    if (!(uncertain_threshold > 0.f && uncertain_threshold < 1.f))
        throw std::invalid_argument("uncertain_threshold must lie in (0,1)");
    if (!(uncertain_fraction_cap > 0.f && uncertain_fraction_cap <= 1.f))
        throw std::invalid_argument("uncertain_fraction_cap must lie in (0,1]");
    if (qp_max_iters < 1 || !(qp_tol > 0.0))
        throw std::invalid_argument("qp_max_iters must be positive and qp_tol > 0");
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// "spatial weight=2.25 sigma=3.5" or
// "bilateral weight=1.7 sigma_spatial=31.2 sigma_color=7.9"
GaussianKernel parse_kernel_line(const std::string& value, int line_no) {
    std::istringstream in(value);
    std::string kind;
    in >> kind;
    float weight = -1.f, sigma = -1.f, sigma_spatial = -1.f, sigma_color = -1.f;
    std::string tok;
    while (in >> tok) {
        std::size_t eq = tok.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected name=value in kernel spec, got '" + tok + "'");
        std::string name = tok.substr(0, eq);
        float val = std::stof(tok.substr(eq + 1));
        if (name == "weight")
            weight = val;
        else if (name == "sigma")
            sigma = val;
        else if (name == "sigma_spatial")
            sigma_spatial = val;
        else if (name == "sigma_color")
            sigma_color = val;
        else
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": unknown kernel parameter '" + name + "'");
    }
    if (weight < 0.f)
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": kernel needs a nonnegative weight");
    if (kind == "spatial") {
        if (!(sigma > 0.f))
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": spatial kernel needs sigma > 0");
        return spatial_kernel(weight, sigma);
    }
    if (kind == "bilateral") {
        if (!(sigma_spatial > 0.f) || !(sigma_color > 0.f))
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": bilateral kernel needs sigma_spatial > 0 and sigma_color > 0");
        return bilateral_kernel(weight, sigma_spatial, sigma_color);
    }
    throw std::invalid_argument("config line " + std::to_string(line_no) +
                                ": unknown kernel kind '" + kind + "'");
}

} // namespace

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        SolverConfig& s = cfg.solver;
        if (key == "kernel")
            cfg.kernels.push_back(parse_kernel_line(value, line_no));
        else if (key == "lambda")
            s.lambda = std::stof(value);
        else if (key == "outer_steps")
            s.outer_steps = std::stoi(value);
        else if (key == "fw_steps")
            s.fw_steps = std::stoi(value);
        else if (key == "levels")
            s.levels = std::stoi(value);
        else if (key == "label_prune_threshold")
            s.label_prune_threshold = std::stof(value);
        else if (key == "uncertain_threshold")
            s.uncertain_threshold = std::stof(value);
        else if (key == "uncertain_fraction_cap")
            s.uncertain_fraction_cap = std::stof(value);
        else if (key == "qp_max_iters")
            s.qp_max_iters = std::stoi(value);
        else if (key == "qp_tol")
            s.qp_tol = std::stod(value);
        else if (key == "accel_switch_step")
            s.accel_switch_step = std::stoi(value);
        else if (key == "mf_iters")
            s.mf_iters = std::stoi(value);
        else if (key == "sg_iters")
            s.sg_iters = std::stoi(value);
        else if (key == "sg_step0")
            s.sg_step0 = std::stof(value);
        else
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": unknown key '" + key + "'");
    }
    cfg.solver.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

} // namespace denselp
