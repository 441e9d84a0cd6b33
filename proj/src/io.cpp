#include "mfg/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

namespace mfg {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void check_keys(const json& obj, const char* block,
                std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) { ok = true; break; }
        if (!ok)
            throw std::runtime_error(std::string("config: unknown key '") + it.key() +
                                     "' in block '" + block + "'");
    }
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    json j;
    in >> j;
    return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string expect_header(std::istream& in, const std::string& schema,
                          const std::filesystem::path& path) {
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("empty file: " + path.string());
    if (line != "# schema: " + schema)
        throw std::runtime_error("unsupported schema in " + path.string() + ": " + line);
    std::getline(in, line);  // column names
    return line;
}

}  // namespace

RunConfig RunConfig::load(const std::filesystem::path& path) {
    json j = read_json(path);
    check_keys(j, "root", {"grid", "model", "solver", "inverse", "scenario"});
    RunConfig c;
    if (j.contains("grid")) {
        const json& b = j["grid"];
        check_keys(b, "grid",
                   {"x_min", "x_max", "t_max", "h_space", "h_time", "inner_lo", "inner_hi"});
        c.x_min = b.value("x_min", c.x_min);
        c.x_max = b.value("x_max", c.x_max);
        c.t_max = b.value("t_max", c.t_max);
        c.h_space = b.value("h_space", c.h_space);
        c.h_time = b.value("h_time", c.h_time);
        c.inner_lo = b.value("inner_lo", c.inner_lo);
        c.inner_hi = b.value("inner_hi", c.inner_hi);
    }
    if (j.contains("model")) {
        const json& b = j["model"];
        check_keys(b, "model", {"nu", "kappa0", "eps1", "eps2"});
        c.nu = b.value("nu", c.nu);
        c.kappa0_value = b.value("kappa0", c.kappa0_value);
        c.eps1 = b.value("eps1", c.eps1);
        c.eps2 = b.value("eps2", c.eps2);
    }
    if (j.contains("solver")) {
        const json& b = j["solver"];
        check_keys(b, "solver",
                   {"alpha_rho", "alpha_m", "alpha_phi", "alpha_a", "e_tol", "e_tol_data",
                    "max_iter"});
        c.steps.alpha_rho = b.value("alpha_rho", c.steps.alpha_rho);
        c.steps.alpha_m = b.value("alpha_m", c.steps.alpha_m);
        c.steps.alpha_phi = b.value("alpha_phi", c.steps.alpha_phi);
        c.steps.alpha_a = b.value("alpha_a", c.steps.alpha_a);
        c.e_tol = b.value("e_tol", c.e_tol);
        c.e_tol_data = b.value("e_tol_data", c.e_tol_data);
        c.max_iter = b.value("max_iter", c.max_iter);
    }
    if (j.contains("inverse")) {
        const json& b = j["inverse"];
        check_keys(b, "inverse",
                   {"gamma_kappa", "gamma_mu", "alpha_kappa", "alpha_mu", "alpha_lambda",
                    "lambda_leak", "alpha_lambda_mu", "lambda_leak_mu", "n_max",
                    "mask_band_lo", "mask_band_hi", "psi_sigma_cells", "psi_half",
                    "checkpoint_stride"});
        c.gamma_kappa = b.value("gamma_kappa", c.gamma_kappa);
        c.gamma_mu = b.value("gamma_mu", c.gamma_mu);
        c.alpha_kappa = b.value("alpha_kappa", c.alpha_kappa);
        c.alpha_mu = b.value("alpha_mu", c.alpha_mu);
        c.alpha_lambda = b.value("alpha_lambda", c.alpha_lambda);
        c.lambda_leak = b.value("lambda_leak", c.lambda_leak);
        c.alpha_lambda_mu = b.value("alpha_lambda_mu", c.alpha_lambda_mu);
        c.lambda_leak_mu = b.value("lambda_leak_mu", c.lambda_leak_mu);
        c.n_max = b.value("n_max", c.n_max);
        c.mask_band_lo = b.value("mask_band_lo", c.mask_band_lo);
        c.mask_band_hi = b.value("mask_band_hi", c.mask_band_hi);
        c.psi_sigma_cells = b.value("psi_sigma_cells", c.psi_sigma_cells);
        c.psi_half = b.value("psi_half", c.psi_half);
        c.checkpoint_stride = b.value("checkpoint_stride", c.checkpoint_stride);
    }
    if (j.contains("scenario")) {
        const json& b = j["scenario"];
        check_keys(b, "scenario", {"example_id", "event_count", "eps_n", "seed"});
        c.example_id = b.value("example_id", c.example_id);
        c.event_count = b.value("event_count", c.event_count);
        c.eps_n = b.value("eps_n", c.eps_n);
        c.seed = b.value("seed", c.seed);
    }
    c.validate();
    return c;
}

void RunConfig::validate() const {
    auto req = [](bool ok, const char* what) {
        if (!ok) throw std::runtime_error(std::string("config: ") + what);
    };
    req(x_max > x_min, "x_max must exceed x_min");
    req(t_max > 0 && h_space > 0 && h_time > 0, "grid steps must be positive");
    req(inner_lo > x_min && inner_hi < x_max && inner_hi > inner_lo,
        "inner box must nest strictly inside the domain");
    req(nu > 0, "nu must be positive");
    req(kappa0_value >= eps1, "kappa0 below the floor eps1");
    req(eps2 > 0, "eps2 must be positive");
    req(steps.alpha_rho > 0 && steps.alpha_m > 0 && steps.alpha_phi > 0 &&
            steps.alpha_a > 0,
        "solver step sizes must be positive");
    req(e_tol > 0 && e_tol_data > 0 && max_iter > 0,
        "solver tolerance/iterations must be positive");
    req(gamma_kappa >= 0 && gamma_mu >= 0, "regularization weights must be nonnegative");
    req(alpha_kappa > 0 && alpha_mu > 0 && alpha_lambda > 0 && alpha_lambda_mu > 0,
        "inverse step sizes must be positive");
    req(lambda_leak >= 0 && lambda_leak < 1 && lambda_leak_mu >= 0 && lambda_leak_mu < 1,
        "lambda leaks must be in [0, 1)");
    req(n_max >= 0 && checkpoint_stride > 0, "inverse loop bounds must be positive");
    req(mask_band_hi > mask_band_lo && mask_band_lo >= 0, "mask band must be ordered");
    req(psi_sigma_cells > 0 && psi_half > 0, "psi parameters must be positive");
    req(example_id >= 1 && example_id <= 3, "example_id must be 1..3");
    req(event_count > 0, "event_count must be positive");
    req(eps_n >= 0, "eps_n must be nonnegative");
}

std::string RunConfig::to_json() const {
    json j;
    j["grid"] = {{"x_min", x_min},       {"x_max", x_max},   {"t_max", t_max},
                 {"h_space", h_space},   {"h_time", h_time}, {"inner_lo", inner_lo},
                 {"inner_hi", inner_hi}};
    j["model"] = {{"nu", nu}, {"kappa0", kappa0_value}, {"eps1", eps1}, {"eps2", eps2}};
    j["solver"] = {{"alpha_rho", steps.alpha_rho}, {"alpha_m", steps.alpha_m},
                   {"alpha_phi", steps.alpha_phi}, {"alpha_a", steps.alpha_a},
                   {"e_tol", e_tol},               {"e_tol_data", e_tol_data},
                   {"max_iter", max_iter}};
    j["inverse"] = {{"gamma_kappa", gamma_kappa},
                    {"gamma_mu", gamma_mu},
                    {"alpha_kappa", alpha_kappa},
                    {"alpha_mu", alpha_mu},
                    {"alpha_lambda", alpha_lambda},
                    {"lambda_leak", lambda_leak},
                    {"alpha_lambda_mu", alpha_lambda_mu},
                    {"lambda_leak_mu", lambda_leak_mu},
                    {"n_max", n_max},
                    {"mask_band_lo", mask_band_lo},
                    {"mask_band_hi", mask_band_hi},
                    {"psi_sigma_cells", psi_sigma_cells},
                    {"psi_half", psi_half},
                    {"checkpoint_stride", checkpoint_stride}};
    j["scenario"] = {{"example_id", example_id},
                     {"event_count", event_count},
                     {"eps_n", eps_n},
                     {"seed", seed}};
    return j.dump(2);
}

SpaceTimeGrid RunConfig::make_grid() const {
    return SpaceTimeGrid::make(x_min, x_max, t_max, h_space, h_time, inner_lo, inner_hi);
}

ForwardOptions RunConfig::forward_options() const {
    ForwardOptions opt;
    opt.e_tol = e_tol;
    opt.max_iter = max_iter;
    opt.steps = steps;
    return opt;
}

ForwardOptions RunConfig::data_options() const {
    ForwardOptions opt = forward_options();
    opt.e_tol = e_tol_data;
    return opt;
}

InversionOptions RunConfig::inversion_options() const {
    InversionOptions opt;
    opt.n_max = n_max;
    opt.forward = data_options();
    opt.alpha_lambda = alpha_lambda;
    opt.lambda_leak = lambda_leak;
    opt.alpha_lambda_mu = alpha_lambda_mu;
    opt.lambda_leak_mu = lambda_leak_mu;
    opt.checkpoint_stride = checkpoint_stride;
    opt.mask_band_lo = mask_band_lo;
    opt.mask_band_hi = mask_band_hi;
    opt.psi_sigma_cells = psi_sigma_cells;
    opt.psi_half = psi_half;
    return opt;
}

void save_event(const std::filesystem::path& path, const EventData& ev,
                const SpaceTimeGrid& g) {
    json j;
    j["schema"] = "event v1";
    j["nx"] = g.nx;
    j["ny"] = g.ny;
    j["grid_hash"] = g.hash();
    j["rho0"] = ev.rho0.v;
    j["g"] = ev.g.v;
    write_text(path, j.dump());
}

EventData load_event(const std::filesystem::path& path, const SpaceTimeGrid& g) {
    json j = read_json(path);
    if (j.value("schema", "") != "event v1")
        throw std::runtime_error("unsupported event schema in " + path.string());
    if (j.value("nx", 0) != g.nx || j.value("ny", 0) != g.ny)
        throw std::runtime_error("event grid mismatch in " + path.string());
    EventData ev;
    ev.rho0 = SpatialField(g);
    ev.g = SpatialField(g);
    ev.rho0.v = j["rho0"].get<std::vector<double>>();
    ev.g.v = j["g"].get<std::vector<double>>();
    if (ev.rho0.v.size() != g.n_space() || ev.g.v.size() != g.n_space())
        throw std::runtime_error("event field size mismatch in " + path.string());
    return ev;
}

void save_trace(const std::filesystem::path& path, const BoundaryTrace& tr,
                const BoundaryOps& bops, const SpaceTimeGrid& g) {
    std::ostringstream out;
    out << "# schema: trace v1\n";
    out << "t_index,node_index,x,y,rho,flux\n";
    for (int t = 0; t < tr.nt; ++t) {
        for (int b = 0; b < tr.nb; ++b) {
            const BoundaryNode& nd = bops.nodes()[b];
            out << t << ',' << b << ',' << fmt(g.x(nd.i)) << ',' << fmt(g.y(nd.j)) << ','
                << fmt(tr.rho(t, b)) << ',' << fmt(tr.flux(t, b)) << '\n';
        }
    }
    write_text(path, out.str());
}

BoundaryTrace load_trace(const std::filesystem::path& path, int nb_expected) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    expect_header(in, "trace v1", path);
    std::vector<double> rho, flux;
    std::string line;
    int max_t = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        int t, b;
        double x, y, r, f;
        if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf,%lf", &t, &b, &x, &y, &r, &f) != 6)
            throw std::runtime_error("malformed trace row in " + path.string() + ": " + line);
        rho.push_back(r);
        flux.push_back(f);
        max_t = std::max(max_t, t);
    }
    if (nb_expected <= 0 || rho.size() % nb_expected != 0 ||
        static_cast<int>(rho.size()) != (max_t + 1) * nb_expected)
        throw std::runtime_error("trace shape mismatch in " + path.string());
    BoundaryTrace tr(max_t + 1, nb_expected);
    tr.rho_trace = std::move(rho);
    tr.flux_trace = std::move(flux);
    return tr;
}

void save_manifest(const std::filesystem::path& path, const RunConfig& cfg,
                   const SpaceTimeGrid& g,
                   const std::vector<std::pair<std::string, std::string>>& extras) {
    json j;
    j["schema"] = "manifest v1";
    j["config"] = json::parse(cfg.to_json());
    j["seed"] = cfg.seed;
    j["grid_hash"] = g.hash();
    for (const auto& [k, v] : extras) j[k] = v;
    write_text(path, j.dump(2) + "\n");
}

void save_field_csv(const std::filesystem::path& path, const SpatialField& f,
                    const SpaceTimeGrid& g) {
    std::ostringstream out;
    out << "# schema: field v1\n";
    out << "x,y,value\n";
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
            out << fmt(g.x(i)) << ',' << fmt(g.y(j)) << ',' << fmt(f.at(i, j)) << '\n';
    write_text(path, out.str());
}

SpatialField load_field_csv(const std::filesystem::path& path, const SpaceTimeGrid& g) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    expect_header(in, "field v1", path);
    SpatialField f(g);
    std::string line;
    std::size_t p = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double x, y, v;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &y, &v) != 3)
            throw std::runtime_error("malformed field row in " + path.string());
        if (p >= f.v.size()) throw std::runtime_error("field too long in " + path.string());
        f.v[p++] = v;
    }
    if (p != f.v.size()) throw std::runtime_error("field too short in " + path.string());
    return f;
}

void save_mu_csv(const std::filesystem::path& path, const std::vector<double>& mu,
                 const FrequencySet& freqs) {
    if (mu.size() != static_cast<std::size_t>(freqs.r()))
        throw std::invalid_argument("save_mu_csv: length mismatch");
    std::ostringstream out;
    out << "# schema: mu v1\n";
    out << "omega1,omega2,mu\n";
    for (int k = 0; k < freqs.r(); ++k)
        out << fmt(freqs.omegas[k][0]) << ',' << fmt(freqs.omegas[k][1]) << ','
            << fmt(mu[k]) << '\n';
    write_text(path, out.str());
}

void save_res_history(const std::filesystem::path& path,
                      const std::vector<IterationStats>& history) {
    std::ostringstream out;
    out << "# schema: res_history v1\n";
    out << "n,res,kappa_max,mu_l1,forward_flagged\n";
    for (const IterationStats& st : history)
        out << st.n << ',' << fmt(st.res) << ',' << fmt(st.kappa_max) << ','
            << fmt(st.mu_l1) << ',' << (st.forward_flagged ? 1 : 0) << '\n';
    write_text(path, out.str());
}

void save_field_bin(const std::filesystem::path& path, const std::vector<double>& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    const char magic[4] = {'M', 'F', 'G', 'F'};
    std::uint32_t version = 1;
    std::uint64_t count = data.size();
    out.write(magic, 4);
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(count * sizeof(double)));
}

std::vector<double> load_field_bin(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t count = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    if (!in || std::memcmp(magic, "MFGF", 4) != 0 || version != 1)
        throw std::runtime_error("bad binary field header in " + path.string());
    std::vector<double> data(count);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw std::runtime_error("truncated binary field in " + path.string());
    return data;
}

void save_gap_history(const std::filesystem::path& path,
                      const std::vector<std::array<double, 3>>& trace) {
    std::ostringstream out;
    out << "# schema: gap_history v1\n";
    out << "iter,gap,drift\n";
    for (const auto& row : trace)
        out << static_cast<long>(row[0]) << ',' << fmt(row[1]) << ',' << fmt(row[2])
            << '\n';
    write_text(path, out.str());
}

}  // namespace mfg
