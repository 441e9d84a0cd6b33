#include "mfg/kernel.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace mfg {

FrequencySet FrequencySet::default_lattice() {
    FrequencySet fs;
    const double pi = M_PI;
    for (int k1 = 0; k1 <= 2; ++k1) {
        for (int k2 = -2; k2 <= 2; ++k2) {
            if (k1 == 0 && k2 <= 0) continue;  // (0,0) and sign duplicates of (0,|k2|)
            fs.omegas.push_back({k1 * pi, k2 * pi});
        }
    }
    return fs;
}

int FrequencySet::find(const Vec2& w, double tol) const {
    for (int k = 0; k < r(); ++k) {
        const Vec2& o = omegas[k];
        if ((std::abs(o[0] - w[0]) < tol && std::abs(o[1] - w[1]) < tol) ||
            (std::abs(o[0] + w[0]) < tol && std::abs(o[1] + w[1]) < tol))
            return k;
    }
    return -1;
}

FeatureTable::FeatureTable(const SpaceTimeGrid& g, const FrequencySet& freqs)
    : grid(&g), r(freqs.r()), cos_t(freqs.r()), sin_t(freqs.r()) {
    for (int k = 0; k < r; ++k) {
        cos_t[k].resize(g.n_space());
        sin_t[k].resize(g.n_space());
        const Vec2& w = freqs.omegas[k];
        for (int i = 0; i < g.nx; ++i) {
            for (int j = 0; j < g.ny; ++j) {
                double ph = w[0] * g.x(i) + w[1] * g.y(j);
                cos_t[k][g.sidx(i, j)] = std::cos(ph);
                sin_t[k][g.sidx(i, j)] = std::sin(ph);
            }
        }
    }
}

std::vector<double> zeta(const Vec2& x, const KernelCoeffs& coeffs,
                         const FrequencySet& freqs) {
    if (coeffs.mu.size() != static_cast<std::size_t>(freqs.r()))
        throw std::invalid_argument("zeta: mu/omega length mismatch");
    std::vector<double> out(2 * freqs.r());
    for (int k = 0; k < freqs.r(); ++k) {
        double ph = freqs.omegas[k][0] * x[0] + freqs.omegas[k][1] * x[1];
        out[2 * k] = coeffs.mu[k] * std::cos(ph);
        out[2 * k + 1] = coeffs.mu[k] * std::sin(ph);
    }
    return out;
}

double kernel_value(const Vec2& x, const Vec2& y, const KernelCoeffs& coeffs,
                    const FrequencySet& freqs) {
    double acc = coeffs.k0;
    for (int k = 0; k < freqs.r(); ++k) {
        double ph = freqs.omegas[k][0] * (x[0] - y[0]) + freqs.omegas[k][1] * (x[1] - y[1]);
        acc += coeffs.mu[k] * coeffs.mu[k] * std::cos(ph);
    }
    return acc;
}

std::vector<double> interaction_field(const SpaceTimeGrid& g, const double* rho_slice,
                                      const KernelCoeffs& coeffs,
                                      const FeatureTable& table) {
    if (static_cast<int>(coeffs.mu.size()) != table.r)
        throw std::invalid_argument("interaction_field: mu/table length mismatch");
    std::vector<double> out(2 * table.r, 0.0);
    const double w = g.cell_area();
    for (int k = 0; k < table.r; ++k) {
        const double* ct = table.cos_t[k].data();
        const double* st = table.sin_t[k].data();
        double ac = 0.0, as = 0.0;
        for (int i = 0; i < g.nx - 1; ++i) {
            for (int j = 0; j < g.ny - 1; ++j) {
                std::size_t p = g.sidx(i, j);
                ac += ct[p] * rho_slice[p];
                as += st[p] * rho_slice[p];
            }
        }
        out[2 * k] = coeffs.mu[k] * ac * w;
        out[2 * k + 1] = coeffs.mu[k] * as * w;
    }
    return out;
}

std::vector<double> lambda1(const FrequencySet& freqs, const Vec2& x) {
    std::vector<double> out(2 * freqs.r());
    for (int k = 0; k < freqs.r(); ++k) {
        double ph = freqs.omegas[k][0] * x[0] + freqs.omegas[k][1] * x[1];
        out[2 * k] = std::cos(ph);
        out[2 * k + 1] = std::sin(ph);
    }
    return out;
}

std::vector<double> project_mu(const std::vector<double>& expanded) {
    if (expanded.size() % 2 != 0)
        throw std::invalid_argument("project_mu: expanded layout must have even length");
    std::vector<double> out(expanded.size() / 2);
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = 0.5 * (expanded[2 * k] + expanded[2 * k + 1]);
    return out;
}

std::vector<double> expand_mu(const std::vector<double>& reduced) {
    std::vector<double> out(2 * reduced.size());
    for (std::size_t k = 0; k < reduced.size(); ++k)
        out[2 * k] = out[2 * k + 1] = reduced[k];
    return out;
}

namespace {

// Lawson-Hanson active-set NNLS; the systems here are tiny (r+1 columns).
Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
    const int n = static_cast<int>(A.cols());
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<bool> passive(n, false);
    Eigen::VectorXd w = A.transpose() * (b - A * x);
    for (int outer = 0; outer < 30 * n; ++outer) {
        int t = -1;
        double wmax = 1e-12;
        for (int k = 0; k < n; ++k)
            if (!passive[k] && w[k] > wmax) { wmax = w[k]; t = k; }
        if (t < 0) break;
        passive[t] = true;
        for (int inner = 0; inner < 30 * n; ++inner) {
            std::vector<int> idx;
            for (int k = 0; k < n; ++k)
                if (passive[k]) idx.push_back(k);
            Eigen::MatrixXd Ap(A.rows(), idx.size());
            for (std::size_t c = 0; c < idx.size(); ++c) Ap.col(c) = A.col(idx[c]);
            Eigen::VectorXd z = Ap.colPivHouseholderQr().solve(b);
            bool feasible = true;
            double alpha = 1.0;
            for (std::size_t c = 0; c < idx.size(); ++c) {
                if (z[c] <= 0) {
                    feasible = false;
                    double xc = x[idx[c]];
                    alpha = std::min(alpha, xc / (xc - z[c]));
                }
            }
            if (feasible) {
                x.setZero();
                for (std::size_t c = 0; c < idx.size(); ++c) x[idx[c]] = z[c];
                break;
            }
            for (std::size_t c = 0; c < idx.size(); ++c) {
                x[idx[c]] += alpha * (z[c] - x[idx[c]]);
                if (x[idx[c]] <= 1e-14) { x[idx[c]] = 0.0; passive[idx[c]] = false; }
            }
        }
        w = A.transpose() * (b - A * x);
    }
    return x;
}

}  // namespace

BackgroundFit fit_background_mu(const std::function<double(const Vec2&)>& K0,
                                const FrequencySet& freqs, const SpaceTimeGrid& g) {
    // One period cell of the lattice: d in [x_min, x_max]^2. Sampling the full
    // displacement range of Omega' x Omega' would span two periods of every
    // basis mode and force the fit toward the coset average instead.
    const int n = g.nx;
    const double lo = g.x_min;
    const int r = freqs.r();
    const long rows = static_cast<long>(n) * n;
    Eigen::MatrixXd A(rows, r + 1);
    Eigen::VectorXd b(rows);
    long row = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j, ++row) {
            Vec2 d = {lo + i * g.h_space, lo + j * g.h_space};
            b[row] = K0(d);
            A(row, 0) = 1.0;
            for (int k = 0; k < r; ++k)
                A(row, k + 1) = std::cos(freqs.omegas[k][0] * d[0] + freqs.omegas[k][1] * d[1]);
        }
    }
    Eigen::VectorXd c = nnls(A, b);
    BackgroundFit fit;
    fit.c0 = c[0];
    fit.mu0.resize(r);
    for (int k = 0; k < r; ++k) fit.mu0[k] = std::sqrt(std::max(0.0, c[k + 1]));
    double bn = b.norm();
    fit.rel_l2_error = bn > 0 ? (b - A * c).norm() / bn : 0.0;
    return fit;
}

}  // namespace mfg
