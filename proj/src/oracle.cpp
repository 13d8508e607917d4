#include "freeconv/oracle.hpp"

#include "freeconv/additive.hpp"
#include "freeconv/errors.hpp"
#include "freeconv/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <numbers>

namespace freeconv {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Deterministic Gaussian stream: splitmix64 bits through Box-Muller.
struct GaussianStream {
    std::uint64_t state;
    bool have_spare = false;
    double spare = 0.0;

    explicit GaussianStream(std::uint64_t s) : state(s) {}

    double uniform() {  // (0, 1]
        return static_cast<double>((splitmix64(state) >> 11) + 1) * 0x1.0p-53;
    }
    double gaussian() {
        if (have_spare) {
            have_spare = false;
            return spare;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double a = 2.0 * std::numbers::pi * uniform();
        spare = r * std::sin(a);
        have_spare = true;
        return r * std::cos(a);
    }
};

Eigen::MatrixXd haar_orthogonal(int n, GaussianStream& g) {
    Eigen::MatrixXd a(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) a(i, j) = g.gaussian();
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd& packed = qr.matrixQR();
    for (int j = 0; j < n; ++j)  // sign fix makes the distribution Haar
        if (packed(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
}

void check_oracle(const Measure& m1, const Measure& m2, const OracleConfig& cfg,
                  bool multiplicative) {
    if (cfg.matrix_size < 64) throw ArgumentError("oracle matrix_size must be >= 64");
    if (cfg.trials < 1) throw ArgumentError("oracle trials must be >= 1");
    for (const Measure* m : {&m1, &m2}) {
        if (multiplicative) {
            if (m->domain() != Domain::PositiveHalfline)
                throw DomainError("multiplicative oracle requires positive-halfline measures");
        } else if (m->domain() == Domain::UnitCircle) {
            throw DomainError("additive oracle requires real-line measures");
        }
    }
}

std::vector<double> raw_eigenvalues(const Measure& m1, const Measure& m2,
                                    const OracleConfig& cfg, bool multiplicative) {
    check_oracle(m1, m2, cfg, multiplicative);
    const int n = cfg.matrix_size;
    const std::vector<double> s1 = sample_spectrum(m1, n);
    const std::vector<double> s2 = sample_spectrum(m2, n);
    const Eigen::VectorXd d1 = Eigen::Map<const Eigen::VectorXd>(s1.data(), n);
    const Eigen::VectorXd d2 = Eigen::Map<const Eigen::VectorXd>(s2.data(), n);
    Eigen::VectorXd d2sqrt;
    if (multiplicative) d2sqrt = d2.array().max(0.0).sqrt().matrix();

    std::vector<double> eigs(static_cast<std::size_t>(n) * cfg.trials);
    parallel_for_chunks(
        cfg.trials,
        [&](std::size_t tb, std::size_t te) {
            for (std::size_t t = tb; t < te; ++t) {
                for (int attempt = 0;; ++attempt) {
                    // counter-derived stream: independent of scheduling
                    std::uint64_t s0 = cfg.seed +
                                       0x632BE59BD9B4E019ULL * static_cast<std::uint64_t>(t + 1) +
                                       0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(attempt);
                    GaussianStream g(s0);
                    const Eigen::MatrixXd q = haar_orthogonal(n, g);
                    Eigen::MatrixXd m;
                    if (multiplicative) {
                        const Eigen::MatrixXd core = q * d1.asDiagonal() * q.transpose();
                        m = d2sqrt.asDiagonal() * core * d2sqrt.asDiagonal();
                    } else {
                        m.noalias() = q * d2.asDiagonal() * q.transpose();
                        m.diagonal() += d1;
                    }
                    m = (0.5 * (m + m.transpose())).eval();
                    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
                    if (es.info() == Eigen::Success) {
                        const Eigen::VectorXd& ev = es.eigenvalues();
                        for (int i = 0; i < n; ++i) {
                            double v = ev(i);
                            if (multiplicative && v < 0.0) v = 0.0;
                            eigs[t * n + i] = v;
                        }
                        break;
                    }
                    if (attempt >= 4)
                        throw SolverError("oracle eigensolver failed repeatedly", 0.0, attempt);
                    std::cerr << "oracle: eigensolver retry on trial " << t << "\n";
                }
            }
        },
        /*min_parallel=*/2);
    return eigs;
}

}  // namespace

Measure bin_eigenvalues(const std::vector<double>& eigs, const Measure& m1, const Measure& m2,
                        const OracleConfig& cfg, bool multiplicative) {
    const Domain dom = multiplicative ? Domain::PositiveHalfline : Domain::RealLine;
    const auto [lo_it, hi_it] = std::minmax_element(eigs.begin(), eigs.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi - lo <= 1e-12 * std::max(1.0, std::abs(lo)))
        return Measure::make(dom, {{0.5 * (lo + hi), 1.0}}, {}, {});

    int bins = cfg.bin_count > 0
                   ? cfg.bin_count
                   : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(eigs.size()))));
    bins = std::max(bins, 3);
    const double width = (hi - lo) / bins;
    std::vector<double> counts(bins, 0.0);
    for (double v : eigs) {
        const int idx = std::min(bins - 1, static_cast<int>((v - lo) / width));
        counts[idx] += 1.0;
    }
    const double total = static_cast<double>(eigs.size());

    std::vector<double> predicted;
    if (multiplicative) {
        if (std::max(m1.mass_at_zero(), m2.mass_at_zero()) > 0.0) predicted.push_back(0.0);
        for (const Atom& a : m1.atoms())
            for (const Atom& b : m2.atoms())
                if (a.x != 0.0 && b.x != 0.0 && a.mass + b.mass > 1.0)
                    predicted.push_back(a.x * b.x);
    } else {
        for (const Atom& a : predict_atoms(m1, m2)) predicted.push_back(a.x);
    }

    std::vector<Atom> atoms;
    for (int i = 0; i < bins; ++i) {
        const double left = i > 0 ? counts[i - 1] : 0.0;
        const double right = i + 1 < bins ? counts[i + 1] : 0.0;
        const double neighbors = i == 0 ? right : (i + 1 == bins ? left : 0.5 * (left + right));
        if (counts[i] <= 5.0 * std::max(neighbors, 0.5)) continue;
        double loc = lo + (i + 0.5) * width;
        for (double p : predicted)
            if (std::abs(loc - p) <= width) {
                loc = p;
                break;
            }
        atoms.push_back({loc, counts[i] / total});
        counts[i] = 0.0;
    }

    Eigen::ArrayXd grid(bins), values(bins);
    for (int i = 0; i < bins; ++i) {
        grid(i) = lo + (i + 0.5) * width;
        values(i) = counts[i] / (total * width);
    }
    return Measure::make(dom, atoms, grid, values);
}

std::vector<double> sample_spectrum(const Measure& m, int n) {
    if (m.domain() == Domain::UnitCircle)
        throw DomainError("sample_spectrum works on real-line measures");
    if (n < 1) throw ArgumentError("sample_spectrum needs n >= 1");
    std::vector<double> out(n);
    for (int k = 0; k < n; ++k) out[k] = quantile(m, (k + 0.5) / n);
    return out;
}

std::vector<double> raw_additive_eigenvalues(const Measure& m1, const Measure& m2,
                                             const OracleConfig& cfg) {
    return raw_eigenvalues(m1, m2, cfg, false);
}

std::vector<double> raw_multiplicative_eigenvalues(const Measure& m1, const Measure& m2,
                                                   const OracleConfig& cfg) {
    return raw_eigenvalues(m1, m2, cfg, true);
}

Measure sample_additive(const Measure& m1, const Measure& m2, const OracleConfig& cfg) {
    return bin_eigenvalues(raw_additive_eigenvalues(m1, m2, cfg), m1, m2, cfg, false);
}

Measure sample_multiplicative(const Measure& m1, const Measure& m2, const OracleConfig& cfg) {
    return bin_eigenvalues(raw_multiplicative_eigenvalues(m1, m2, cfg), m1, m2, cfg, true);
}

}  // namespace freeconv
