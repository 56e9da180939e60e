#include "dlme/errors.hpp"
#include "dlme/scenario.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace dlme {

namespace {

using Matrix = Eigen::MatrixXd;

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct Fit {
    Matrix centers;  // k x d
    std::vector<int> assignment;
    double sse = std::numeric_limits<double>::infinity();
};

Eigen::VectorXd flatten(const ScenarioSet& s) {
    Eigen::VectorXd v(s.p_demand.size() + s.q_demand.size() + s.pv_availability.size());
    v << s.p_demand.reshaped(), s.q_demand.reshaped(), s.pv_availability.reshaped();
    return v;
}

void assign(const Matrix& X, Fit& f) {
    f.sse = 0.0;
    f.assignment.assign(static_cast<std::size_t>(X.rows()), 0);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < f.centers.rows(); ++k) {
            const double d = (X.row(i) - f.centers.row(k)).squaredNorm();
            if (d < best) {
                best = d;
                f.assignment[static_cast<std::size_t>(i)] = static_cast<int>(k);
            }
        }
        f.sse += best;
    }
}

// Lloyd iterations from the given centers; empty clusters take the point
// farthest from its current center.
void lloyd(const Matrix& X, Fit& f) {
    const Eigen::Index k = f.centers.rows();
    assign(X, f);
    for (int iter = 0; iter < 500; ++iter) {
        Matrix sum = Matrix::Zero(k, X.cols());
        std::vector<int> count(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            const int a = f.assignment[static_cast<std::size_t>(i)];
            sum.row(a) += X.row(i);
            ++count[static_cast<std::size_t>(a)];
        }
        for (Eigen::Index c = 0; c < k; ++c) {
            if (count[static_cast<std::size_t>(c)] > 0) {
                f.centers.row(c) = sum.row(c) / count[static_cast<std::size_t>(c)];
                continue;
            }
            Eigen::Index far = 0;
            double far_d = -1.0;
            for (Eigen::Index i = 0; i < X.rows(); ++i) {
                const double d = (X.row(i) - f.centers.row(f.assignment[static_cast<std::size_t>(i)])).squaredNorm();
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            f.centers.row(c) = X.row(far);
        }
        const std::vector<int> before = f.assignment;
        const double old_sse = f.sse;
        assign(X, f);
        if (f.assignment == before && f.sse >= old_sse - 1e-15 * (1.0 + old_sse)) break;
    }
}

Fit seeded_fit(const Matrix& X, int k, std::mt19937_64& rng) {
    const Eigen::Index n = X.rows();
    Fit f;
    f.centers.resize(k, X.cols());
    f.centers.row(0) = X.row(static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n)));
    Eigen::VectorXd d2(n);
    for (Eigen::Index i = 0; i < n; ++i) d2(i) = (X.row(i) - f.centers.row(0)).squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        Eigen::Index pick = n - 1;
        if (total > 0.0) {
            double r = uniform01(rng) * total;
            for (Eigen::Index i = 0; i < n; ++i) {
                r -= d2(i);
                if (r < 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n));
        }
        f.centers.row(c) = X.row(pick);
        for (Eigen::Index i = 0; i < n; ++i) d2(i) = std::min(d2(i), (X.row(i) - f.centers.row(c)).squaredNorm());
    }
    lloyd(X, f);
    return f;
}

Fit best_fit(const Matrix& X, int k, std::uint64_t seed) {
    constexpr int kRestarts = 10;
    std::mt19937_64 rng(seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(k));
    Fit best;
    for (int r = 0; r < kRestarts; ++r) {
        Fit f = seeded_fit(X, k, rng);
        if (f.sse < best.sse) best = std::move(f);
    }
    if (k > 1) {
        // grow the k-1 solution by its worst-served point
        Fit prev = best_fit(X, k - 1, seed);
        Fit f;
        f.centers.resize(k, X.cols());
        f.centers.topRows(k - 1) = prev.centers;
        Eigen::Index far = 0;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            const double d = (X.row(i) - prev.centers.row(prev.assignment[static_cast<std::size_t>(i)])).squaredNorm();
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        f.centers.row(k - 1) = X.row(far);
        lloyd(X, f);
        if (f.sse < best.sse) best = std::move(f);
    }
    return best;
}

}  // namespace

ClusterResult cluster_scenarios(const std::vector<ScenarioSet>& pool, int k, std::uint64_t seed) {
    if (pool.empty()) fail(ErrorKind::Validation, "scenario pool is empty");
    if (k < 1) fail(ErrorKind::Validation, "cluster count must be at least 1");
    if (static_cast<std::size_t>(k) > pool.size())
        fail(ErrorKind::Validation, "cluster count " + std::to_string(k) + " exceeds pool size " +
                                        std::to_string(pool.size()));
    const ScenarioSet& first = pool.front();
    for (const auto& s : pool)
        if (s.p_demand.rows() != first.p_demand.rows() || s.p_demand.cols() != first.p_demand.cols() ||
            s.q_demand.rows() != first.q_demand.rows() || s.q_demand.cols() != first.q_demand.cols() ||
            s.pv_availability.rows() != first.pv_availability.rows() ||
            s.pv_availability.cols() != first.pv_availability.cols())
            fail(ErrorKind::Validation, "scenario pool members differ in shape");

    const auto n = static_cast<Eigen::Index>(pool.size());
    Matrix raw(n, flatten(first).size());
    for (Eigen::Index i = 0; i < n; ++i) raw.row(i) = flatten(pool[static_cast<std::size_t>(i)]).transpose();
    const Eigen::RowVectorXd mean = raw.colwise().mean();
    Eigen::RowVectorXd sd = ((raw.rowwise() - mean).colwise().squaredNorm() / static_cast<double>(n)).cwiseSqrt();
    for (Eigen::Index j = 0; j < sd.size(); ++j)
        if (!(sd(j) > 1e-12)) sd(j) = 1.0;
    const Matrix X = (raw.rowwise() - mean).array().rowwise() / sd.array();

    const Fit fit = best_fit(X, k, seed);

    ClusterResult out;
    out.assignment = fit.assignment;
    out.sse = fit.sse;
    out.sizes.assign(static_cast<std::size_t>(k), 0);
    for (int a : fit.assignment) ++out.sizes[static_cast<std::size_t>(a)];
    for (int c = 0; c < k; ++c) {
        ScenarioSet s;
        s.label = "typical-" + std::to_string(c + 1);
        s.p_demand = Matrix::Zero(first.p_demand.rows(), first.p_demand.cols());
        s.q_demand = Matrix::Zero(first.q_demand.rows(), first.q_demand.cols());
        s.pv_availability = Matrix::Zero(first.pv_availability.rows(), first.pv_availability.cols());
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (fit.assignment[i] != c) continue;
            s.p_demand += pool[i].p_demand;
            s.q_demand += pool[i].q_demand;
            s.pv_availability += pool[i].pv_availability;
        }
        const double m = out.sizes[static_cast<std::size_t>(c)];
        if (m > 0) {
            s.p_demand /= m;
            s.q_demand /= m;
            s.pv_availability /= m;
        }
        out.centroids.push_back(std::move(s));
    }
    return out;
}

}  // namespace dlme
