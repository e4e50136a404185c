#pragma once

// Objective functions: two standard global-optimization benchmarks, the noisy
// one-dimensional demonstration function, and a finite table of measured
// samples that serves as a pool-based objective.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "casmart/errors.hpp"
#include "casmart/sampling.hpp"

namespace casmart {

/// A black-box function over a search space. `evaluate` receives the run's
/// noise stream; deterministic objectives ignore it.
struct Objective {
    std::string name;
    SearchSpace space;
    double noise_std = 0.0;
    std::function<double(const Eigen::VectorXd&, std::mt19937_64&)> evaluate;

    double operator()(const Eigen::VectorXd& x, std::mt19937_64& rng) const { return evaluate(x, rng); }
};

namespace detail {

inline void require_inside(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                           std::string_view who)
{
    if (x.size() != lo.size())
        throw InputError(std::string(who) + ": expected a " + std::to_string(lo.size()) + "-vector");
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (!(x[i] >= lo[i] && x[i] <= hi[i]))
            throw InputError(std::string(who) + ": point outside the domain");
}

inline double add_noise(double value, double noise_std, std::mt19937_64& rng)
{
    if (noise_std <= 0.0)
        return value;
    std::normal_distribution<double> n(0.0, noise_std);
    return value + n(rng);
}

} // namespace detail

// Six-hump camelback, standard form (Molga & Smutnicki, "Test functions for
// optimization needs", 2005), on [-3, 3] x [-2, 2].
inline double six_hump(const Eigen::VectorXd& x)
{
    detail::require_inside(x, Eigen::Vector2d(-3.0, -2.0), Eigen::Vector2d(3.0, 2.0), "six_hump");
    const double a = x[0], b = x[1];
    const double a2 = a * a, b2 = b * b;
    return (4.0 - 2.1 * a2 + a2 * a2 / 3.0) * a2 + a * b + (-4.0 + 4.0 * b2) * b2;
}

// Griewank, standard form (same reference), on [-600, 600]^5.
inline double griewank(const Eigen::VectorXd& x)
{
    detail::require_inside(x, Eigen::VectorXd::Constant(5, -600.0), Eigen::VectorXd::Constant(5, 600.0),
                           "griewank");
    double sum = 0.0, prod = 1.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        sum += x[i] * x[i] / 4000.0;
        prod *= std::cos(x[i] / std::sqrt(static_cast<double>(i + 1)));
    }
    return 1.0 + sum - prod;
}

inline constexpr double demo_1d_noise_std = 0.05;

// The published expression, written out as is: the two linear terms cancel,
// leaving -sin(5x) plus noise.
inline double demo_1d_clean(double x) { return -std::sin(5.0 * x) - 0.75 * x + 0.75 * x; }

inline double demo_1d(double x, std::mt19937_64& rng, double noise_std = demo_1d_noise_std)
{
    return detail::add_noise(demo_1d_clean(x), noise_std, rng);
}

inline Objective make_six_hump(double noise_std = 0.0)
{
    return Objective{"six-hump",
                     SearchSpace::continuous(Eigen::Vector2d(-3.0, -2.0), Eigen::Vector2d(3.0, 2.0)),
                     noise_std,
                     [noise_std](const Eigen::VectorXd& x, std::mt19937_64& rng) {
                         return detail::add_noise(six_hump(x), noise_std, rng);
                     }};
}

inline Objective make_griewank(double noise_std = 0.0)
{
    return Objective{"griewank",
                     SearchSpace::continuous(Eigen::VectorXd::Constant(5, -600.0),
                                             Eigen::VectorXd::Constant(5, 600.0)),
                     noise_std,
                     [noise_std](const Eigen::VectorXd& x, std::mt19937_64& rng) {
                         return detail::add_noise(griewank(x), noise_std, rng);
                     }};
}

inline Objective make_demo_1d(double lower = -1.0, double upper = 2.0, double noise_std = demo_1d_noise_std)
{
    Eigen::VectorXd lo(1), hi(1);
    lo << lower;
    hi << upper;
    return Objective{"demo-1d", SearchSpace::continuous(lo, hi), noise_std,
                     [noise_std](const Eigen::VectorXd& x, std::mt19937_64& rng) {
                         if (x.size() != 1)
                             throw InputError("demo_1d: expected a scalar input");
                         return demo_1d(x[0], rng, noise_std);
                     }};
}

/// Deterministic part of a named benchmark, used for held-out test sets.
inline std::function<double(const Eigen::VectorXd&)> noise_free(std::string_view name)
{
    if (name == "six-hump")
        return [](const Eigen::VectorXd& x) { return six_hump(x); };
    if (name == "griewank")
        return [](const Eigen::VectorXd& x) { return griewank(x); };
    if (name == "demo-1d")
        return [](const Eigen::VectorXd& x) { return demo_1d_clean(x[0]); };
    throw ConfigError("unknown objective '" + std::string(name) + "'");
}

inline Objective make_benchmark(std::string_view name)
{
    if (name == "six-hump")
        return make_six_hump();
    if (name == "griewank")
        return make_griewank();
    if (name == "demo-1d")
        return make_demo_1d();
    throw ConfigError("unknown objective '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Tabular pool

struct TableSchema {
    std::vector<std::string> features{"NT", "CT", "Cr", "QmT", "DT", "Ct"};
    std::string target = "FS";
};

struct TableSplits {
    std::vector<Eigen::Index> initial;
    std::vector<Eigen::Index> candidates;
    std::vector<Eigen::Index> test;
};

struct TablePool {
    TableSchema schema;
    Eigen::MatrixXd X; // rows x features, original units
    Eigen::VectorXd y;
    /// 1-based data line numbers (header excluded) of rows dropped at load.
    std::vector<std::size_t> dropped_rows;

    Eigen::Index size() const noexcept { return y.size(); }

    Eigen::MatrixXd rows(const std::vector<Eigen::Index>& idx) const
    {
        Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), X.cols());
        for (std::size_t i = 0; i < idx.size(); ++i)
            out.row(static_cast<Eigen::Index>(i)) = X.row(idx[i]);
        return out;
    }

    Eigen::VectorXd targets(const std::vector<Eigen::Index>& idx) const
    {
        Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i)
            out[static_cast<Eigen::Index>(i)] = y[idx[i]];
        return out;
    }

    /// Seeded permutation: the first n_initial rows are the initial design,
    /// the next n_candidates the selectable pool, the rest the test set.
    TableSplits split(std::size_t n_initial, std::size_t n_candidates, std::uint64_t seed) const
    {
        const auto n = static_cast<std::size_t>(size());
        if (n_initial + n_candidates > n)
            throw CapacityError("table: " + std::to_string(n) + " complete rows cannot supply " +
                                std::to_string(n_initial) + " initial + " + std::to_string(n_candidates) +
                                " candidate rows");
        std::vector<Eigen::Index> perm(n);
        std::iota(perm.begin(), perm.end(), Eigen::Index{0});
        std::mt19937_64 rng(seed);
        // Explicit Fisher-Yates so the permutation does not depend on the
        // standard library's shuffle implementation.
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(rng() % i);
            std::swap(perm[i - 1], perm[j]);
        }
        TableSplits s;
        s.initial.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_initial));
        s.candidates.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_initial),
                            perm.begin() + static_cast<std::ptrdiff_t>(n_initial + n_candidates));
        s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_initial + n_candidates), perm.end());
        return s;
    }
};

namespace detail {

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            out.push_back(trim(cell));
            cell.clear();
        } else {
            cell.push_back(c);
        }
    }
    out.push_back(trim(cell));
    return out;
}

inline bool parse_number(const std::string& s, double& out)
{
    if (s.empty())
        return false;
    std::istringstream is(s);
    is.imbue(std::locale::classic());
    is >> out;
    return !is.fail() && is.eof() && std::isfinite(out);
}

} // namespace detail

inline TablePool parse_table(std::istream& in, const TableSchema& schema = {})
{
    std::string line;
    if (!std::getline(in, line))
        throw SchemaError("table: missing header row");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF)
        line.erase(0, 3); // UTF-8 byte-order mark
    const auto header = detail::split_csv_line(line);

    auto column = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw SchemaError("table: missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    std::vector<std::size_t> cols;
    for (const auto& f : schema.features)
        cols.push_back(column(f));
    const std::size_t target_col = column(schema.target);

    TablePool pool;
    pool.schema = schema;
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty())
            continue;
        const auto cells = detail::split_csv_line(line);
        std::vector<double> row(cols.size() + 1);
        bool ok = true;
        for (std::size_t k = 0; k < cols.size() && ok; ++k)
            ok = cols[k] < cells.size() && detail::parse_number(cells[cols[k]], row[k]);
        ok = ok && target_col < cells.size() && detail::parse_number(cells[target_col], row.back());
        if (!ok) {
            pool.dropped_rows.push_back(line_no);
            continue;
        }
        rows.push_back(std::move(row));
    }

    const auto d = static_cast<Eigen::Index>(cols.size());
    pool.X.resize(static_cast<Eigen::Index>(rows.size()), d);
    pool.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (Eigen::Index k = 0; k < d; ++k)
            pool.X(static_cast<Eigen::Index>(i), k) = rows[i][static_cast<std::size_t>(k)];
        pool.y[static_cast<Eigen::Index>(i)] = rows[i].back();
    }
    return pool;
}

inline TablePool load_table(const std::string& path, const TableSchema& schema = {})
{
    std::ifstream in(path);
    if (!in)
        throw IoError("table: cannot open '" + path + "'");
    return parse_table(in, schema);
}

inline void write_table(std::ostream& out, const TablePool& pool)
{
    for (std::size_t k = 0; k < pool.schema.features.size(); ++k)
        out << pool.schema.features[k] << ',';
    out << pool.schema.target << '\n';
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    };
    for (Eigen::Index i = 0; i < pool.size(); ++i) {
        for (Eigen::Index k = 0; k < pool.X.cols(); ++k) {
            put(pool.X(i, k));
            out << ',';
        }
        put(pool.y[i]);
        out << '\n';
    }
}

inline void write_table(const std::string& path, const TablePool& pool)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("table: cannot write '" + path + "'");
    write_table(out, pool);
    if (!out)
        throw IoError("table: write failed for '" + path + "'");
}

// Synthetic stand-in for a heat-treatment / fatigue-strength table.
//
// Features are drawn uniformly from
//   NT [825, 930]  CT [840, 930]  Cr [0, 1.2]  QmT [30, 140]  DT [30, 900]  Ct [0, 540]
// and with u_* the feature rescaled to [0, 1] the target is
//   FS = 550 + 180 u_Cr + 120 sin(pi u_CT) + 90 u_Ct^2 - 110 u_QmT
//        + 60 u_NT u_DT + 40 cos(2 pi u_DT) + N(0, 15^2).
inline constexpr double synth_noise_std = 15.0;

inline double synth_response(const Eigen::VectorXd& u)
{
    constexpr double pi = std::numbers::pi;
    const double NT = u[0], CT = u[1], Cr = u[2], QmT = u[3], DT = u[4], Ct = u[5];
    return 550.0 + 180.0 * Cr + 120.0 * std::sin(pi * CT) + 90.0 * Ct * Ct - 110.0 * QmT + 60.0 * NT * DT +
           40.0 * std::cos(2.0 * pi * DT);
}

inline const Eigen::Matrix<double, 6, 2>& synth_ranges()
{
    static const Eigen::Matrix<double, 6, 2> r = (Eigen::Matrix<double, 6, 2>() << 825, 930, 840, 930, 0, 1.2,
                                                  30, 140, 30, 900, 0, 540)
                                                     .finished();
    return r;
}

inline TablePool synth_table(std::size_t n, std::uint64_t seed)
{
    if (n < 1)
        throw InputError("synth_table: n must be >= 1");
    const auto& r = synth_ranges();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, synth_noise_std);

    TablePool pool;
    pool.X.resize(static_cast<Eigen::Index>(n), 6);
    pool.y.resize(static_cast<Eigen::Index>(n));
    Eigen::VectorXd u(6);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
        for (Eigen::Index k = 0; k < 6; ++k) {
            u[k] = unit(rng);
            pool.X(i, k) = r(k, 0) + u[k] * (r(k, 1) - r(k, 0));
        }
        pool.y[i] = synth_response(u) + noise(rng);
    }
    return pool;
}

} // namespace casmart
