// SPDX-License-Identifier: Apache-2.0
/**
 * @file simulator.hpp
 * @brief Euler-Maruyama generation of multi-maturity log-price panels
 */

#pragma once

#include "hjm2f/errors.hpp"
#include "hjm2f/model_core.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace hjm2f {

// Drift specifications ---------------------------------------------------

struct ZeroDrift {};

/// b^j_t = speed * (level - X^j_t)
struct MeanRevertDrift {
    double speed;
    double level;
};

/// b^j_t = fn(t, X^j_t)
struct CustomDrift {
    std::function<double(double, double)> fn;
};

using DriftSpec = std::variant<ZeroDrift, MeanRevertDrift, CustomDrift>;

// Volatility specifications ----------------------------------------------

struct ConstantVol {
    double sigma;
    double sigma_bar;
};

struct DeterministicVol {
    VolCurves curves;
};

/// sigma_t = scale_short * S_t, sigma_bar_t = scale_long * S_t with
/// S_t = sqrt(mean_j X^j_t), the square root of the average log-price.
struct CirLikeVol {
    double scale_short;
    double scale_long;
};

using VolSpec = std::variant<ConstantVol, DeterministicVol, CirLikeVol>;

// Initial laws -----------------------------------------------------------

struct FixedInit {
    std::vector<double> values;
};

/// X^j_0 = log(U_j), U_j iid uniform on [lo, hi]
struct LogUniformInit {
    double lo;
    double hi;
};

using InitLaw = std::variant<FixedInit, LogUniformInit>;

struct ModelSpec {
    double theta = 1.0;
    DriftSpec drift = ZeroDrift{};
    VolSpec vol = ConstantVol{0.37, 0.15};
    InitLaw init = FixedInit{};

    void validate(std::size_t dimension) const {
        if (!(theta > 0.0) || !std::isfinite(theta)) {
            throw DomainError("model: theta must be positive");
        }
        if (const auto* c = std::get_if<CirLikeVol>(&vol)) {
            if (!(c->scale_short > 0.0) || !(c->scale_long > 0.0)) {
                throw DomainError("model: cir_like scales must be positive");
            }
        }
        if (const auto* c = std::get_if<ConstantVol>(&vol)) {
            if (c->sigma < 0.0 || c->sigma_bar < 0.0) {
                throw DomainError("model: constant volatilities must be non-negative");
            }
        }
        if (const auto* u = std::get_if<LogUniformInit>(&init)) {
            if (!(u->lo > 0.0) || !(u->lo < u->hi)) {
                throw DomainError("model: log_uniform requires 0 < lo < hi");
            }
        }
        if (const auto* f = std::get_if<FixedInit>(&init)) {
            if (f->values.size() != dimension) {
                throw DomainError("model: fixed initial values must match the maturity count");
            }
        }
    }

    /// Human-readable description; custom callables are only named.
    [[nodiscard]] std::string describe() const {
        std::ostringstream os;
        os << std::setprecision(17) << "theta=" << theta;
        std::visit(
            [&](const auto& d) {
                using D = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<D, ZeroDrift>) {
                    os << ";drift=zero";
                } else if constexpr (std::is_same_v<D, MeanRevertDrift>) {
                    os << ";drift=mean_revert(" << d.speed << "," << d.level << ")";
                } else {
                    os << ";drift=custom";
                }
            },
            drift);
        std::visit(
            [&](const auto& v) {
                using V = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<V, ConstantVol>) {
                    os << ";vol=constant(" << v.sigma << "," << v.sigma_bar << ")";
                } else if constexpr (std::is_same_v<V, DeterministicVol>) {
                    os << ";vol=deterministic";
                } else {
                    os << ";vol=cir_like(" << v.scale_short << "," << v.scale_long << ")";
                }
            },
            vol);
        std::visit(
            [&](const auto& i) {
                using I = std::decay_t<decltype(i)>;
                if constexpr (std::is_same_v<I, FixedInit>) {
                    os << ";init=fixed(";
                    for (std::size_t k = 0; k < i.values.size(); ++k) {
                        os << (k ? "," : "") << i.values[k];
                    }
                    os << ")";
                } else {
                    os << ";init=log_uniform(" << i.lo << "," << i.hi << ")";
                }
            },
            init);
        return os.str();
    }

    /// FNV-1a hash of describe(), as 16 hex digits.
    [[nodiscard]] std::string digest() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char ch : describe()) {
            h ^= ch;
            h *= 0x100000001b3ULL;
        }
        std::ostringstream os;
        os << std::hex << std::setw(16) << std::setfill('0') << h;
        return os.str();
    }
};

struct PanelMeta {
    std::optional<std::uint64_t> seed;
    std::string spec_digest;
    std::size_t substeps = 0;
    /// Set when the CIR-like average log-price went negative and was clamped.
    bool positivity_clamped = false;
};

/// Observed log-prices X^j at the grid dates: d rows, n_obs + 1 columns.
class PricePanel {
public:
    PricePanel(MaturityGrid grid, std::vector<double> values, PanelMeta meta = {})
        : grid_(std::move(grid)), values_(std::move(values)), meta_(std::move(meta)) {
        if (values_.size() != rows() * cols()) {
            throw DomainError("panel: value count must equal rows * (n_obs + 1)");
        }
        for (double v : values_) {
            if (!std::isfinite(v)) {
                throw DomainError("panel: all values must be finite");
            }
        }
    }

    [[nodiscard]] const MaturityGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] const PanelMeta& meta() const noexcept { return meta_; }
    [[nodiscard]] std::size_t rows() const noexcept { return grid_.dimension(); }
    [[nodiscard]] std::size_t cols() const noexcept { return grid_.n_obs() + 1; }

    [[nodiscard]] double at(std::size_t row, std::size_t col) const {
        return values_[row * cols() + col];
    }

    [[nodiscard]] std::span<const double> row(std::size_t r) const {
        return std::span<const double>(values_).subspan(r * cols(), cols());
    }

    /// Delta_i X^r for i = 1..n, stored at index i - 1.
    [[nodiscard]] std::vector<double> increments(std::size_t r) const {
        auto x = row(r);
        std::vector<double> dx(x.size() - 1);
        for (std::size_t i = 0; i + 1 < x.size(); ++i) {
            dx[i] = x[i + 1] - x[i];
        }
        return dx;
    }

    [[nodiscard]] PricePanel select_rows(std::span<const std::size_t> rows_wanted) const {
        std::vector<double> v;
        v.reserve(rows_wanted.size() * cols());
        for (std::size_t r : rows_wanted) {
            auto x = row(r);
            v.insert(v.end(), x.begin(), x.end());
        }
        return {grid_.select(rows_wanted), std::move(v), meta_};
    }

    /// Returns a copy with every entry transformed by f(row, value).
    template <typename F>
    [[nodiscard]] PricePanel transformed(F&& f) const {
        std::vector<double> v(values_.size());
        for (std::size_t r = 0; r < rows(); ++r) {
            for (std::size_t k = 0; k < cols(); ++k) {
                v[r * cols() + k] = f(r, values_[r * cols() + k]);
            }
        }
        return {grid_, std::move(v), meta_};
    }

private:
    MaturityGrid grid_;
    std::vector<double> values_;
    PanelMeta meta_;
};

/// SplitMix64 finaliser; decorrelates consecutive replication seeds before they
/// seed the Mersenne Twister stream of that replication.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Euler-Maruyama simulation on the fine grid of step delta / substeps.
///
/// One stream per seed: first d uniforms for the initial law, then two standard
/// normals per fine step (B first, Bbar second), shared by every maturity.
/// The panel keeps only the coarse observation dates.
inline PricePanel simulate_panel(const ModelSpec& spec, const MaturityGrid& grid,
                                 std::uint64_t seed, std::size_t substeps = 10) {
    const std::size_t d = grid.dimension();
    spec.validate(d);
    if (substeps < 1) {
        throw DomainError("simulate_panel: substeps must be >= 1");
    }
    std::mt19937_64 rng(splitmix64(seed));
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<double> x(d);
    if (const auto* f = std::get_if<FixedInit>(&spec.init)) {
        x = f->values;
    } else {
        const auto& u = std::get<LogUniformInit>(spec.init);
        std::uniform_real_distribution<double> unif(u.lo, u.hi);
        for (auto& xj : x) {
            xj = std::log(unif(rng));
        }
    }

    const std::size_t n = grid.n_obs();
    const std::size_t cols = n + 1;
    std::vector<double> out(d * cols);
    for (std::size_t j = 0; j < d; ++j) {
        out[j * cols] = x[j];
    }

    const double dt = grid.delta() / static_cast<double>(substeps);
    const double sqrt_dt = std::sqrt(dt);
    const auto& T = grid.maturities();
    bool clamped = false;

    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t s = 0; s < substeps; ++s) {
            const double t = dt * static_cast<double>(k * substeps + s);
            double sigma = 0.0;
            double sigma_bar = 0.0;
            std::visit(
                [&](const auto& v) {
                    using V = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<V, ConstantVol>) {
                        sigma = v.sigma;
                        sigma_bar = v.sigma_bar;
                    } else if constexpr (std::is_same_v<V, DeterministicVol>) {
                        sigma = std::sqrt(std::max(v.curves.sigma_sq(t), 0.0));
                        sigma_bar = std::sqrt(std::max(v.curves.sigma_bar_sq(t), 0.0));
                    } else {
                        double m = 0.0;
                        for (double xj : x) {
                            m += xj;
                        }
                        m /= static_cast<double>(d);
                        if (m < 0.0) {
                            clamped = true;
                            m = 0.0;
                        }
                        const double level = std::sqrt(m);
                        sigma = v.scale_short * level;
                        sigma_bar = v.scale_long * level;
                    }
                },
                spec.vol);

            const double dB = sqrt_dt * normal(rng);
            const double dBbar = sqrt_dt * normal(rng);
            for (std::size_t j = 0; j < d; ++j) {
                double b = 0.0;
                std::visit(
                    [&](const auto& dr) {
                        using D = std::decay_t<decltype(dr)>;
                        if constexpr (std::is_same_v<D, MeanRevertDrift>) {
                            b = dr.speed * (dr.level - x[j]);
                        } else if constexpr (std::is_same_v<D, CustomDrift>) {
                            b = dr.fn(t, x[j]);
                        }
                    },
                    spec.drift);
                x[j] += b * dt + std::exp(-spec.theta * (T[j] - t)) * sigma * dB + sigma_bar * dBbar;
            }
        }
        for (std::size_t j = 0; j < d; ++j) {
            out[j * cols + k + 1] = x[j];
        }
    }

    PanelMeta meta;
    meta.seed = seed;
    meta.spec_digest = spec.digest();
    meta.substeps = substeps;
    meta.positivity_clamped = clamped;
    return {grid, std::move(out), std::move(meta)};
}

// Reference simulation configurations -------------------------------------

enum class ConfigId { d2, d3, d4, d5, d6 };

inline ConfigId parse_config_id(const std::string& s) {
    if (s == "d2") return ConfigId::d2;
    if (s == "d3") return ConfigId::d3;
    if (s == "d4") return ConfigId::d4;
    if (s == "d5") return ConfigId::d5;
    if (s == "d6") return ConfigId::d6;
    throw DomainError("unknown configuration id '" + s + "' (expected d2..d6)");
}

inline std::string to_string(ConfigId id) {
    return "d" + std::to_string(static_cast<int>(id) + 2);
}

/// Maturities (days) and observation count of the month-ahead configurations:
/// d contracts jointly quoted over 7 - d months, horizon equal to T_1.
inline MaturityGrid reference_grid(ConfigId id) {
    switch (id) {
    case ConfigId::d2: return MaturityGrid::from_days({150, 181}, 150, 100);
    case ConfigId::d3: return MaturityGrid::from_days({120, 150, 181}, 120, 80);
    case ConfigId::d4: return MaturityGrid::from_days({90, 120, 151, 181}, 90, 60);
    case ConfigId::d5: return MaturityGrid::from_days({59, 90, 120, 151, 181}, 59, 40);
    case ConfigId::d6: return MaturityGrid::from_days({31, 59, 90, 120, 151, 181}, 31, 20);
    }
    throw DomainError("unknown configuration id");
}

struct ReferenceConfig {
    ModelSpec spec;
    MaturityGrid grid;
};

/// CIR-like reference model: b^j = 0.365 (log 30 - X^j),
/// sigma = 0.37 S_t, sigma_bar = 0.15 S_t, X^j_0 = log U[20, 40].
inline ReferenceConfig paper_config(ConfigId id, double theta = 1.4) {
    ModelSpec spec;
    spec.theta = theta;
    spec.drift = MeanRevertDrift{3.65e-1, std::log(30.0)};
    spec.vol = CirLikeVol{0.37, 0.15};
    spec.init = LogUniformInit{20.0, 40.0};
    return {std::move(spec), reference_grid(id)};
}

// Panel CSV ---------------------------------------------------------------

/// Header `date_index,t_years,X1,...,Xd`, one line per observation date.
inline void write_panel_csv(std::ostream& os, const PricePanel& panel) {
    os << "date_index,t_years";
    for (std::size_t j = 0; j < panel.rows(); ++j) {
        os << ",X" << (j + 1);
    }
    os << '\n' << std::setprecision(17);
    for (std::size_t k = 0; k < panel.cols(); ++k) {
        os << k << ',' << panel.grid().time(k);
        for (std::size_t j = 0; j < panel.rows(); ++j) {
            os << ',' << panel.at(j, k);
        }
        os << '\n';
    }
}

/// Reads a panel CSV written by write_panel_csv. Maturities are not part of
/// the file and must be supplied; the horizon is the last t_years value.
inline PricePanel read_panel_csv(std::istream& is, const std::vector<double>& maturities) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(is, line)) {
        throw ParseError("empty panel file", 1);
    }
    ++line_no;
    std::size_t d = 0;
    {
        std::istringstream hs(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(hs, cell, ',')) {
            if (!cell.empty() && cell.back() == '\r') cell.pop_back();
            cells.push_back(cell);
        }
        if (cells.size() < 3 || cells[0] != "date_index" || cells[1] != "t_years") {
            throw ParseError("expected header date_index,t_years,X1,...", line_no);
        }
        d = cells.size() - 2;
    }
    if (d != maturities.size()) {
        throw ValidationError("panel has " + std::to_string(d) + " series but " +
                              std::to_string(maturities.size()) + " maturities were given");
    }
    std::vector<std::vector<double>> series(d);
    std::vector<double> times;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<double> nums;
        while (std::getline(ls, cell, ',')) {
            try {
                std::size_t used = 0;
                nums.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                throw ParseError("not a number: '" + cell + "'", line_no);
            }
        }
        if (nums.size() != d + 2) {
            throw ParseError("expected " + std::to_string(d + 2) + " fields", line_no);
        }
        times.push_back(nums[1]);
        for (std::size_t j = 0; j < d; ++j) {
            series[j].push_back(nums[j + 2]);
        }
    }
    if (times.size() < 3) {
        throw ValidationError("panel needs at least 3 observation dates");
    }
    const std::size_t n = times.size() - 1;
    std::vector<double> values;
    values.reserve(d * (n + 1));
    for (const auto& s : series) {
        values.insert(values.end(), s.begin(), s.end());
    }
    return {MaturityGrid(maturities, times.back() - times.front(), n), std::move(values)};
}

} // namespace hjm2f
