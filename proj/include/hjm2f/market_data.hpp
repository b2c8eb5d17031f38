// SPDX-License-Identifier: Apache-2.0
/**
 * @file market_data.hpp
 * @brief Forward quote ingestion, joint observation windows and the
 *        per-window estimation pipeline
 */

#pragma once

#include "hjm2f/efficient_estimator.hpp"
#include "hjm2f/errors.hpp"
#include "hjm2f/mc_harness.hpp"
#include "hjm2f/model_core.hpp"
#include "hjm2f/nonparam_vol.hpp"
#include "hjm2f/parallel.hpp"
#include "hjm2f/qv_estimators.hpp"
#include "hjm2f/simulator.hpp"
#include "hjm2f/stats.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace hjm2f {

namespace chr = std::chrono;

struct ContractQuote {
    chr::sys_days quote_date;
    chr::sys_days delivery_start;
    double price = 0.0;
};

/// YYYY-MM-DD
inline chr::sys_days parse_iso_date(const std::string& s, std::size_t line = 0) {
    int y = 0;
    unsigned m = 0, d = 0;
    char tail = 0;
    if (s.size() != 10 || s[4] != '-' || s[7] != '-' ||
        std::sscanf(s.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
        throw ParseError("malformed date '" + s + "' (expected YYYY-MM-DD)", line);
    }
    const chr::year_month_day ymd{chr::year{y}, chr::month{m}, chr::day{d}};
    if (!ymd.ok()) {
        throw ParseError("invalid calendar date '" + s + "'", line);
    }
    return chr::sys_days{ymd};
}

inline std::string format_iso_date(chr::sys_days d) {
    const chr::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

/// Reads `quote_date,delivery_start,price` rows. Malformed lines raise a
/// ParseError naming the line; rule violations (price <= 0, delivery not after
/// the quote, duplicate pairs) are collected into one ValidationError.
inline std::vector<ContractQuote> load_quotes(std::istream& is) {
    std::vector<ContractQuote> out;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(is, line)) {
        return out;
    }
    ++line_no;
    if (detail::trim_copy(line) != "quote_date,delivery_start,price") {
        throw ParseError("expected header 'quote_date,delivery_start,price'", line_no);
    }
    std::set<std::pair<chr::sys_days, chr::sys_days>> seen;
    std::vector<std::string> problems;
    while (std::getline(is, line)) {
        ++line_no;
        const std::string row = detail::trim_copy(line);
        if (row.empty()) {
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(row);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            f.push_back(detail::trim_copy(cell));
        }
        if (f.size() != 3) {
            throw ParseError("expected 3 fields, got " + std::to_string(f.size()), line_no);
        }
        ContractQuote q{parse_iso_date(f[0], line_no), parse_iso_date(f[1], line_no),
                        detail::parse_double(f[2], line_no)};
        if (!(q.price > 0.0) || !std::isfinite(q.price)) {
            problems.push_back("line " + std::to_string(line_no) + ": price must be positive");
        } else if (q.delivery_start <= q.quote_date) {
            problems.push_back("line " + std::to_string(line_no) +
                               ": delivery_start must be after quote_date");
        } else if (!seen.insert({q.quote_date, q.delivery_start}).second) {
            problems.push_back("line " + std::to_string(line_no) +
                               ": duplicate (quote_date, delivery_start)");
        } else {
            out.push_back(q);
        }
    }
    if (!problems.empty()) {
        std::string msg = "invalid quotes:";
        for (const auto& p : problems) {
            msg += "\n  " + p;
        }
        throw ValidationError(msg);
    }
    return out;
}

inline std::vector<ContractQuote> load_quotes_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open '" + path + "'");
    }
    return load_quotes(in);
}

/// d fixed monthly contracts observed jointly on every date of the window.
struct EstimationWindow {
    chr::year_month first_delivery;
    std::vector<chr::sys_days> dates;
    std::vector<chr::sys_days> maturities;
    PricePanel log_panel;
};

struct WindowReport {
    std::size_t blocks_considered = 0;
    std::size_t emitted = 0;
    /// (first delivery month as YYYY-MM, reason)
    std::vector<std::pair<std::string, std::string>> skipped;
    /// Longest quote-to-delivery distance in months found in the data.
    int listing_horizon_months = 0;
};

struct WindowSet {
    std::vector<EstimationWindow> windows;
    WindowReport report;
};

namespace detail {

inline int month_index(chr::year_month ym) {
    return static_cast<int>(ym.year()) * 12 + static_cast<int>(static_cast<unsigned>(ym.month())) - 1;
}

inline int month_index(chr::sys_days d) {
    const chr::year_month_day ymd{d};
    return month_index(ymd.year() / ymd.month());
}

inline chr::year_month from_month_index(int k) {
    return chr::year{k / 12} / chr::month{static_cast<unsigned>(k % 12 + 1)};
}

inline std::string format_year_month(chr::year_month ym) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u", static_cast<int>(ym.year()),
                  static_cast<unsigned>(ym.month()));
    return buf;
}

} // namespace detail

/// Joint observation windows of d consecutive monthly contracts.
///
/// For each delivery month M present in the data the block is the contracts
/// delivering in M, M+1, ..., M+d-1. Its window holds every quote date before
/// the delivery start of M on which all d contracts are quoted. With listing
/// horizon H months (read off the data) such a window spans months
/// M-(H-d+1) .. M-1; blocks whose span is not inside the data's month range
/// are skipped, as are windows with fewer than `min_dates` dates.
///
/// Dates are treated as a regular grid: delta = (last - first) / (dates - 1),
/// time in years at 365 days; maturities are measured from the first date.
inline WindowSet build_windows(const std::vector<ContractQuote>& quotes, std::size_t d,
                               std::size_t min_dates = 15) {
    if (d < 2 || d > 6) {
        throw DomainError("build_windows: d must lie in [2, 6]");
    }
    WindowSet out;
    if (quotes.empty()) {
        return out;
    }
    // delivery month -> delivery start date; (delivery start) -> (quote date -> price)
    std::map<int, chr::sys_days> delivery_by_month;
    std::map<chr::sys_days, std::map<chr::sys_days, double>> prices;
    int first_month = detail::month_index(quotes.front().quote_date);
    int last_month = first_month;
    int horizon = 0;
    for (const auto& q : quotes) {
        const int qm = detail::month_index(q.quote_date);
        const int dm = detail::month_index(q.delivery_start);
        first_month = std::min(first_month, qm);
        last_month = std::max(last_month, qm);
        horizon = std::max(horizon, dm - qm);
        auto [it, inserted] = delivery_by_month.emplace(dm, q.delivery_start);
        if (!inserted && it->second != q.delivery_start) {
            it->second = std::min(it->second, q.delivery_start);
        }
        prices[q.delivery_start][q.quote_date] = q.price;
    }
    out.report.listing_horizon_months = horizon;
    const int span_months = horizon - static_cast<int>(d) + 1;

    for (const auto& [m, start] : delivery_by_month) {
        const auto label = detail::format_year_month(detail::from_month_index(m));
        ++out.report.blocks_considered;
        if (span_months < 1) {
            out.report.skipped.emplace_back(label, "listing horizon shorter than the block");
            continue;
        }
        if (m - span_months < first_month || m - 1 > last_month) {
            out.report.skipped.emplace_back(label, "window not covered by the data");
            continue;
        }
        std::vector<chr::sys_days> contracts;
        for (int k = 0; k < static_cast<int>(d); ++k) {
            const auto it = delivery_by_month.find(m + k);
            if (it == delivery_by_month.end()) {
                break;
            }
            contracts.push_back(it->second);
        }
        if (contracts.size() != d) {
            out.report.skipped.emplace_back(label, "missing contract in the block");
            continue;
        }
        std::vector<chr::sys_days> dates;
        for (const auto& [qd, p] : prices[contracts.front()]) {
            if (qd >= start) {
                continue;
            }
            bool all = true;
            for (std::size_t j = 1; j < d && all; ++j) {
                all = prices[contracts[j]].count(qd) > 0;
            }
            if (all) {
                dates.push_back(qd);
            }
        }
        if (dates.size() < std::max<std::size_t>(min_dates, 3)) {
            out.report.skipped.emplace_back(label, "only " + std::to_string(dates.size()) +
                                                       " joint quotation dates");
            continue;
        }
        const double span_days = static_cast<double>((dates.back() - dates.front()).count());
        std::vector<double> maturities;
        for (const auto& c : contracts) {
            maturities.push_back(static_cast<double>((c - dates.front()).count()));
        }
        const std::size_t n = dates.size() - 1;
        auto grid = MaturityGrid::from_days(maturities, span_days, n);
        std::vector<double> values(d * (n + 1));
        for (std::size_t j = 0; j < d; ++j) {
            const auto& pj = prices[contracts[j]];
            for (std::size_t k = 0; k <= n; ++k) {
                values[j * (n + 1) + k] = std::log(pj.at(dates[k]));
            }
        }
        out.windows.push_back(EstimationWindow{detail::from_month_index(m), std::move(dates),
                                               std::move(contracts),
                                               PricePanel(std::move(grid), std::move(values))});
        ++out.report.emitted;
    }
    return out;
}

// Per-window pipeline --------------------------------------------------------

struct RealDataOptions {
    std::vector<EstimateMethod> methods{EstimateMethod::qv2, EstimateMethod::one_step};
    /// Bandwidth in days, or cross validation over `cv_candidates_days`.
    std::optional<double> bandwidth_days;
    std::vector<double> cv_candidates_days{7, 14, 21, 28, 35, 42, 49};
    double floor_theta = kDefaultFloorTheta;
    double level = 0.95;
    /// Interval plug-ins use curves on max(h, fraction * T).
    double ci_bandwidth_fraction = kDefaultCiBandwidthFraction;
    std::optional<ClampBox> clamp = ClampBox{1e-4, 1e2};
    bool discretize_prelim = true;
    unsigned threads = 0;
};

struct RealDataRow {
    std::string window_start;
    EstimateMethod method = EstimateMethod::qv2;
    ThetaEstimate estimate;
};

struct MethodAggregate {
    EstimateMethod method = EstimateMethod::qv2;
    std::size_t converged = 0;
    std::size_t total = 0;
    double mean = std::nan("");
    double sd = std::nan("");
};

/// Runs the requested estimators on one window. Estimators that need more
/// maturities than the window has are left out.
inline std::vector<RealDataRow> analyse_window(const EstimationWindow& w, const RealDataOptions& opt) {
    std::vector<RealDataRow> rows;
    const auto& panel = w.log_panel;
    const std::string start = format_iso_date(w.dates.front());
    const auto qv2 = detail::guarded(EstimateMethod::qv2, [&] { return theta_hat_2(panel); });

    std::optional<VolCurveEstimate> vol;
    std::optional<VolCurveEstimate> ci_vol;
    bool tried = false;
    auto curves = [&]() -> const std::optional<VolCurveEstimate>& {
        if (!tried) {
            tried = true;
            try {
                const double th = qv2.ok() ? *qv2.value : 0.0;
                double h = 0.0;
                if (opt.bandwidth_days) {
                    h = days_to_years(*opt.bandwidth_days);
                } else {
                    std::vector<double> cands;
                    for (double c : opt.cv_candidates_days) {
                        if (days_to_years(c) >= 2.0 * panel.grid().delta() &&
                            days_to_years(c) < panel.grid().horizon()) {
                            cands.push_back(days_to_years(c));
                        }
                    }
                    if (cands.empty()) {
                        throw DomainError("no usable bandwidth candidate for this window");
                    }
                    h = cv_bandwidth(panel, th, cands, opt.floor_theta);
                }
                vol = estimate_vol_curves(panel, th, h, opt.floor_theta);
                const double h_ci = ci_bandwidth(h, panel.grid(), opt.ci_bandwidth_fraction);
                ci_vol = estimate_vol_curves(panel, th, h_ci, opt.floor_theta).with_clamp(opt.clamp);
            } catch (const Error&) {
            }
        }
        return vol;
    };
    auto add_ci = [&](ThetaEstimate e) {
        if (e.ok() && ci_vol) {
            try {
                e = confidence_interval(e, *ci_vol, panel.grid(), opt.level);
            } catch (const Error& err) {
                e.note = err.what();
            }
        }
        return e;
    };

    for (auto m : opt.methods) {
        ThetaEstimate e;
        switch (m) {
        case EstimateMethod::qv2:
            e = curves() ? add_ci(qv2) : qv2;
            break;
        case EstimateMethod::qv3:
            if (panel.rows() < 3) continue;
            e = detail::guarded(m, [&] { return theta_hat_3(panel); });
            break;
        case EstimateMethod::qvd:
            if (panel.rows() < 3) continue;
            e = detail::guarded(m, [&] { return theta_hat_d(panel); });
            break;
        case EstimateMethod::one_step:
            if (!curves()) {
                e = ThetaEstimate::out_of_range(m, "volatility curves unavailable");
            } else {
                const auto clamped = curves()->with_clamp(opt.clamp);
                e = detail::guarded(m, [&] {
                    return one_step(panel, qv2, clamped, {opt.discretize_prelim, opt.clamp});
                });
                e = add_ci(e);
            }
            break;
        }
        rows.push_back(RealDataRow{start, m, std::move(e)});
    }
    return rows;
}

inline std::vector<RealDataRow> analyse_windows(const std::vector<EstimationWindow>& windows,
                                                const RealDataOptions& opt) {
    std::vector<std::vector<RealDataRow>> per(windows.size());
    parallel_for(windows.size(), opt.threads,
                 [&](std::size_t i) { per[i] = analyse_window(windows[i], opt); });
    std::vector<RealDataRow> rows;
    for (auto& p : per) {
        rows.insert(rows.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
    }
    return rows;
}

inline std::vector<MethodAggregate> aggregate(const std::vector<RealDataRow>& rows,
                                              const std::vector<EstimateMethod>& methods) {
    std::vector<MethodAggregate> out;
    for (auto m : methods) {
        MethodAggregate a;
        a.method = m;
        std::vector<double> v;
        for (const auto& r : rows) {
            if (r.method != m) continue;
            ++a.total;
            if (r.estimate.ok()) v.push_back(*r.estimate.value);
        }
        a.converged = v.size();
        if (!v.empty()) a.mean = stats::mean(v);
        if (v.size() >= 2) a.sd = std::sqrt(stats::variance(v));
        out.push_back(a);
    }
    return out;
}

/// Header `window_start,method,value,status,ci_lo,ci_hi`; missing fields are empty.
inline void write_realdata_csv(std::ostream& os, const std::vector<RealDataRow>& rows) {
    os << "window_start,method,value,status,ci_lo,ci_hi\n" << std::setprecision(10);
    for (const auto& r : rows) {
        os << r.window_start << ',' << to_string(r.method) << ',';
        if (r.estimate.value) os << *r.estimate.value;
        os << ',' << to_string(r.estimate.status) << ',';
        if (r.estimate.ci) os << r.estimate.ci->lo;
        os << ',';
        if (r.estimate.ci) os << r.estimate.ci->hi;
        os << '\n';
    }
}

/// Header `method,converged,total,mean,sd`.
inline void write_aggregate_csv(std::ostream& os, const std::vector<MethodAggregate>& agg) {
    os << "method,converged,total,mean,sd\n" << std::setprecision(10);
    for (const auto& a : agg) {
        os << to_string(a.method) << ',' << a.converged << ',' << a.total << ',' << a.mean << ','
           << a.sd << '\n';
    }
}

} // namespace hjm2f
