#include "tsad/stationarity.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace tsad {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr std::size_t kMinObservations = 20;

// Design for lags 0..p on rows t = first..n-2 of the differenced series:
// columns [1, y_t, dy_{t-1}, ..., dy_{t-p}], response dy_t.
void build_design(std::span<const double> y, std::span<const double> dy, std::size_t lags, std::size_t first,
                  MatrixXd& x, VectorXd& response) {
    const auto rows = static_cast<Eigen::Index>(dy.size() - first);
    x.resize(rows, static_cast<Eigen::Index>(lags + 2));
    response.resize(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto t = first + static_cast<std::size_t>(r);
        response(r) = dy[t];
        x(r, 0) = 1.0;
        x(r, 1) = y[t];
        for (std::size_t i = 1; i <= lags; ++i) {
            x(r, static_cast<Eigen::Index>(i + 1)) = dy[t - i];
        }
    }
}

void require_full_rank(const Eigen::HouseholderQR<MatrixXd>& qr, std::size_t lags) {
    const MatrixXd& packed = qr.matrixQR();
    const auto k = packed.cols();
    double largest = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
        largest = std::max(largest, std::abs(packed(i, i)));
    }
    const double tol = largest * static_cast<double>(packed.rows()) * std::numeric_limits<double>::epsilon();
    for (Eigen::Index i = 0; i < k; ++i) {
        if (!(std::abs(packed(i, i)) > tol)) {
            throw NumericalError("singular ADF design matrix (lag " + std::to_string(lags) + "): column " +
                                 std::to_string(i) + " is collinear with the preceding regressors");
        }
    }
}

}  // namespace

std::vector<double> DifferencedFrame::reconstruct(std::size_t channel) const {
    const auto d = deltas.channel_at(channel);
    std::vector<double> out;
    out.reserve(d.size() + 1);
    double level = origin.at(channel);
    out.push_back(level);
    for (double step : d) {
        level += step;
        out.push_back(level);
    }
    return out;
}

std::vector<double> difference(std::span<const double> series) {
    std::vector<double> out;
    if (series.size() < 2) {
        return out;
    }
    out.reserve(series.size() - 1);
    for (std::size_t t = 1; t < series.size(); ++t) {
        out.push_back(series[t] - series[t - 1]);
    }
    return out;
}

DifferencedFrame difference(const TimeSeriesFrame& frame) {
    if (frame.rows() < 2) {
        throw std::length_error("difference: frame needs at least 2 rows, has " + std::to_string(frame.rows()));
    }
    if (frame.missing_count() != 0) {
        throw std::invalid_argument("difference: frame has missing cells; fill them first");
    }
    std::vector<std::vector<double>> values;
    std::vector<double> origin;
    for (std::size_t c = 0; c < frame.channels().size(); ++c) {
        values.push_back(difference(frame.channel_at(c)));
        origin.push_back(frame.channel_at(c)[0]);
    }
    const auto& ts = frame.timestamps();
    const auto& labels = frame.labels();
    return DifferencedFrame{
        TimeSeriesFrame({ts.begin() + 1, ts.end()}, frame.channels(), std::move(values), {labels.begin() + 1, labels.end()}),
        std::move(origin), ts.front()};
}

std::string_view verdict_name(AdfVerdict v) {
    switch (v) {
        case AdfVerdict::Stationary1: return "stationary@1%";
        case AdfVerdict::Stationary5: return "stationary@5%";
        case AdfVerdict::Stationary10: return "stationary@10%";
        case AdfVerdict::NonStationary: return "non-stationary";
    }
    return "?";
}

AdfVerdict adf_verdict(double statistic) {
    if (statistic < kAdfCriticalValues[0]) {
        return AdfVerdict::Stationary1;
    }
    if (statistic < kAdfCriticalValues[1]) {
        return AdfVerdict::Stationary5;
    }
    if (statistic < kAdfCriticalValues[2]) {
        return AdfVerdict::Stationary10;
    }
    return AdfVerdict::NonStationary;
}

bool AdfResult::stationary_at(double level) const {
    std::size_t idx = 0;
    if (level == 0.01) {
        idx = 0;
    } else if (level == 0.05) {
        idx = 1;
    } else if (level == 0.10) {
        idx = 2;
    } else {
        throw std::invalid_argument("stationary_at: level must be 0.01, 0.05 or 0.10");
    }
    return statistic < critical_values[idx];
}

std::size_t schwert_max_lag(std::size_t n) {
    return static_cast<std::size_t>(std::floor(12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
}

AdfResult adf_test(std::span<const double> series, std::optional<std::size_t> max_lag) {
    const auto n = series.size();
    for (double v : series) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("adf_test: series contains non-finite values");
        }
    }
    if (n >= 1 && std::all_of(series.begin(), series.end(), [&](double v) { return v == series[0]; })) {
        throw DegenerateInputError("adf_test: constant series has zero variance");
    }
    const std::size_t cap = max_lag.value_or(schwert_max_lag(n));
    if (n < 2 || n - 1 < cap + kMinObservations) {
        throw std::invalid_argument("adf_test: series of length " + std::to_string(n) +
                                    " too short for max lag " + std::to_string(cap));
    }
    const auto dy = difference(series);

    MatrixXd x;
    VectorXd response;

    // Lag selection: one QR of the widest design yields the residual sum of
    // squares of every nested model through the trailing entries of Q'y.
    std::size_t best_lag = 0;
    {
        build_design(series, dy, cap, cap, x, response);
        Eigen::HouseholderQR<MatrixXd> qr(x);
        require_full_rank(qr, cap);
        const VectorXd qty = qr.householderQ().adjoint() * response;
        const auto nobs = static_cast<double>(response.size());
        double tail = qty.tail(qty.size() - static_cast<Eigen::Index>(cap + 2)).squaredNorm();
        std::vector<double> ssr(cap + 1);
        ssr[cap] = tail;
        for (std::size_t p = cap; p-- > 0;) {
            tail += qty(static_cast<Eigen::Index>(p + 2)) * qty(static_cast<Eigen::Index>(p + 2));
            ssr[p] = tail;
        }
        double best_aic = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p <= cap; ++p) {
            if (!(ssr[p] > 0.0)) {
                continue;
            }
            const double aic = nobs * std::log(ssr[p] / nobs) + 2.0 * static_cast<double>(p + 2);
            if (aic < best_aic) {
                best_aic = aic;
                best_lag = p;
            }
        }
    }

    build_design(series, dy, best_lag, best_lag, x, response);
    Eigen::HouseholderQR<MatrixXd> qr(x);
    require_full_rank(qr, best_lag);
    const auto k = x.cols();
    const auto nobs = x.rows();
    const VectorXd qty = qr.householderQ().adjoint() * response;
    const auto r = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    const VectorXd coef = r.solve(qty.head(k));
    const double ssr = qty.tail(nobs - k).squaredNorm();
    if (!(ssr > 0.0)) {
        throw DegenerateInputError("adf_test: regression fits exactly, residual variance is zero");
    }
    const double sigma2 = ssr / static_cast<double>(nobs - k);
    const MatrixXd r_inv = r.solve(MatrixXd::Identity(k, k));
    const double var_gamma = sigma2 * r_inv.row(1).squaredNorm();

    AdfResult result;
    result.statistic = coef(1) / std::sqrt(var_gamma);
    result.lag = best_lag;
    result.nobs = static_cast<std::size_t>(nobs);
    result.verdict = adf_verdict(result.statistic);
    return result;
}

std::vector<ChannelAdf> adf_report(const TimeSeriesFrame& frame, std::optional<std::size_t> max_lag) {
    std::vector<ChannelAdf> out;
    for (std::size_t c = 0; c < frame.channels().size(); ++c) {
        const auto id = frame.channels()[c];
        const std::string prefix = std::string(channel_name(id)) + ": ";
        try {
            for (std::size_t r = 0; r < frame.rows(); ++r) {
                if (frame.is_missing(c, r)) {
                    throw std::invalid_argument("channel has missing cells; clean the frame first");
                }
            }
            out.push_back({id, adf_test(frame.channel_at(c), max_lag)});
        } catch (const DegenerateInputError& e) {
            throw ChannelAdfError(id, ChannelAdfError::Kind::Degenerate, prefix + e.what());
        } catch (const NumericalError& e) {
            throw ChannelAdfError(id, ChannelAdfError::Kind::Numerical, prefix + e.what());
        } catch (const std::invalid_argument& e) {
            throw ChannelAdfError(id, ChannelAdfError::Kind::Argument, prefix + e.what());
        }
    }
    return out;
}

std::vector<ChannelAdf> adf_report(const DifferencedFrame& frame, std::optional<std::size_t> max_lag) {
    return adf_report(frame.deltas, max_lag);
}

void write_adf_csv(std::ostream& out, std::span<const ChannelAdf> report) {
    const auto row = [&](std::string_view label, auto&& cell) {
        out << label;
        for (const auto& entry : report) {
            out << ',' << cell(entry.result);
        }
        out << '\n';
    };
    for (const auto& entry : report) {
        out << ',' << channel_name(entry.channel);
    }
    out << '\n';
    const auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", v);
        return std::string(buf);
    };
    const auto cv = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.5f", v);
        return std::string(buf);
    };
    row("statistic", [&](const AdfResult& r) { return fmt(r.statistic); });
    row("verdict", [](const AdfResult& r) { return std::string(verdict_name(r.verdict)); });
    row("1%", [&](const AdfResult& r) { return cv(r.critical_values[0]); });
    row("5%", [&](const AdfResult& r) { return cv(r.critical_values[1]); });
    row("10%", [&](const AdfResult& r) { return cv(r.critical_values[2]); });
}

}  // namespace tsad
