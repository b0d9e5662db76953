#include "tfs/metrics.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "tfs/errors.hpp"

namespace tfs::metrics {

namespace {

void put_real(std::ostream& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, res.ptr - buf);
}

double get_real(const std::string& s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw DataError("trend CSV: cannot parse '" + s + "'");
    return v;
}

std::size_t get_count(const std::string& s) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw DataError("trend CSV: cannot parse '" + s + "'");
    return v;
}

constexpr const char* kTrendHeader = "features,confidence,confidence_var,fp_rate,fn_rate,f1";

}  // namespace

double ConfusionCounts::fp_rate() const {
    return fp + tn == 0 ? 0.0 : static_cast<double>(fp) / static_cast<double>(fp + tn);
}

double ConfusionCounts::fn_rate() const {
    return fn + tp == 0 ? 0.0 : static_cast<double>(fn) / static_cast<double>(fn + tp);
}

ConfusionCounts confusion(std::span<const Label> predictions, std::span<const Label> truth, Label theta) {
    if (predictions.size() != truth.size()) throw ContractViolation("confusion: length mismatch");
    ConfusionCounts c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool predicted = predictions[i] == theta;
        const bool actual = truth[i] == theta;
        if (predicted && actual)
            ++c.tp;
        else if (predicted)
            ++c.fp;
        else if (actual)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

double f1(const ConfusionCounts& counts) {
    const auto denom = 2 * counts.tp + counts.fp + counts.fn;
    return denom == 0 ? 0.0 : 2.0 * static_cast<double>(counts.tp) / static_cast<double>(denom);
}

TrendSeries assemble_trend(std::span<const Evaluation> evaluations) {
    TrendSeries t;
    for (const auto& e : evaluations) {
        t.features.push_back(e.feature_count);
        t.confidence.push_back(e.confidence.confidence_theta);
        t.confidence_var.push_back(e.confidence.variance);
        t.fp_rate.push_back(e.fp_rate);
        t.fn_rate.push_back(e.fn_rate);
        t.f1.push_back(e.f1);
    }
    return t;
}

void write_trend_csv(const TrendSeries& trend, std::ostream& out) {
    out << kTrendHeader << '\n';
    for (std::size_t i = 0; i < trend.size(); ++i) {
        out << trend.features[i];
        for (double v : {trend.confidence[i], trend.confidence_var[i], trend.fp_rate[i], trend.fn_rate[i], trend.f1[i]}) {
            out << ',';
            put_real(out, v);
        }
        out << '\n';
    }
}

TrendSeries read_trend_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kTrendHeader) throw DataError("trend CSV: unexpected header");
    TrendSeries t;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 6) throw DataError("trend CSV: expected 6 fields in '" + line + "'");
        t.features.push_back(get_count(cells[0]));
        t.confidence.push_back(get_real(cells[1]));
        t.confidence_var.push_back(get_real(cells[2]));
        t.fp_rate.push_back(get_real(cells[3]));
        t.fn_rate.push_back(get_real(cells[4]));
        t.f1.push_back(get_real(cells[5]));
    }
    return t;
}

}  // namespace tfs::metrics
