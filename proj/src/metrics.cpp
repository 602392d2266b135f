#include "vistra/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <regex>

#include "vistra/error.hpp"
#include "vistra/process.hpp"

namespace vistra::metrics {

double psnr_luma(const Frame& ref, const Frame& test) {
    if (ref.width != test.width || ref.height != test.height)
        throw ConfigError("PSNR: frame dimensions differ");
    if (ref.coding_bit_depth != test.coding_bit_depth)
        throw ConfigError("PSNR: coding bit depths differ");
    const auto& a = ref.luma().samples;
    const auto& b = test.luma().samples;
    double sse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        sse += d * d;
    }
    if (sse == 0.0)
        return psnr_cap_db;
    const double max = std::ldexp(1.0, ref.coding_bit_depth) - 1.0;
    const double mse = sse / static_cast<double>(a.size());
    return std::min(psnr_cap_db, 10.0 * std::log10(max * max / mse));
}

double psnr_luma_sequence(const VideoSequence& ref, const VideoSequence& test) {
    if (ref.size() != test.size())
        throw ConfigError("PSNR: sequences have " + std::to_string(ref.size()) + " and " + std::to_string(test.size()) +
                          " frames");
    if (ref.empty())
        throw ConfigError("PSNR: empty sequences");
    double acc = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i)
        acc += psnr_luma(ref.frames[i], test.frames[i]);
    return acc / static_cast<double>(ref.size());
}

RdCurve::RdCurve(std::vector<RdPoint> points, QualityMetric metric) : points_(std::move(points)), metric_(metric) {
    if (points_.size() < 4)
        throw ConfigError("RD curve needs at least 4 points, got " + std::to_string(points_.size()));
    std::ranges::sort(points_, {}, &RdPoint::bitrate_kbps);
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (!(points_[i].bitrate_kbps > 0.0) || !std::isfinite(points_[i].bitrate_kbps) ||
            !std::isfinite(points_[i].quality))
            throw ConfigError("RD curve points need positive finite bitrate and finite quality");
        if (i > 0 && points_[i].bitrate_kbps <= points_[i - 1].bitrate_kbps)
            throw ConfigError("RD curve bitrates must be strictly increasing");
    }
}

bool RdCurve::non_monotone() const {
    for (std::size_t i = 1; i < points_.size(); ++i)
        if (points_[i].quality <= points_[i - 1].quality)
            return true;
    return false;
}

double Cubic::integral(double a, double b) const {
    auto anti = [this](double x) {
        const double t = x - shift;
        return (((c[3] / 4.0 * t + c[2] / 3.0) * t + c[1] / 2.0) * t + c[0]) * t;
    };
    return anti(b) - anti(a);
}

Cubic fit_cubic(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 4)
        throw ConfigError("cubic fit needs at least 4 (x, y) pairs");
    Cubic fit;
    double mean = 0.0;
    for (double v : x)
        mean += v;
    fit.shift = mean / static_cast<double>(x.size());

    const Eigen::Index n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd a(n, 4);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = x[i] - fit.shift;
        a(i, 0) = 1.0;
        a(i, 1) = t;
        a(i, 2) = t * t;
        a(i, 3) = t * t * t;
        b(i) = y[i];
    }
    const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
    for (int k = 0; k < 4; ++k)
        fit.c[k] = coef(k);
    return fit;
}

namespace {

struct Fitted {
    Cubic cubic;
    double lo, hi;
};

// BD_RATE fits log10(rate) over quality; BD_QUALITY fits quality over log10(rate).
Fitted fit_curve(const RdCurve& curve, BdKind kind) {
    std::vector<double> q, r;
    for (const auto& p : curve.points()) {
        q.push_back(p.quality);
        r.push_back(std::log10(p.bitrate_kbps));
    }
    const auto& x = kind == BdKind::BD_RATE ? q : r;
    const auto& y = kind == BdKind::BD_RATE ? r : q;
    return {fit_cubic(x, y), *std::ranges::min_element(x), *std::ranges::max_element(x)};
}

} // namespace

BdResult bd_metric(const RdCurve& anchor, const RdCurve& test, BdKind kind) {
    if (anchor.metric() != test.metric())
        throw ConfigError("BD metric needs curves of the same quality metric");
    BdResult result;
    if (anchor.non_monotone())
        result.warnings.emplace_back("anchor curve quality is not monotone in rate; using fitted values");
    if (test.non_monotone())
        result.warnings.emplace_back("test curve quality is not monotone in rate; using fitted values");

    const Fitted fa = fit_curve(anchor, kind);
    const Fitted ft = fit_curve(test, kind);
    const double lo = std::max(fa.lo, ft.lo);
    const double hi = std::min(fa.hi, ft.hi);
    if (!(hi > lo))
        throw ConfigError("BD metric: curves do not overlap");
    const double avg = (ft.cubic.integral(lo, hi) - fa.cubic.integral(lo, hi)) / (hi - lo);
    result.value = kind == BdKind::BD_RATE ? (std::pow(10.0, avg) - 1.0) * 100.0 : avg;
    return result;
}

AboveCurve point_above_curve(const RdCurve& curve, const RdPoint& point) {
    if (!(point.bitrate_kbps > 0.0))
        throw ConfigError("RD point bitrate must be positive");
    const Fitted f = fit_curve(curve, BdKind::BD_QUALITY);
    const double x = std::log10(point.bitrate_kbps);
    const double fitted = f.cubic(x);
    // Points on the curve itself must not count as above it.
    const double tol = 1e-9 * std::max(1.0, std::abs(fitted));
    return {point.quality > fitted + tol, x < f.lo || x > f.hi};
}

double parse_vmaf_output(const std::string& output) {
    static const std::regex score_re(R"(VMAF score\s*[:=]\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?))",
                                     std::regex::icase);
    std::string number;
    for (auto it = std::sregex_iterator(output.begin(), output.end(), score_re); it != std::sregex_iterator(); ++it)
        number = (*it)[1].str();
    if (number.empty()) {
        const auto first = output.find_first_not_of(" \t\r\n");
        const auto last = output.find_last_not_of(" \t\r\n");
        if (first != std::string::npos)
            number = output.substr(first, last - first + 1);
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), value);
    if (number.empty() || ec != std::errc() || ptr != number.data() + number.size())
        throw AdapterError("could not parse a VMAF score from tool output");
    if (!(value >= 0.0 && value <= 100.0))
        throw AdapterError("VMAF score " + number + " outside [0, 100]");
    return value;
}

double vmaf_external(const std::string& ref_path, const std::string& test_path, int width, int height, int bit_depth,
                     const std::string& tool_command) {
    if (count_placeholder(tool_command, "ref") != 1 || count_placeholder(tool_command, "dist") != 1)
        throw ConfigError("VMAF command template needs exactly one {ref} and one {dist}");
    const std::string cmd = expand_template(tool_command, {{"ref", ref_path},
                                                           {"dist", test_path},
                                                           {"width", std::to_string(width)},
                                                           {"height", std::to_string(height)},
                                                           {"bitdepth", std::to_string(bit_depth)}});
    const ProcessResult r = run_shell(cmd);
    if (r.exit_code == 127)
        throw AdapterError("VMAF tool not found: " + cmd);
    if (r.exit_code != 0)
        throw AdapterError("VMAF tool exited with " + std::to_string(r.exit_code) + ": " + r.err);
    return parse_vmaf_output(r.out);
}

} // namespace vistra::metrics
