#pragma once

#include <array>
#include <string>
#include <vector>

#include "vistra/frame.hpp"

namespace vistra::metrics {

// Returned by psnr_luma for identical content.
inline constexpr double psnr_cap_db = 999.0;

// 10 log10(MAX^2 / MSE) over luma, MAX = 2^coding_bit_depth - 1.
double psnr_luma(const Frame& ref, const Frame& test);

// Mean of per-frame psnr_luma over two equally long sequences.
double psnr_luma_sequence(const VideoSequence& ref, const VideoSequence& test);

enum class QualityMetric { PSNR, VMAF };

struct RdPoint {
    double bitrate_kbps = 0.0;
    double quality = 0.0;
};

// At least four points with strictly increasing bitrate (sorted on construction).
class RdCurve {
public:
    RdCurve(std::vector<RdPoint> points, QualityMetric metric = QualityMetric::PSNR);

    const std::vector<RdPoint>& points() const { return points_; }
    QualityMetric metric() const { return metric_; }

    // Quality is not strictly increasing with rate.
    bool non_monotone() const;

private:
    std::vector<RdPoint> points_;
    QualityMetric metric_;
};

// Cubic in t = x - shift: y = c0 + c1 t + c2 t^2 + c3 t^3.
struct Cubic {
    std::array<double, 4> c{};
    double shift = 0.0;

    double operator()(double x) const {
        const double t = x - shift;
        return ((c[3] * t + c[2]) * t + c[1]) * t + c[0];
    }
    double integral(double a, double b) const;
};

// Least-squares cubic; x is centred on its mean for conditioning.
Cubic fit_cubic(const std::vector<double>& x, const std::vector<double>& y);

enum class BdKind { BD_RATE, BD_QUALITY };

struct BdResult {
    double value = 0.0; // percent for BD_RATE, quality units for BD_QUALITY
    std::vector<std::string> warnings;
};

// Classic Bjontegaard delta between cubic fits over the overlapping interval.
BdResult bd_metric(const RdCurve& anchor, const RdCurve& test, BdKind kind);

struct AboveCurve {
    bool above = false;
    bool extrapolated = false; // point rate outside the curve's range
};

// Strictly above the cubic fit of quality over log10(rate).
AboveCurve point_above_curve(const RdCurve& curve, const RdPoint& point);

// Runs an external VMAF tool built from `tool_command` ({ref} {dist} {width}
// {height} {bitdepth} placeholders) and returns its pooled score.
double vmaf_external(const std::string& ref_path, const std::string& test_path, int width, int height, int bit_depth,
                     const std::string& tool_command);

// Extracts the pooled score from tool output: the last "VMAF score[:=] x"
// occurrence, or the whole output if it is a single number. Must lie in [0, 100].
double parse_vmaf_output(const std::string& output);

} // namespace vistra::metrics
