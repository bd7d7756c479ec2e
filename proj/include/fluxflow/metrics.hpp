#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fluxflow/raster.hpp"

namespace fluxflow {

struct FlowVector {
    int dx = 0;
    int dy = 0;
    friend bool operator==(const FlowVector&, const FlowVector&) = default;
};

// One displacement per block-aligned tile that lies fully inside the frame.
struct FlowField {
    std::size_t grid_w = 0;
    std::size_t grid_h = 0;
    std::size_t block = 0;
    std::size_t radius = 0;
    std::vector<FlowVector> vectors;  // row-major, grid_w * grid_h

    const FlowVector& at(std::size_t bx, std::size_t by) const { return vectors[by * grid_w + bx]; }

    // Tile (bx, by) can reach every displacement in the search window
    // without leaving the frame.
    bool is_interior(std::size_t bx, std::size_t by, std::size_t width, std::size_t height) const noexcept;
};

struct MetricsOptions {
    std::size_t block = 8;
    std::size_t radius = 4;
    double min_magnitude = 0.25;  // below this the mean angle is undefined
};

// Per frame pair: mean flow direction and magnitude.
struct MotionProfile {
    std::vector<std::optional<double>> mean_angle;  // (-pi, pi], nullopt when undefined
    std::vector<double> mean_magnitude;

    std::size_t size() const noexcept { return mean_magnitude.size(); }
};

constexpr std::size_t magnitude_bins = 16;
constexpr std::size_t angle_bins = 8;
using TemporalSignature = std::array<double, magnitude_bins + angle_bins>;

struct TemporalReport {
    std::string clip_id;
    std::vector<std::optional<double>> angular_diff;  // nullopt marks an undefined pair
    std::optional<double> angular_diff_mean;
    std::optional<double> angular_diff_std;
    double flicker = 0.0;
    TemporalSignature signature{};
};

// Exhaustive SAD block matching from `prev` to `next`. RGB inputs are
// reduced to luma first. Candidates whose displaced tile would leave the
// frame are skipped. Ties go to the smallest |dx|+|dy|, then smallest dy,
// then smallest dx.
// Throws Error{DimensionMismatch}, Error{InvalidSpec} (block or radius 0,
// block larger than the frame).
FlowField block_matching_flow(const FrameRaster& prev, const FrameRaster& next, std::size_t block,
                              std::size_t radius);

// Mean vector per field. Only interior tiles are averaged when any exist,
// since border tiles see a truncated search window. The angle is undefined
// when the mean vector is shorter than min_magnitude.
MotionProfile motion_profile(std::span<const FlowField> flows, std::size_t width, std::size_t height,
                             double min_magnitude = 0.25);

// Wrapped |a - b| in [0, pi].
double angle_distance(double a, double b) noexcept;

// Entry t compares pair t+1 with pair t. Throws Error{TooFewFrames} with
// fewer than two pairs.
std::vector<std::optional<double>> angular_difference_series(const MotionProfile& profile);

struct SeriesStats {
    std::optional<double> mean;
    std::optional<double> stddev;  // population
};
SeriesStats series_stats(std::span<const std::optional<double>> series);

// Mean over consecutive pairs of the mean absolute sample difference.
// Throws Error{TooFewFrames}, Error{DimensionMismatch}.
double flicker_score(std::span<const FrameRaster> frames);

// 16 magnitude bins of width 1 px (last bin open-ended) over every pair,
// then 8 angle bins of width pi/4 centred on 0, pi/4, ..., over defined
// angles. Each half is L1-normalized when it has mass.
TemporalSignature temporal_signature(const MotionProfile& profile);

// Full report for one clip of at least three frames.
TemporalReport analyze_clip(std::string clip_id, std::span<const FrameRaster> frames,
                            const MetricsOptions& options = {});

// {"clip_id", "angular_diff", "angular_diff_mean", "angular_diff_std",
//  "flicker", "signature"}; undefined values are null.
std::string report_to_json(const TemporalReport& report);

// CSV rows "clip_id,t,angular_diff"; undefined entries leave the value empty.
void write_angular_csv_header(std::ostream& out);
void write_angular_csv_rows(std::ostream& out, const TemporalReport& report);

} // namespace fluxflow
