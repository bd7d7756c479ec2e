#include "fluxflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <numbers>

#include <json.hpp>

#include "fluxflow/error.hpp"

namespace fluxflow {

namespace {

constexpr double pi = std::numbers::pi;

void check_same_size(const FrameRaster& a, const FrameRaster& b)
{
    if (a.width != b.width || a.height != b.height)
        throw Error{ErrorCode::DimensionMismatch, std::to_string(a.width) + "x" + std::to_string(a.height) +
                                                      " vs " + std::to_string(b.width) + "x" +
                                                      std::to_string(b.height)};
}

// Search order realizing the tie-break: |dx|+|dy|, then dy, then dx.
std::vector<FlowVector> candidate_order(int radius)
{
    std::vector<FlowVector> c;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            c.push_back({dx, dy});
    std::sort(c.begin(), c.end(), [](const FlowVector& a, const FlowVector& b) {
        int la = std::abs(a.dx) + std::abs(a.dy), lb = std::abs(b.dx) + std::abs(b.dy);
        if (la != lb)
            return la < lb;
        if (a.dy != b.dy)
            return a.dy < b.dy;
        return a.dx < b.dx;
    });
    return c;
}

} // namespace

bool FlowField::is_interior(std::size_t bx, std::size_t by, std::size_t width, std::size_t height) const noexcept
{
    const std::size_t x0 = bx * block, y0 = by * block;
    return x0 >= radius && y0 >= radius && x0 + block + radius <= width && y0 + block + radius <= height;
}

FlowField block_matching_flow(const FrameRaster& prev, const FrameRaster& next, std::size_t block,
                              std::size_t radius)
{
    check_same_size(prev, next);
    if (block == 0 || radius == 0)
        throw Error{ErrorCode::InvalidSpec, "block and radius must be positive"};
    if (block > std::min(prev.width, prev.height))
        throw Error{ErrorCode::InvalidSpec, "block " + std::to_string(block) + " exceeds frame size"};
    if (radius > static_cast<std::size_t>(std::numeric_limits<int>::max() / 2))
        throw Error{ErrorCode::InvalidSpec, "search radius too large"};

    const FrameRaster a = prev.to_gray();
    const FrameRaster b = next.to_gray();
    const auto w = static_cast<std::ptrdiff_t>(a.width);
    const auto h = static_cast<std::ptrdiff_t>(a.height);
    const auto bs = static_cast<std::ptrdiff_t>(block);

    FlowField field;
    field.grid_w = a.width / block;
    field.grid_h = a.height / block;
    field.block = block;
    field.radius = radius;
    field.vectors.reserve(field.grid_w * field.grid_h);

    const auto candidates = candidate_order(static_cast<int>(radius));
    for (std::size_t by = 0; by < field.grid_h; ++by) {
        for (std::size_t bx = 0; bx < field.grid_w; ++bx) {
            const auto x0 = static_cast<std::ptrdiff_t>(bx) * bs;
            const auto y0 = static_cast<std::ptrdiff_t>(by) * bs;
            FlowVector best{};
            std::uint64_t best_sad = std::numeric_limits<std::uint64_t>::max();
            for (const auto& c : candidates) {
                const auto nx = x0 + c.dx, ny = y0 + c.dy;
                if (nx < 0 || ny < 0 || nx + bs > w || ny + bs > h)
                    continue;
                std::uint64_t sad = 0;
                for (std::ptrdiff_t y = 0; y < bs && sad < best_sad; ++y) {
                    const auto* pa = &a.pixels[static_cast<std::size_t>((y0 + y) * w + x0)];
                    const auto* pb = &b.pixels[static_cast<std::size_t>((ny + y) * w + nx)];
                    for (std::ptrdiff_t x = 0; x < bs; ++x)
                        sad += static_cast<std::uint64_t>(std::abs(int{pa[x]} - int{pb[x]}));
                }
                if (sad < best_sad) {
                    best_sad = sad;
                    best = c;
                    if (sad == 0)
                        break;  // later candidates can only tie
                }
            }
            field.vectors.push_back(best);
        }
    }
    return field;
}

MotionProfile motion_profile(std::span<const FlowField> flows, std::size_t width, std::size_t height,
                             double min_magnitude)
{
    MotionProfile profile;
    profile.mean_angle.reserve(flows.size());
    profile.mean_magnitude.reserve(flows.size());
    for (const auto& f : flows) {
        double sx = 0, sy = 0;
        std::size_t used = 0;
        for (int pass = 0; pass < 2 && used == 0; ++pass) {
            for (std::size_t by = 0; by < f.grid_h; ++by)
                for (std::size_t bx = 0; bx < f.grid_w; ++bx)
                    if (pass == 1 || f.is_interior(bx, by, width, height)) {
                        sx += f.at(bx, by).dx;
                        sy += f.at(bx, by).dy;
                        ++used;
                    }
        }
        const double mx = used ? sx / static_cast<double>(used) : 0.0;
        const double my = used ? sy / static_cast<double>(used) : 0.0;
        const double mag = std::hypot(mx, my);
        profile.mean_magnitude.push_back(mag);
        if (mag < min_magnitude) {
            profile.mean_angle.push_back(std::nullopt);
        } else {
            double a = std::atan2(my, mx);
            profile.mean_angle.push_back(a <= -pi ? pi : a);
        }
    }
    return profile;
}

double angle_distance(double a, double b) noexcept
{
    double d = std::fmod(std::abs(a - b), 2 * pi);
    return d > pi ? 2 * pi - d : d;
}

std::vector<std::optional<double>> angular_difference_series(const MotionProfile& profile)
{
    if (profile.mean_angle.size() < 2)
        throw Error{ErrorCode::TooFewFrames, "angular differences need at least two flow fields (three frames)"};
    std::vector<std::optional<double>> out;
    out.reserve(profile.mean_angle.size() - 1);
    for (std::size_t t = 0; t + 1 < profile.mean_angle.size(); ++t) {
        const auto& a = profile.mean_angle[t];
        const auto& b = profile.mean_angle[t + 1];
        if (a && b)
            out.push_back(angle_distance(*b, *a));
        else
            out.push_back(std::nullopt);
    }
    return out;
}

SeriesStats series_stats(std::span<const std::optional<double>> series)
{
    double sum = 0;
    std::size_t n = 0;
    for (const auto& v : series)
        if (v) {
            sum += *v;
            ++n;
        }
    if (n == 0)
        return {};
    const double mean = sum / static_cast<double>(n);
    double sq = 0;
    for (const auto& v : series)
        if (v)
            sq += (*v - mean) * (*v - mean);
    return SeriesStats{mean, std::sqrt(sq / static_cast<double>(n))};
}

double flicker_score(std::span<const FrameRaster> frames)
{
    if (frames.size() < 2)
        throw Error{ErrorCode::TooFewFrames, "flicker needs at least two frames"};
    double total = 0;
    for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
        const auto& a = frames[t];
        const auto& b = frames[t + 1];
        check_same_size(a, b);
        if (a.channels != b.channels)
            throw Error{ErrorCode::DimensionMismatch, "channel count changes between frames"};
        std::uint64_t sum = 0;
        for (std::size_t i = 0; i < a.pixels.size(); ++i)
            sum += static_cast<std::uint64_t>(std::abs(int{a.pixels[i]} - int{b.pixels[i]}));
        total += static_cast<double>(sum) / static_cast<double>(a.pixels.size());
    }
    return total / static_cast<double>(frames.size() - 1);
}

TemporalSignature temporal_signature(const MotionProfile& profile)
{
    TemporalSignature sig{};
    double mag_mass = 0, angle_mass = 0;
    for (double m : profile.mean_magnitude) {
        auto bin = std::min<std::size_t>(magnitude_bins - 1, static_cast<std::size_t>(std::floor(m)));
        sig[bin] += 1.0;
        mag_mass += 1.0;
    }

    const double width = 2 * pi / angle_bins;
    for (const auto& a : profile.mean_angle) {
        if (!a)
            continue;
        double shifted = *a + width / 2;
        if (shifted < 0)
            shifted += 2 * pi;
        auto bin = static_cast<std::size_t>(std::floor(shifted / width)) % angle_bins;
        sig[magnitude_bins + bin] += 1.0;
        angle_mass += 1.0;
    }

    for (std::size_t i = 0; i < magnitude_bins && mag_mass > 0; ++i)
        sig[i] /= mag_mass;
    for (std::size_t i = magnitude_bins; i < sig.size() && angle_mass > 0; ++i)
        sig[i] /= angle_mass;
    return sig;
}

TemporalReport analyze_clip(std::string clip_id, std::span<const FrameRaster> frames, const MetricsOptions& options)
{
    if (frames.size() < 3)
        throw Error{ErrorCode::TooFewFrames, "clip \"" + clip_id + "\" has " + std::to_string(frames.size()) +
                                                 " frames, at least 3 are needed"};

    std::vector<FlowField> flows;
    flows.reserve(frames.size() - 1);
    for (std::size_t t = 0; t + 1 < frames.size(); ++t)
        flows.push_back(block_matching_flow(frames[t], frames[t + 1], options.block, options.radius));
    const auto profile = motion_profile(flows, frames[0].width, frames[0].height, options.min_magnitude);

    TemporalReport report;
    report.clip_id = std::move(clip_id);
    report.angular_diff = angular_difference_series(profile);
    auto stats = series_stats(report.angular_diff);
    report.angular_diff_mean = stats.mean;
    report.angular_diff_std = stats.stddev;
    report.flicker = flicker_score(frames);
    report.signature = temporal_signature(profile);
    return report;
}

std::string report_to_json(const TemporalReport& report)
{
    using ojson = nlohmann::ordered_json;
    auto opt = [](const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); };

    ojson j;
    j["clip_id"] = report.clip_id;
    j["angular_diff"] = ojson::array();
    for (const auto& v : report.angular_diff)
        j["angular_diff"].push_back(opt(v));
    j["angular_diff_mean"] = opt(report.angular_diff_mean);
    j["angular_diff_std"] = opt(report.angular_diff_std);
    j["flicker"] = report.flicker;
    j["signature"] = report.signature;
    return j.dump();
}

void write_angular_csv_header(std::ostream& out)
{
    out << "clip_id,t,angular_diff\n";
}

void write_angular_csv_rows(std::ostream& out, const TemporalReport& report)
{
    char buf[64];
    for (std::size_t t = 0; t < report.angular_diff.size(); ++t) {
        out << report.clip_id << ',' << t << ',';
        if (const auto& v = report.angular_diff[t]) {
            std::snprintf(buf, sizeof buf, "%.17g", *v);
            out << buf;
        }
        out << '\n';
    }
}

} // namespace fluxflow
