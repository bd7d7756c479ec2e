#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <vector>

namespace fluxflow {

// 8-bit raster, row-major, channels interleaved.
struct FrameRaster {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 1;  // 1 (gray) or 3 (RGB)
    std::vector<std::uint8_t> pixels;

    static FrameRaster gray(std::size_t width, std::size_t height, std::uint8_t fill = 0);

    std::uint8_t at(std::size_t x, std::size_t y, std::size_t c = 0) const
    {
        return pixels[(y * width + x) * channels + c];
    }
    std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c = 0)
    {
        return pixels[(y * width + x) * channels + c];
    }

    // Luma (299R + 587G + 114B) / 1000 for RGB; a copy for gray.
    FrameRaster to_gray() const;

    friend bool operator==(const FrameRaster&, const FrameRaster&) = default;
};

// Binary PGM (P5) or PPM (P6) with maxval 255. Header tokens may be separated
// by any PNM whitespace, with '#' comments running to end of line.
// Throws Error{UnsupportedFormat | UnsupportedDepth | TruncatedFile}.
FrameRaster load_pnm_raster(std::istream& in);
FrameRaster load_pnm_raster(std::span<const std::uint8_t> bytes);
FrameRaster load_pnm_file(const std::filesystem::path& path);

// Canonical encoding: "P5\n<w> <h>\n255\n" followed by pixel bytes.
std::vector<std::uint8_t> encode_pnm(const FrameRaster& raster);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

} // namespace fluxflow
