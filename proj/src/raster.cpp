#include "fluxflow/raster.hpp"

#include <fstream>
#include <iterator>
#include <limits>

#include "fluxflow/error.hpp"

namespace fluxflow {

namespace {

bool is_pnm_space(std::uint8_t c)
{
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

class HeaderReader {
public:
    explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_{bytes} {}

    void skip_space_and_comments()
    {
        while (pos_ < bytes_.size()) {
            auto c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r')
                    ++pos_;
            } else if (is_pnm_space(c)) {
                ++pos_;
            } else {
                return;
            }
        }
    }

    std::size_t number(const char* what)
    {
        skip_space_and_comments();
        if (pos_ >= bytes_.size())
            throw Error{ErrorCode::TruncatedFile, std::string{"header ends before "} + what};
        if (bytes_[pos_] < '0' || bytes_[pos_] > '9')
            throw Error{ErrorCode::UnsupportedFormat, std::string{"malformed header field "} + what};

        std::size_t v = 0;
        while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
            if (v > (std::numeric_limits<std::size_t>::max() - 9) / 10)
                throw Error{ErrorCode::UnsupportedFormat, std::string{"header field too large: "} + what};
            v = v * 10 + (bytes_[pos_] - '0');
            ++pos_;
        }
        return v;
    }

    // Exactly one whitespace byte separates maxval from the raster.
    void single_space()
    {
        if (pos_ >= bytes_.size())
            throw Error{ErrorCode::TruncatedFile, "missing raster data"};
        if (!is_pnm_space(bytes_[pos_]))
            throw Error{ErrorCode::UnsupportedFormat, "expected whitespace after maxval"};
        ++pos_;
    }

    std::size_t pos() const noexcept { return pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 2;
};

} // namespace

FrameRaster FrameRaster::gray(std::size_t width, std::size_t height, std::uint8_t fill)
{
    return FrameRaster{width, height, 1, std::vector<std::uint8_t>(width * height, fill)};
}

FrameRaster FrameRaster::to_gray() const
{
    if (channels == 1)
        return *this;
    FrameRaster out = gray(width, height);
    for (std::size_t i = 0; i < width * height; ++i) {
        unsigned r = pixels[3 * i], g = pixels[3 * i + 1], b = pixels[3 * i + 2];
        out.pixels[i] = static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b) / 1000);
    }
    return out;
}

FrameRaster load_pnm_raster(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        throw Error{ErrorCode::UnsupportedFormat, "expected binary PGM (P5) or PPM (P6) magic"};

    FrameRaster r;
    r.channels = bytes[1] == '5' ? 1 : 3;

    HeaderReader header{bytes};
    r.width = header.number("width");
    r.height = header.number("height");
    const auto maxval = header.number("maxval");
    if (r.width == 0 || r.height == 0)
        throw Error{ErrorCode::UnsupportedFormat, "zero raster dimension"};
    if (maxval != 255)
        throw Error{ErrorCode::UnsupportedDepth, "maxval must be 255, got " + std::to_string(maxval)};
    header.single_space();

    const std::size_t pixel_bytes = r.width * r.height * r.channels;
    const std::size_t available = bytes.size() - header.pos();
    if (available < pixel_bytes)
        throw Error{ErrorCode::TruncatedFile, "expected " + std::to_string(pixel_bytes) + " pixel bytes, found " +
                                                  std::to_string(available)};
    auto first = bytes.begin() + static_cast<std::ptrdiff_t>(header.pos());
    r.pixels.assign(first, first + static_cast<std::ptrdiff_t>(pixel_bytes));
    return r;
}

FrameRaster load_pnm_raster(std::istream& in)
{
    std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>{in}, std::istreambuf_iterator<char>{}};
    return load_pnm_raster(std::span<const std::uint8_t>{bytes});
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream in{path, std::ios::binary};
    if (!in)
        throw Error{ErrorCode::IoError, "cannot open " + path.string()};
    std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>{in}, std::istreambuf_iterator<char>{}};
    if (in.bad())
        throw Error{ErrorCode::IoError, "failed reading " + path.string()};
    return bytes;
}

FrameRaster load_pnm_file(const std::filesystem::path& path)
{
    auto bytes = read_file_bytes(path);
    try {
        return load_pnm_raster(std::span<const std::uint8_t>{bytes});
    } catch (const Error& ex) {
        throw Error{ex.code(), path.string() + ": " + ex.what()};
    }
}

std::vector<std::uint8_t> encode_pnm(const FrameRaster& raster)
{
    std::string header = (raster.channels == 3 ? "P6\n" : "P5\n") + std::to_string(raster.width) + " " +
                         std::to_string(raster.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), raster.pixels.begin(), raster.pixels.end());
    return out;
}

} // namespace fluxflow
