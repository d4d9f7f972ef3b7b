#pragma once

// Grayscale rendering of sinusoidal fields, binary PGM (P5) I/O, and the
// noisy-texture recovery demo.

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "lad2d/error.hpp"
#include "lad2d/estimator.hpp"
#include "lad2d/model.hpp"
#include "lad2d/noise.hpp"

namespace lad2d {

struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  ///< row-major, height rows of width bytes

    friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

inline void validate(const GrayImage& img) {
    if (img.width < 1 || img.height < 1) throw InvalidArgument("image dimensions must be positive");
    if (img.pixels.size() != static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height))
        throw InvalidArgument("image pixel count does not match width * height");
}

/// Pixel floor(255 (clamp(v, lo, hi) - lo) / (hi - lo) + 1/2). Rows of the
/// field (index t) become image rows, so the image is S wide and T high.
inline GrayImage field_to_image(const SignalField& field, double lo, double hi) {
    if (!(lo < hi)) throw InvalidArgument("field_to_image: need lo < hi");
    GrayImage img{field.cols(), field.rows(), {}};
    img.pixels.reserve(field.size());
    for (double v : field.values()) {
        const double x = 255.0 * (std::clamp(v, lo, hi) - lo) / (hi - lo);
        img.pixels.push_back(static_cast<std::uint8_t>(std::min(255.0, std::floor(x + 0.5))));
    }
    return img;
}

/// Range (-M, M) with M the sum of component magnitudes: bounds the clean field.
inline std::pair<double, double> default_render_range(const ModelParams& params) {
    const double m = params.total_magnitude();
    if (!(m > 0.0)) throw InvalidArgument("default_render_range: model has zero amplitude");
    return {-m, m};
}

/// Field's own (min, max); a constant field gets a unit-wide range around it.
inline std::pair<double, double> default_render_range(const SignalField& field) {
    const auto [lo, hi] = std::minmax_element(field.values().begin(), field.values().end());
    if (*lo < *hi) return {*lo, *hi};
    return {*lo - 0.5, *hi + 0.5};
}

inline GrayImage field_to_image(const SignalField& field) {
    const auto [lo, hi] = default_render_range(field);
    return field_to_image(field, lo, hi);
}

inline std::string write_pgm(const GrayImage& img) {
    validate(img);
    std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    out.append(img.pixels.begin(), img.pixels.end());
    return out;
}

/// Accepts any whitespace and '#' comments in the header, as PGM allows.
inline GrayImage read_pgm(const std::string& bytes) {
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_uint = [&](const char* what) {
        skip_space();
        const std::size_t start = pos;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
        if (start == pos || pos - start > 9) throw IoError(std::string("malformed PGM header: bad ") + what);
        return std::stoi(bytes.substr(start, pos - start));
    };

    if (bytes.size() < 2 || bytes[0] != 'P') throw IoError("malformed PGM header: missing magic number");
    if (bytes[1] != '5') throw IoError("unsupported PGM variant: P" + std::string(1, bytes[1]));
    pos = 2;
    GrayImage img;
    img.width = read_uint("width");
    img.height = read_uint("height");
    const int maxval = read_uint("maxval");
    if (img.width < 1 || img.height < 1) throw IoError("malformed PGM header: dimensions must be positive");
    if (maxval != 255) throw IoError("unsupported PGM maxval " + std::to_string(maxval) + " (expected 255)");
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
        throw IoError("malformed PGM header: no separator before pixel data");
    ++pos;
    const std::size_t n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
    if (bytes.size() - pos < n)
        throw IoError("truncated PGM payload: expected " + std::to_string(n) + " bytes, got " +
                      std::to_string(bytes.size() - pos));
    img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
    return img;
}

inline double mean_abs_pixel_error(const GrayImage& a, const GrayImage& b) {
    if (a.width != b.width || a.height != b.height) throw InvalidArgument("images differ in size");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) acc += std::abs(int(a.pixels[i]) - int(b.pixels[i]));
    return acc / static_cast<double>(a.pixels.size());
}

struct TextureResult {
    GrayImage noisy;
    GrayImage clean;
    GrayImage recovered;
    EstimateReport report;
    double lo = 0.0, hi = 0.0;
};

/// Simulates y = truth + noise, fits by `method` and renders the noisy,
/// clean and re-synthesized fields with the truth's (-M, M) range. Fit
/// errors propagate as exceptions.
inline TextureResult texture_demo(const ModelParams& truth, const Grid& grid, const NoiseSpec& noise, RngSeed seed,
                                  Method method = Method::LAD, const FitOptions& options = {}) {
    validate(truth);
    validate(grid);
    const SignalField clean = synthesize_signal(truth, grid);
    const SignalField noisy = simulate_observation(truth, grid, noise, seed);
    TextureResult out;
    out.report = fit(noisy, static_cast<int>(truth.order()), method, options);
    std::tie(out.lo, out.hi) = default_render_range(truth);
    out.noisy = field_to_image(noisy, out.lo, out.hi);
    out.clean = field_to_image(clean, out.lo, out.hi);
    out.recovered = field_to_image(synthesize_signal(out.report.params_hat, grid), out.lo, out.hi);
    return out;
}

}  // namespace lad2d
