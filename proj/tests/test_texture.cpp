#include <gtest/gtest.h>

#include <random>

#include "lad2d/texture.hpp"

using namespace lad2d;

namespace {

TEST(Render, EndpointsAndMidpoint) {
    const Grid g{3, 4};
    for (std::uint8_t p : field_to_image(SignalField(g, -2.0), -2.0, 2.0).pixels) EXPECT_EQ(p, 0);
    for (std::uint8_t p : field_to_image(SignalField(g, 2.0), -2.0, 2.0).pixels) EXPECT_EQ(p, 255);
    for (std::uint8_t p : field_to_image(SignalField(g, 0.0), -2.0, 2.0).pixels) EXPECT_EQ(p, 128);
    for (std::uint8_t p : field_to_image(SignalField(g, 9.0), -2.0, 2.0).pixels) EXPECT_EQ(p, 255);
    EXPECT_THROW(field_to_image(SignalField(g), 1.0, 1.0), InvalidArgument);
    const auto img = field_to_image(SignalField(g));
    EXPECT_EQ(img.width, 4);
    EXPECT_EQ(img.height, 3);
}

TEST(Render, Monotone) {
    SignalField f(Grid{2, 500});
    for (std::size_t i = 0; i < f.size(); ++i) f.values()[i] = -3.0 + 6.0 * i / (f.size() - 1);
    const auto img = field_to_image(f, -2.5, 2.5);
    for (std::size_t i = 1; i < img.pixels.size(); ++i) EXPECT_LE(img.pixels[i - 1], img.pixels[i]);
}

TEST(Pgm, ExactBytes) {
    const GrayImage img{2, 2, {0, 255, 128, 64}};
    const std::string bytes = write_pgm(img);
    EXPECT_EQ(bytes, std::string("P5\n2 2\n255\n") + std::string("\x00\xFF\x80\x40", 4));
}

TEST(Pgm, RoundTripRandomImages) {
    std::mt19937_64 gen(12);
    std::uniform_int_distribution<int> dim(1, 40), px(0, 255);
    for (int i = 0; i < 50; ++i) {
        GrayImage img{dim(gen), dim(gen), {}};
        for (int k = 0; k < img.width * img.height; ++k) img.pixels.push_back(static_cast<std::uint8_t>(px(gen)));
        EXPECT_EQ(read_pgm(write_pgm(img)), img);
    }
}

TEST(Pgm, HeaderCommentsAccepted) {
    const auto img = read_pgm(std::string("P5 # made by hand\n3 1\n255\n") + "abc");
    EXPECT_EQ(img.width, 3);
    EXPECT_EQ(img.pixels[2], 'c');
}

TEST(Pgm, DistinctErrors) {
    auto message = [](const std::string& bytes) {
        try {
            read_pgm(bytes);
        } catch (const IoError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    EXPECT_NE(message("P2\n2 2\n255\n0 1 2 3\n").find("unsupported PGM variant"), std::string::npos);
    EXPECT_NE(message("P5\n2 x\n255\n").find("malformed PGM header"), std::string::npos);
    EXPECT_NE(message("hello").find("malformed PGM header"), std::string::npos);
    EXPECT_NE(message("P5\n2 2\n65535\n").find("maxval"), std::string::npos);
    EXPECT_NE(message("P5\n2 2\n255\nabc").find("truncated PGM payload"), std::string::npos);
}

TEST(TextureDemo, NoiselessRecoversCleanImage) {
    const ModelParams truth{{2.4, 1.4, 0.4, 0.6}};
    const auto r = texture_demo(truth, {40, 40}, NoiseSpec::none(), {1});
    EXPECT_EQ(r.recovered, r.clean);
    EXPECT_EQ(r.noisy, r.clean);
}

TEST(TextureDemo, Deterministic) {
    const ModelParams truth{{2.4, 1.4, 0.4, 0.6}};
    const auto a = texture_demo(truth, {30, 30}, NoiseSpec::slash(), {5});
    const auto b = texture_demo(truth, {30, 30}, NoiseSpec::slash(), {5});
    EXPECT_EQ(write_pgm(a.noisy), write_pgm(b.noisy));
    EXPECT_EQ(a.recovered, b.recovered);
}

TEST(PixelError, Basics) {
    const GrayImage a{2, 1, {10, 20}}, b{2, 1, {13, 19}};
    EXPECT_DOUBLE_EQ(mean_abs_pixel_error(a, b), 2.0);
    EXPECT_THROW(mean_abs_pixel_error(a, GrayImage{1, 2, {0, 0}}), InvalidArgument);
}

}  // namespace
