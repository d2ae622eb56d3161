#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "cocycle_forge/errors.hpp"
#include "cocycle_forge/generators.hpp"
#include "cocycle_forge/io.hpp"

using namespace cocycle_forge;

TEST(Io, BaseRoundTrip) {
    const FiniteBase b = FiniteBase::cyclic(12, 5);
    const Json j = json_of(b);
    EXPECT_EQ(j.at("n_points").get<std::size_t>(), 12u);
    const FiniteBase back = base_from_json(j);
    for (std::size_t x = 0; x < 12; ++x) EXPECT_EQ(back.forward(x), b.forward(x));
    EXPECT_THROW(base_from_json(Json{{"n_points", 3}, {"sigma", {0, 0, 1}}}), InvalidBase);
}

TEST(Io, CocycleRoundTripIsExact) {
    const FiniteBase b = FiniteBase::cyclic(30);
    const Cocycle a = random_cocycle(30, 11, 1.5);
    const auto [b2, a2] = cocycle_from_json(Json::parse(json_of(a, b).dump()));
    ASSERT_EQ(a2.size(), 30u);
    for (std::size_t x = 0; x < 30; ++x) {
        EXPECT_EQ(a2(x).a, a(x).a);
        EXPECT_EQ(a2(x).b, a(x).b);
        EXPECT_EQ(a2(x).c, a(x).c);
        EXPECT_EQ(a2(x).d, a(x).d);
        EXPECT_EQ(b2.forward(x), b.forward(x));
    }
}

TEST(Io, CocycleRejectsNonSl2) {
    Json j = json_of(constant_cocycle(2, Mat2::diag(2.0, 0.5)), FiniteBase::cyclic(2));
    j["matrices"][1] = {2.0, 0.0, 0.0, 2.0};
    EXPECT_THROW(cocycle_from_json(j), InvalidInput);
}

TEST(Io, CsvNumber) {
    EXPECT_EQ(csv_number(0.1), "0.1");
    EXPECT_EQ(csv_number(1.0 / 3.0), "0.333333333333");
    EXPECT_EQ(csv_number(123456789012345.0), "1.23456789012e+14");
    EXPECT_EQ(csv_number(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_EQ(csv_number(-std::numeric_limits<double>::infinity()), "-inf");
    EXPECT_EQ(csv_number(std::nan("")), "nan");
    // 12 significant digits survive a parse
    const double v = 2.718281828459045;
    EXPECT_NEAR(std::stod(csv_number(v)), v, 1e-11);
}

TEST(Io, JsonFileRoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "cocycle_forge_io_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "x.json").string();
    const Json j{{"a", 1}, {"b", {1.5, 2.5}}};
    write_json_file(path, j);
    EXPECT_EQ(read_json_file(path), j);
    EXPECT_THROW(read_json_file((dir / "missing.json").string()), InvalidInput);
    std::filesystem::remove_all(dir);
}
