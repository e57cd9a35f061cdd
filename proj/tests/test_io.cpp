#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "loctomo/filters.hpp"
#include "loctomo/io.hpp"
#include "testing.hpp"

using namespace loctomo;
using namespace loctomo::testing;
namespace fs = std::filesystem;

namespace {

class IoTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("loctomo_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    fs::path path(const char* name) const { return dir_ / name; }

    fs::path dir_;
};

// float32 payloads: values that are exact in single precision round-trip exactly.
std::vector<double> float_exact(std::size_t n, std::uint64_t seed) {
    auto v = random_vector(n, seed);
    for (double& x : v) x = static_cast<float>(x);
    return v;
}

}  // namespace

TEST_F(IoTest, GridRoundTrip) {
    const ImageGrid x(7, float_exact(49, 1));
    io::write_grid(path("x.bin"), x);
    EXPECT_EQ(io::read_grid(path("x.bin")), x);
    EXPECT_EQ(fs::file_size(path("x.bin")), 4u + 8u + 49u * 4u);
}

TEST_F(IoTest, SinogramRoundTrip) {
    const auto g = ProjectionGeometry::parallel(9, 13, 10);
    const Sinogram p(g, float_exact(g.sinogram_size(), 2));
    io::write_sinogram(path("p.bin"), p);
    const Sinogram q = io::read_sinogram(path("p.bin"), 10);
    EXPECT_EQ(q.geometry().angles(), g.angles());
    EXPECT_EQ(q, p);
}

TEST_F(IoTest, FilterBankRoundTrip) {
    const auto g = ProjectionGeometry::parallel(6, 11, 8);
    const FilterBank bank = compute_sirt_filters(g, 4);
    io::write_filter_bank(path("u.bin"), bank);
    const FilterBank back = io::read_filter_bank(path("u.bin"), g);
    EXPECT_EQ(back.size(), 4);
    EXPECT_DOUBLE_EQ(back.alpha(), bank.alpha());
    for (std::size_t i = 0; i < bank.values().size(); ++i)
        EXPECT_EQ(back.values()[i], static_cast<float>(bank.values()[i]));
    EXPECT_THROW(io::read_filter_bank(path("u.bin"), ProjectionGeometry::parallel(7, 11, 8)),
                 std::runtime_error);
}

TEST_F(IoTest, LittleEndianLayout) {
    io::write_grid(path("x.bin"), ImageGrid(1, std::vector<double>{1.0}));
    std::ifstream in(path("x.bin"), std::ios::binary);
    std::vector<unsigned char> b((std::istreambuf_iterator<char>(in)), {});
    const std::vector<unsigned char> expected{'L', 'T', 'R', 'G', 1, 0, 0, 0, 1, 0, 0, 0,
                                              0x00, 0x00, 0x80, 0x3f};
    EXPECT_EQ(b, expected);
}

TEST_F(IoTest, RejectsBadFiles) {
    EXPECT_THROW(io::read_grid(path("missing.bin")), std::runtime_error);
    io::write_grid(path("x.bin"), ImageGrid(3, 1.0));
    EXPECT_THROW(io::read_sinogram(path("x.bin"), 3), std::runtime_error);
    fs::resize_file(path("x.bin"), fs::file_size(path("x.bin")) - 2);
    EXPECT_THROW(io::read_grid(path("x.bin")), std::runtime_error);
    io::write_grid(path("y.bin"), ImageGrid(3, 1.0));
    {
        std::ofstream out(path("y.bin"), std::ios::binary | std::ios::app);
        out.put('\0');
    }
    EXPECT_THROW(io::read_grid(path("y.bin")), std::runtime_error);
}

TEST_F(IoTest, PgmWindowing) {
    const ImageGrid x(2, std::vector<double>{-1.0, 0.0, 1.0, 1.0});
    io::write_pgm(path("x.pgm"), x);
    std::ifstream in(path("x.pgm"), std::ios::binary);
    std::vector<unsigned char> b((std::istreambuf_iterator<char>(in)), {});
    const std::string header = "P5\n2 2\n65535\n";
    ASSERT_EQ(b.size(), header.size() + 8);
    EXPECT_EQ(std::string(b.begin(), b.begin() + static_cast<long>(header.size())), header);
    auto px = [&](int k) { return b[header.size() + 2 * k] * 256 + b[header.size() + 2 * k + 1]; };
    EXPECT_EQ(px(0), 0);
    EXPECT_EQ(px(1), 32768);
    EXPECT_EQ(px(2), 65535);
}

TEST(FormatNumber, ShortestRoundTrip) {
    EXPECT_EQ(io::format_number(1.0), "1.0");
    EXPECT_EQ(io::format_number(0.1), "0.1");
    EXPECT_EQ(io::format_number(-2.5), "-2.5");
    EXPECT_EQ(io::format_number(1e-7), "1e-07");
    EXPECT_EQ(io::format_number(std::numeric_limits<double>::infinity()), "inf");
    for (double v : random_vector(200, 9, -1e3, 1e3)) EXPECT_EQ(std::stod(io::format_number(v)), v);
}
