#include "loctomo/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace loctomo::io {

namespace {

static_assert(std::endian::native == std::endian::little,
              "the file writers assume a little-endian host");

class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
        path_ = path.string();
    }
    void magic(const char (&m)[5]) { out_.write(m, 4); }
    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }
    void f32_array(std::span<const double> values) {
        std::vector<float> buf(values.size());
        std::transform(values.begin(), values.end(), buf.begin(),
                       [](double v) { return static_cast<float>(v); });
        raw(buf.data(), buf.size() * sizeof(float));
    }
    void raw(const void* data, std::size_t bytes) {
        out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    }
    void finish() {
        out_.flush();
        if (!out_) throw std::runtime_error("write failed for '" + path_ + "'");
    }

private:
    std::ofstream out_;
    std::string path_;
};

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
        if (!in_) throw std::runtime_error("cannot open '" + path.string() + "'");
        path_ = path.string();
    }
    void expect_magic(const char (&m)[5]) {
        char got[4];
        raw(got, 4);
        if (std::memcmp(got, m, 4) != 0)
            throw std::runtime_error("'" + path_ + "' is not a " + std::string(m, 4) + " file");
    }
    std::uint32_t u32() {
        std::uint32_t v;
        raw(&v, sizeof v);
        return v;
    }
    double f64() {
        double v;
        raw(&v, sizeof v);
        return v;
    }
    std::vector<double> f32_array(std::size_t n) {
        std::vector<float> buf(n);
        raw(buf.data(), n * sizeof(float));
        std::vector<double> out(n);
        std::transform(buf.begin(), buf.end(), out.begin(),
                       [](float v) { return static_cast<double>(v); });
        return out;
    }
    void raw(void* data, std::size_t bytes) {
        in_.read(static_cast<char*>(data), static_cast<std::streamsize>(bytes));
        if (static_cast<std::size_t>(in_.gcount()) != bytes)
            throw std::runtime_error("'" + path_ + "' is truncated");
    }
    void expect_end() {
        if (in_.peek() != std::char_traits<char>::eof())
            throw std::runtime_error("'" + path_ + "' has trailing bytes");
    }

private:
    std::ifstream in_;
    std::string path_;
};

std::uint32_t checked_u32(std::size_t v) {
    if (v > 0xffffffffu) throw std::invalid_argument("dimension does not fit in u32");
    return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_grid(const std::filesystem::path& path, const ImageGrid& image) {
    Writer w(path);
    w.magic("LTRG");
    w.u32(checked_u32(static_cast<std::size_t>(image.size())));
    w.u32(checked_u32(static_cast<std::size_t>(image.size())));
    w.f32_array(image.values());
    w.finish();
}

ImageGrid read_grid(const std::filesystem::path& path) {
    Reader r(path);
    r.expect_magic("LTRG");
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    if (rows != cols || rows == 0)
        throw std::runtime_error("'" + path.string() + "': only non-empty square grids are supported");
    auto values = r.f32_array(static_cast<std::size_t>(rows) * cols);
    r.expect_end();
    return ImageGrid(static_cast<int>(rows), std::move(values));
}

void write_sinogram(const std::filesystem::path& path, const Sinogram& sino) {
    Writer w(path);
    w.magic("LTSG");
    w.u32(checked_u32(static_cast<std::size_t>(sino.n_angles())));
    w.u32(checked_u32(static_cast<std::size_t>(sino.n_detectors())));
    for (double a : sino.geometry().angles()) w.f64(a);
    w.f32_array(sino.values());
    w.finish();
}

Sinogram read_sinogram(const std::filesystem::path& path, int grid_size, double detector_spacing) {
    Reader r(path);
    r.expect_magic("LTSG");
    const std::uint32_t n_angles = r.u32();
    const std::uint32_t n_det = r.u32();
    if (n_angles == 0 || n_det == 0) throw std::runtime_error("'" + path.string() + "' is empty");
    std::vector<double> angles(n_angles);
    for (double& a : angles) a = r.f64();
    auto values = r.f32_array(static_cast<std::size_t>(n_angles) * n_det);
    r.expect_end();
    ProjectionGeometry geom(static_cast<int>(n_det), std::move(angles), grid_size,
                            detector_spacing);
    return Sinogram(std::move(geom), std::move(values));
}

void write_filter_bank(const std::filesystem::path& path, const FilterBank& bank) {
    const auto& g = bank.geometry();
    Writer w(path);
    w.magic("LTFB");
    w.u32(checked_u32(static_cast<std::size_t>(g.n_angles())));
    w.u32(checked_u32(static_cast<std::size_t>(g.n_detectors())));
    w.u32(checked_u32(static_cast<std::size_t>(bank.size())));
    w.f64(bank.alpha());
    w.f32_array(bank.values());
    w.finish();
}

FilterBank read_filter_bank(const std::filesystem::path& path, const ProjectionGeometry& geom) {
    Reader r(path);
    r.expect_magic("LTFB");
    const std::uint32_t n_angles = r.u32();
    const std::uint32_t n_det = r.u32();
    const std::uint32_t n = r.u32();
    const double alpha = r.f64();
    if (static_cast<int>(n_angles) != geom.n_angles() ||
        static_cast<int>(n_det) != geom.n_detectors())
        throw std::runtime_error("'" + path.string() + "': filter bank shape " +
                                 std::to_string(n_angles) + "x" + std::to_string(n_det) +
                                 " does not match the data");
    auto values = r.f32_array(static_cast<std::size_t>(n) * n_angles * n_det);
    r.expect_end();
    return FilterBank(geom, alpha, static_cast<int>(n), std::move(values));
}

void write_pgm(const std::filesystem::path& path, const ImageGrid& image) {
    const auto v = image.values();
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = v.empty() ? 0.0 : *lo_it;
    const double hi = v.empty() ? 0.0 : *hi_it;
    const double scale = hi > lo ? 65535.0 / (hi - lo) : 0.0;
    Writer w(path);
    const std::string header = "P5\n" + std::to_string(image.size()) + " " +
                               std::to_string(image.size()) + "\n65535\n";
    w.raw(header.data(), header.size());
    std::vector<unsigned char> buf(v.size() * 2);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto q = static_cast<std::uint16_t>(std::lround(std::clamp((v[i] - lo) * scale, 0.0, 65535.0)));
        buf[2 * i] = static_cast<unsigned char>(q >> 8);
        buf[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
    }
    w.raw(buf.data(), buf.size());
    w.finish();
}

std::string format_number(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    std::string s(buf.data(), res.ptr);
    if (std::isfinite(v) && s.find_first_of(".e") == std::string::npos) s += ".0";
    return s;
}

}  // namespace loctomo::io
