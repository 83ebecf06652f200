#include "fcp/io.hpp"

#include <array>
#include <cctype>
#include <cstring>
#include <fstream>
#include <limits>

#include "fcp/errors.hpp"

namespace fcp::io {

namespace {

constexpr std::uint32_t kFeatureVersion = 1;
constexpr char kFeatureMagic[4] = {'F', 'C', 'P', 'F'};

void read_exact(std::istream& in, char* buf, std::streamsize n, const std::string& what) {
    in.read(buf, n);
    if (in.gcount() != n)
        throw FormatError("truncated file while reading " + what);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open " + path + " for writing");
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path + " for reading");
    return in;
}

}  // namespace

void write_u32(std::ostream& out, std::uint32_t v) {
    std::array<unsigned char, 4> b{};
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b.data()), 4);
}

std::uint32_t read_u32(std::istream& in, const std::string& what) {
    std::array<unsigned char, 4> b{};
    read_exact(in, reinterpret_cast<char*>(b.data()), 4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

void write_f32(std::ostream& out, float v) {
    static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(out, bits);
}

float read_f32(std::istream& in, const std::string& what) {
    std::uint32_t bits = read_u32(in, what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

void write_f64(std::ostream& out, double v) {
    static_assert(sizeof(double) == 8 && std::numeric_limits<double>::is_iec559);
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    std::array<unsigned char, 8> b{};
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b.data()), 8);
}

double read_f64(std::istream& in, const std::string& what) {
    std::array<unsigned char, 8> b{};
    read_exact(in, reinterpret_cast<char*>(b.data()), 8, what);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void write_matrix_f64(std::ostream& out, const Matrix& m) {
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) write_f64(out, m(r, c));
}

void read_matrix_f64(std::istream& in, Matrix& m, const std::string& what) {
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) m(r, c) = read_f64(in, what);
}

void save_tensor(const std::string& path, const Matrix& values,
                 const std::vector<int>& dims) {
    std::size_t count = 1;
    for (int d : dims) {
        if (d <= 0) throw DimensionError("save_tensor: non-positive dimension");
        count *= static_cast<std::size_t>(d);
    }
    if (count != static_cast<std::size_t>(values.size()))
        throw DimensionError("save_tensor: dims do not cover the value count");

    auto out = open_out(path);
    out.write(kFeatureMagic, 4);
    write_u32(out, kFeatureVersion);
    write_u32(out, static_cast<std::uint32_t>(dims.size()));
    for (int d : dims) write_u32(out, static_cast<std::uint32_t>(d));
    for (Index r = 0; r < values.rows(); ++r)
        for (Index c = 0; c < values.cols(); ++c)
            write_f32(out, static_cast<float>(values(r, c)));
    if (!out) throw FormatError("write failure on " + path);
}

Matrix load_tensor(const std::string& path, std::vector<int>& dims) {
    auto in = open_in(path);
    char magic[4];
    read_exact(in, magic, 4, "magic");
    if (std::memcmp(magic, kFeatureMagic, 4) != 0)
        throw FormatError("bad magic in " + path);
    std::uint32_t version = read_u32(in, "version");
    if (version != kFeatureVersion)
        throw FormatError("unsupported feature file version in " + path);
    std::uint32_t ndim = read_u32(in, "ndim");
    if (ndim == 0 || ndim > 8) throw FormatError("implausible ndim in " + path);
    dims.resize(ndim);
    std::size_t count = 1;
    for (auto& d : dims) {
        std::uint32_t v = read_u32(in, "dims");
        if (v == 0) throw FormatError("zero dimension in " + path);
        d = static_cast<int>(v);
        count *= v;
    }

    // The logical payload is flat; expose it as rows = dims[0] when the rest
    // divides evenly, else a single row.
    Index rows = dims[0];
    Index cols = static_cast<Index>(count) / rows;
    Matrix values(rows, cols);
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c)
            values(r, c) = static_cast<double>(read_f32(in, "payload"));
    char extra;
    if (in.read(&extra, 1).gcount() != 0)
        throw FormatError("trailing bytes after payload in " + path);
    return values;
}

void save_feature_map(const std::string& path, const FeatureMap& fm) {
    save_tensor(path, fm.values, {fm.channels, fm.height, fm.width});
}

FeatureMap load_feature_map(const std::string& path) {
    std::vector<int> dims;
    Matrix values = load_tensor(path, dims);
    if (dims.size() != 3)
        throw FormatError("feature map file must be 3-D, got " +
                          std::to_string(dims.size()) + "-D: " + path);
    Matrix flat(dims[0], static_cast<Index>(dims[1]) * dims[2]);
    // load_tensor already shaped rows = dims[0].
    flat = values;
    return FeatureMap(dims[0], dims[1], dims[2], std::move(flat));
}

void save_mask_pgm(const std::string& path, const Mask& mask) {
    auto out = open_out(path);
    out << "P5\n" << mask.width << " " << mask.height << "\n255\n";
    for (int r = 0; r < mask.height; ++r)
        for (int c = 0; c < mask.width; ++c) {
            double v = mask.values(r, c);
            auto byte = static_cast<unsigned char>(v >= 0.5 ? 255 : 0);
            out.put(static_cast<char>(byte));
        }
    if (!out) throw FormatError("write failure on " + path);
}

Mask load_mask_pgm(const std::string& path) {
    auto in = open_in(path);
    std::string magic;
    in >> magic;
    if (magic != "P5") throw FormatError("not a binary PGM: " + path);

    // Header tokens may be separated by whitespace and # comments.
    auto next_int = [&in, &path]() {
        for (;;) {
            int ch = in.peek();
            if (ch == EOF) throw FormatError("truncated PGM header in " + path);
            if (std::isspace(ch)) {
                in.get();
            } else if (ch == '#') {
                std::string line;
                std::getline(in, line);
            } else {
                break;
            }
        }
        long v = 0;
        if (!(in >> v) || v <= 0) throw FormatError("bad PGM header value in " + path);
        return static_cast<int>(v);
    };
    int width = next_int();
    int height = next_int();
    int maxval = next_int();
    if (maxval != 255) throw FormatError("PGM maxval must be 255 in " + path);
    in.get();  // single whitespace byte before the raster

    Mask mask = Mask::zeros(height, width);
    std::vector<char> row(static_cast<std::size_t>(width));
    for (int r = 0; r < height; ++r) {
        read_exact(in, row.data(), width, "PGM raster");
        for (int c = 0; c < width; ++c) {
            auto byte = static_cast<unsigned char>(row[static_cast<std::size_t>(c)]);
            mask.values(r, c) = byte >= 128 ? 1.0 : 0.0;
        }
    }
    return mask;
}

}  // namespace fcp::io
