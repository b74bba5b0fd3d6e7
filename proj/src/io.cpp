#include "tvrelax/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "tvrelax/errors.hpp"

namespace tvrelax {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const char* what) {
    throw io_error(path.string() + ": " + what);
}

// Next integer token in a PNM header; '#' starts a comment to end of line.
unsigned long pnm_token(std::istream& in, const std::filesystem::path& path) {
    int ch = in.get();
    while (ch != EOF) {
        if (ch == '#') {
            while (ch != EOF && ch != '\n') ch = in.get();
        } else if (std::isspace(ch)) {
            ch = in.get();
        } else {
            break;
        }
    }
    if (ch == EOF || !std::isdigit(ch)) fail(path, "malformed header");
    unsigned long value = 0;
    while (ch != EOF && std::isdigit(ch)) {
        value = value * 10 + static_cast<unsigned long>(ch - '0');
        if (value > 1000000000ul) fail(path, "header value out of range");
        ch = in.get();
    }
    if (ch != EOF) in.unget();
    return value;
}

GridSpec image_grid(std::size_t w, std::size_t h,
                    const std::filesystem::path& path) {
    if (w < 2) fail(path, "image must be at least 2 pixels wide");
    if (h == 1) return GridSpec({w});
    return GridSpec({w, h});
}

}  // namespace

ScalarField read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");

    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || (m1 != '5' && m1 != '2')) fail(path, "not a PGM file");
    const bool binary = m1 == '5';

    const std::size_t w = pnm_token(in, path);
    const std::size_t h = pnm_token(in, path);
    const unsigned long maxval = pnm_token(in, path);
    if (h == 0) fail(path, "empty image");
    if (maxval != 255) fail(path, "only maxval 255 is supported");

    ScalarField f = ScalarField::zeros(image_grid(w, h, path));
    const std::size_t count = w * h;
    if (binary) {
        in.get();  // single whitespace byte after the header
        std::vector<unsigned char> raw(count);
        in.read(reinterpret_cast<char*>(raw.data()),
                static_cast<std::streamsize>(count));
        if (static_cast<std::size_t>(in.gcount()) != count)
            fail(path, "truncated pixel data");
        for (std::size_t i = 0; i < count; ++i)
            f.values[i] = static_cast<double>(raw[i]) / 255.0;
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            const unsigned long v = pnm_token(in, path);
            if (v > 255) fail(path, "pixel exceeds maxval");
            f.values[i] = static_cast<double>(v) / 255.0;
        }
    }
    return f;
}

void write_pgm(const std::filesystem::path& path, const ScalarField& f) {
    const std::size_t w = f.grid.extent(0);
    const std::size_t h = f.grid.dim() == 2 ? f.grid.extent(1) : 1;
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    out << "P5\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> raw(f.values.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double v = std::clamp(f.values[i], 0.0, 1.0);
        raw[i] = static_cast<unsigned char>(std::lround(255.0 * v));
    }
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size()));
    if (!out) fail(path, "write failed");
}

ScalarField read_csv_grid(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(path, "cannot open");

    std::vector<double> values;
    std::size_t cols = 0, rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t row_cols = 0;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t comma = line.find(',', pos);
            if (comma == std::string::npos) comma = line.size();
            std::size_t b = pos, e = comma;
            while (b < e && std::isspace(static_cast<unsigned char>(line[b])))
                ++b;
            while (e > b && std::isspace(static_cast<unsigned char>(line[e - 1])))
                --e;
            if (b == e) fail(path, "empty CSV cell");
            double v = 0.0;
            const auto res = std::from_chars(line.data() + b, line.data() + e, v);
            if (res.ec != std::errc{} || res.ptr != line.data() + e)
                fail(path, "malformed CSV number");
            values.push_back(v);
            ++row_cols;
            pos = comma + 1;
            if (comma == line.size()) break;
        }
        if (rows == 0)
            cols = row_cols;
        else if (row_cols != cols)
            fail(path, "ragged CSV rows");
        ++rows;
    }
    if (rows == 0) fail(path, "empty CSV file");
    if (cols < 2) fail(path, "CSV rows must have at least 2 columns");
    ScalarField f = ScalarField::zeros(
        rows == 1 ? GridSpec({cols}) : GridSpec({cols, rows}));
    f.values = std::move(values);
    return f;
}

void write_csv_grid(const std::filesystem::path& path, const ScalarField& f) {
    std::ofstream out(path);
    if (!out) fail(path, "cannot open for writing");
    const std::size_t cols = f.grid.extent(0);
    const std::size_t rows = f.grid.dim() == 2 ? f.grid.extent(1) : 1;
    char buf[40];
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", f.values[r * cols + c]);
            if (c) out << ',';
            out << buf;
        }
        out << '\n';
    }
    if (!out) fail(path, "write failed");
}

}  // namespace tvrelax
