#pragma once

// File formats.  Cocycle windows travel as a small binary container (ASCII
// header for inspectability, little-endian binary64 payload for bit-exact
// round trips); everything else is CSV with 17 significant digits, enough to
// reproduce a double exactly.

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "oslc/core.hpp"
#include "oslc/exact_model.hpp"
#include "oslc/spectrum.hpp"
#include "oslc/validation.hpp"

namespace oslc {

inline std::string format_g17(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

namespace detail {

constexpr char cocycle_magic[] = "OSLC1\n";

inline void encode_f64_le(double v, unsigned char* out) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
}

inline double decode_f64_le(const unsigned char* in) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(in[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

// Output sink; "-" means stdout.
class OutStream {
  public:
    explicit OutStream(const std::string& path) : path_(path) {
        if (path == "-") {
            os_ = &std::cout;
        } else {
            file_.open(path, std::ios::binary);
            if (!file_) throw std::runtime_error("cannot open for writing: " + path);
            os_ = &file_;
        }
    }
    std::ostream& get() { return *os_; }
    void finish() {
        os_->flush();
        if (!*os_) throw std::runtime_error("write failed: " + path_);
    }

  private:
    std::string path_;
    std::ofstream file_;
    std::ostream* os_ = nullptr;
};

}  // namespace detail

inline void write_cocycle_file(const std::string& path, const CocycleWindow& window) {
    detail::OutStream out(path);
    const int d = window.dim();
    const long count = window.size();
    out.get() << detail::cocycle_magic;
    out.get() << "d=" << d << " n0=" << window.start() << " count=" << count << "\n";
    std::vector<unsigned char> buf(static_cast<std::size_t>(count) * d * d * 8);
    std::size_t pos = 0;
    for (long n = window.start(); n < window.start() + count; ++n) {
        const Eigen::MatrixXd& a = window.at(n);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c, pos += 8) detail::encode_f64_le(a(r, c), buf.data() + pos);
    }
    out.get().write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    out.finish();
}

inline CocycleWindow read_cocycle_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);

    char magic[6];
    if (!in.read(magic, 6) || std::memcmp(magic, detail::cocycle_magic, 6) != 0)
        throw std::runtime_error("not a cocycle file (bad magic): " + path);

    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("truncated cocycle header: " + path);
    int d = 0;
    long n0 = 0, count = 0;
    if (std::sscanf(header.c_str(), "d=%d n0=%ld count=%ld", &d, &n0, &count) != 3 || d < 1 ||
        count < 1)
        throw std::runtime_error("malformed cocycle header: " + path);

    const std::size_t bytes = static_cast<std::size_t>(count) * d * d * 8;
    std::vector<unsigned char> buf(bytes);
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes)))
        throw std::runtime_error("truncated cocycle payload: " + path);
    if (in.get() != std::ifstream::traits_type::eof())
        throw std::runtime_error("trailing bytes in cocycle file: " + path);

    std::vector<Eigen::MatrixXd> mats(static_cast<std::size_t>(count));
    std::size_t pos = 0;
    for (long i = 0; i < count; ++i) {
        Eigen::MatrixXd a(d, d);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c, pos += 8) a(r, c) = detail::decode_f64_le(buf.data() + pos);
        mats[static_cast<std::size_t>(i)] = std::move(a);
    }
    return CocycleWindow(d, n0, std::move(mats));
}

// ---- truth CSV: time,j,c1,...,cd -------------------------------------------

inline void write_truth_csv(const std::string& path, const ExactGroundTruth& truth) {
    detail::OutStream out(path);
    const int d = truth.dim();
    out.get() << "time,j";
    for (int c = 1; c <= d; ++c) out.get() << ",c" << c;
    out.get() << "\n";
    for (long n = -truth.half_width(); n <= truth.half_width(); ++n) {
        for (int j = 1; j <= d; ++j) {
            Eigen::VectorXd v = truth.exact_vector(n, j);
            out.get() << n << "," << j;
            for (int c = 0; c < d; ++c) out.get() << "," << format_g17(v[c]);
            out.get() << "\n";
        }
    }
    out.finish();
}

struct TruthTable {
    int dim = 0;
    std::map<std::pair<long, int>, Eigen::VectorXd> rows;

    bool has(long time, int j) const { return rows.count({time, j}) > 0; }
    const Eigen::VectorXd& lookup(long time, int j) const {
        auto it = rows.find({time, j});
        if (it == rows.end())
            throw std::invalid_argument("truth table has no entry for time " +
                                        std::to_string(time) + ", j " + std::to_string(j));
        return it->second;
    }
};

inline TruthTable read_truth_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("time,j", 0) != 0)
        throw std::runtime_error("malformed truth CSV header: " + path);

    TruthTable table;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() < 3) throw std::runtime_error("malformed truth CSV row: " + line);
        long time = std::stol(cells[0]);
        int j = std::stoi(cells[1]);
        Eigen::VectorXd v(static_cast<long>(cells.size()) - 2);
        for (std::size_t c = 2; c < cells.size(); ++c)
            v[static_cast<long>(c) - 2] = std::stod(cells[c]);
        if (table.dim == 0)
            table.dim = static_cast<int>(v.size());
        else if (table.dim != v.size())
            throw std::runtime_error("inconsistent truth CSV row width: " + line);
        table.rows[{time, j}] = std::move(v);
    }
    return table;
}

// ---- result CSVs ------------------------------------------------------------

struct SweepRow {
    std::string method;
    int j = 0;
    long half_width = 0;
    double error = 0.0;  // NaN marks a failed grid point
};

inline void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    detail::OutStream out(path);
    out.get() << "method,j,N,error\n";
    for (const SweepRow& r : rows)
        out.get() << r.method << "," << r.j << "," << r.half_width << "," << format_g17(r.error)
                  << "\n";
    out.finish();
}

inline void write_series_csv(const std::string& path, const std::vector<TestSeries>& series) {
    detail::OutStream out(path);
    out.get() << "kind,m,value\n";
    for (const TestSeries& ts : series)
        for (const auto& [m, value] : ts.points)
            out.get() << kind_name(ts.kind) << "," << m << "," << format_g17(value) << "\n";
    out.finish();
}

inline void write_vector_csv(const std::string& path, const SubspaceApprox& approx,
                             const std::optional<DichotomyShifts>& shifts) {
    detail::OutStream out(path);
    out.get() << "method,j,N";
    if (shifts) out.get() << ",lambda_left,lambda_right";
    for (long c = 1; c <= approx.vector.size(); ++c) out.get() << ",c" << c;
    out.get() << "\n";
    out.get() << method_name(approx.method) << "," << approx.j << "," << approx.half_width;
    if (shifts)
        out.get() << "," << format_g17(shifts->lambda_left) << ","
                  << format_g17(shifts->lambda_right);
    for (long c = 0; c < approx.vector.size(); ++c) out.get() << "," << format_g17(approx.vector[c]);
    out.get() << "\n";
    out.finish();
}

inline void write_exponent_csv(const std::string& path, const SpectrumEstimate& est) {
    detail::OutStream out(path);
    out.get() << "i,lambda\n";
    for (int i = 0; i < est.k; ++i)
        out.get() << (i + 1) << "," << format_g17(est.lambdas[i]) << "\n";
    out.finish();
}

}  // namespace oslc
