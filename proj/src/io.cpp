#include "fthresh/io.hpp"

#include "fthresh/errors.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <string_view>
#include <tuple>
#include <vector>

namespace fthresh::io {

namespace {

constexpr const char* kCovFormat = "fthresh-covfield";
constexpr const char* kDenseFormat = "fthresh-dense";
constexpr int kVersion = 1;

std::ofstream open_out(const fs::path& path, bool binary) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!out) {
        throw IoError("cannot open for writing: " + path.string());
    }
    return out;
}

std::ifstream open_in(const fs::path& path, bool binary) {
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) {
        throw IoError("cannot open for reading: " + path.string());
    }
    return in;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

void put_doubles(std::ostream& out, const double* data, std::size_t count) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            auto bits = std::bit_cast<std::uint64_t>(data[i]);
            char bytes[8];
            for (int b = 0; b < 8; ++b) {
                bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
            }
            out.write(bytes, 8);
        }
    }
}

void get_doubles(std::istream& in, double* data, std::size_t count, const fs::path& path) {
    if constexpr (std::endian::native == std::endian::little) {
        in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            unsigned char bytes[8];
            in.read(reinterpret_cast<char*>(bytes), 8);
            std::uint64_t bits = 0;
            for (int b = 0; b < 8; ++b) {
                bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
            }
            data[i] = std::bit_cast<double>(bits);
        }
    }
    if (!in) {
        throw IoError("truncated payload: " + path.string());
    }
}

json grid_json(const Grid& grid) {
    json points = json::array();
    for (std::size_t r = 0; r < grid.size(); ++r) {
        points.push_back(grid.point(r));
    }
    return points;
}

json read_header(std::istream& in, const fs::path& path, const char* format) {
    std::string line;
    if (!std::getline(in, line)) {
        throw IoError("missing header: " + path.string());
    }
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw IoError("malformed header in " + path.string() + ": " + e.what());
    }
    if (header.value("format", "") != format) {
        throw IoError(path.string() + " is not a " + format + " file");
    }
    if (header.value("version", 0) != kVersion || header.value("byte_order", "") != "little" ||
        header.value("dtype", "") != "f64") {
        throw IoError("unsupported encoding in " + path.string());
    }
    return header;
}

GridPtr header_grid(const json& header, std::size_t R, const fs::path& path) {
    std::vector<double> points;
    try {
        points = header.at("grid").get<std::vector<double>>();
    } catch (const json::exception&) {
        throw IoError("missing grid in " + path.string());
    }
    if (points.size() != R) {
        throw ShapeError("grid length does not match R in " + path.string());
    }
    return std::make_shared<const Grid>(std::move(points));
}

std::size_t header_size(const json& header, const char* key, const fs::path& path) {
    try {
        return header.at(key).get<std::size_t>();
    } catch (const json::exception&) {
        throw IoError(std::string("missing field '") + key + "' in " + path.string());
    }
}

void expect_end(std::istream& in, const fs::path& path) {
    if (in.peek() != std::char_traits<char>::eof()) {
        throw IoError("trailing bytes in " + path.string());
    }
}

// Fields of one CSV record; a leading non-numeric row is a header.
struct CsvReader {
    std::ifstream in;
    fs::path path;
    std::size_t line_no = 0;
    std::string line;
    std::vector<std::string_view> fields;

    explicit CsvReader(const fs::path& p) : in(open_in(p, false)), path(p) {}

    bool next() {
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') {
                line.pop_back();
            }
            if (line.empty()) {
                continue;
            }
            fields.clear();
            std::string_view rest(line);
            while (true) {
                auto comma = rest.find(',');
                fields.push_back(trim(rest.substr(0, comma)));
                if (comma == std::string_view::npos) {
                    break;
                }
                rest.remove_prefix(comma + 1);
            }
            if (line_no == 1 && !fields.empty() && !looks_numeric(fields[0])) {
                continue;
            }
            return true;
        }
        return false;
    }

    void expect_fields(std::size_t count) const {
        if (fields.size() != count) {
            fail("expected " + std::to_string(count) + " fields");
        }
    }

    long long integer(std::size_t f) const {
        long long v = 0;
        auto s = fields[f];
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
            fail("not an integer: '" + std::string(s) + "'");
        }
        return v;
    }

    double real(std::size_t f) const {
        double v = 0.0;
        auto s = fields[f];
        if (!s.empty() && s.front() == '+') {
            s.remove_prefix(1);
        }
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
            fail("not a number: '" + std::string(fields[f]) + "'");
        }
        if (!std::isfinite(v)) {
            fail("non-finite value");
        }
        return v;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + what);
    }

    static std::string_view trim(std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
            s.remove_prefix(1);
        }
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
            s.remove_suffix(1);
        }
        return s;
    }

    static bool looks_numeric(std::string_view s) {
        return !s.empty() && (std::isdigit(static_cast<unsigned char>(s.front())) || s.front() == '-' ||
                              s.front() == '+' || s.front() == '.');
    }
};

// Dense index of each distinct id, in increasing id order.
std::map<long long, std::size_t> index_ids(const std::set<long long>& ids) {
    std::map<long long, std::size_t> out;
    std::size_t next = 0;
    for (auto id : ids) {
        out[id] = next++;
    }
    return out;
}

}

std::string format_double(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) {
        throw IoError("cannot format number");
    }
    return std::string(buf, ptr);
}

void write_covfield(const fs::path& path, const CovField& field) {
    const std::size_t p = field.p();
    const std::size_t R = field.resolution();
    json header = {{"format", kCovFormat}, {"version", kVersion}, {"p", p},         {"R", R},
                   {"grid", grid_json(*field.grid())},          {"byte_order", "little"}, {"dtype", "f64"}};
    auto out = open_out(path, true);
    out << header.dump() << '\n';
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> block;
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t k = j; k < p; ++k) {
            block = field.block(j, k);
            put_doubles(out, block.data(), R * R);
        }
    }
    finish(out, path);
}

CovField read_covfield(const fs::path& path) {
    auto in = open_in(path, true);
    const json header = read_header(in, path, kCovFormat);
    const std::size_t p = header_size(header, "p", path);
    const std::size_t R = header_size(header, "R", path);
    auto grid = header_grid(header, R, path);
    if (p == 0) {
        throw ShapeError("p must be positive in " + path.string());
    }
    CovField field(p, grid);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> block(R, R);
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t k = j; k < p; ++k) {
            get_doubles(in, block.data(), R * R, path);
            if (j == k && !block.isApprox(block.transpose(), 0.0)) {
                throw ShapeError("diagonal block is not symmetric in " + path.string());
            }
            field.set_entry(j, k, block);
        }
    }
    expect_end(in, path);
    return field;
}

void write_covfield_csv(const fs::path& path, const CovField& field) {
    auto out = open_out(path, false);
    out << "j,k,r1,r2,value\n";
    const auto R = static_cast<Eigen::Index>(field.resolution());
    for (std::size_t j = 0; j < field.p(); ++j) {
        for (std::size_t k = 0; k < field.p(); ++k) {
            auto b = field.block(j, k);
            for (Eigen::Index r1 = 0; r1 < R; ++r1) {
                for (Eigen::Index r2 = 0; r2 < R; ++r2) {
                    out << j << ',' << k << ',' << r1 << ',' << r2 << ',' << format_double(b(r1, r2)) << '\n';
                }
            }
        }
    }
    finish(out, path);
}

void write_dense_binary(const fs::path& path, const DenseSample& data) {
    json header = {{"format", kDenseFormat},
                   {"version", kVersion},
                   {"n", data.n()},
                   {"p", data.p()},
                   {"R", data.resolution()},
                   {"grid", grid_json(*data.grid())},
                   {"byte_order", "little"},
                   {"dtype", "f64"}};
    auto out = open_out(path, true);
    out << header.dump() << '\n';
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = data.values();
    put_doubles(out, rows.data(), static_cast<std::size_t>(rows.size()));
    finish(out, path);
}

DenseSample read_dense_binary(const fs::path& path) {
    auto in = open_in(path, true);
    const json header = read_header(in, path, kDenseFormat);
    const std::size_t n = header_size(header, "n", path);
    const std::size_t p = header_size(header, "p", path);
    const std::size_t R = header_size(header, "R", path);
    auto grid = header_grid(header, R, path);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(n, p * R);
    get_doubles(in, rows.data(), n * p * R, path);
    expect_end(in, path);
    return DenseSample(n, p, std::move(grid), Eigen::MatrixXd(rows));
}

void write_dense_csv(const fs::path& path, const DenseSample& data) {
    auto out = open_out(path, false);
    out << "subject_id,variable_id,grid_index,value\n";
    for (std::size_t i = 0; i < data.n(); ++i) {
        for (std::size_t j = 0; j < data.p(); ++j) {
            for (std::size_t r = 0; r < data.resolution(); ++r) {
                out << i << ',' << j << ',' << r << ',' << format_double(data(i, j, r)) << '\n';
            }
        }
    }
    finish(out, path);
}

DenseSample read_dense_csv(const fs::path& path, GridPtr grid) {
    CsvReader csv(path);
    std::vector<std::tuple<long long, long long, long long, double>> rows;
    std::set<long long> subjects, variables;
    long long max_r = -1;
    while (csv.next()) {
        csv.expect_fields(4);
        const long long r = csv.integer(2);
        if (r < 0) {
            csv.fail("negative grid_index");
        }
        rows.emplace_back(csv.integer(0), csv.integer(1), r, csv.real(3));
        subjects.insert(std::get<0>(rows.back()));
        variables.insert(std::get<1>(rows.back()));
        max_r = std::max(max_r, r);
    }
    if (rows.empty()) {
        throw IoError("no data rows in " + path.string());
    }
    if (!grid) {
        if (max_r < 1) {
            throw ShapeError("dense input needs at least two grid points: " + path.string());
        }
        grid = make_uniform_grid(static_cast<std::size_t>(max_r) + 1);
    } else if (max_r >= static_cast<long long>(grid->size())) {
        throw ShapeError("grid_index exceeds the grid in " + path.string());
    }
    const std::size_t n = subjects.size();
    const std::size_t p = variables.size();
    const std::size_t R = grid->size();
    if (rows.size() != n * p * R) {
        throw ShapeError("dense input is not a complete n x p x R tensor: " + path.string());
    }
    auto sid = index_ids(subjects);
    auto vid = index_ids(variables);
    Eigen::MatrixXd values = Eigen::MatrixXd::Zero(n, p * R);
    std::vector<bool> seen(n * p * R, false);
    for (const auto& [s, v, r, x] : rows) {
        const std::size_t row = sid[s];
        const std::size_t col = vid[v] * R + static_cast<std::size_t>(r);
        if (seen[row * p * R + col]) {
            throw ShapeError("duplicate dense entry in " + path.string());
        }
        seen[row * p * R + col] = true;
        values(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = x;
    }
    return DenseSample(n, p, std::move(grid), std::move(values));
}

void write_partial_csv(const fs::path& path, const PartialSample& data) {
    auto out = open_out(path, false);
    out << "subject_id,variable_id,location,value\n";
    for (std::size_t i = 0; i < data.n(); ++i) {
        for (std::size_t j = 0; j < data.p(); ++j) {
            auto loc = data.locations(i, j);
            auto val = data.values(i, j);
            for (std::size_t l = 0; l < val.size(); ++l) {
                out << i << ',' << j << ',' << format_double(loc[l]) << ',' << format_double(val[l]) << '\n';
            }
        }
    }
    finish(out, path);
}

PartialSample read_partial_csv(const fs::path& path) {
    CsvReader csv(path);
    std::map<long long, std::map<long long, CurveObservations>> curves;
    std::set<long long> variables;
    while (csv.next()) {
        csv.expect_fields(4);
        const long long s = csv.integer(0);
        const long long v = csv.integer(1);
        auto& c = curves[s][v];
        c.locations.push_back(csv.real(2));
        c.values.push_back(csv.real(3));
        variables.insert(v);
    }
    if (curves.empty()) {
        throw IoError("no data rows in " + path.string());
    }
    std::vector<std::vector<CurveObservations>> out;
    out.reserve(curves.size());
    for (auto& [s, per_var] : curves) {
        if (per_var.size() != variables.size()) {
            throw ShapeError("subject " + std::to_string(s) + " does not observe every variable in " + path.string());
        }
        std::vector<CurveObservations> row;
        row.reserve(per_var.size());
        for (auto& [v, c] : per_var) {
            row.push_back(std::move(c));
        }
        out.push_back(std::move(row));
    }
    return PartialSample::general(std::move(out));
}

void write_support_csv(const fs::path& path, const SupportMask& support, const Eigen::MatrixXd& norms) {
    if (support.rows() != norms.rows() || support.cols() != norms.cols()) {
        throw ShapeError("support and norms disagree in size");
    }
    auto out = open_out(path, false);
    out << "j,k,norm\n";
    for (Eigen::Index j = 0; j < support.rows(); ++j) {
        for (Eigen::Index k = j; k < support.cols(); ++k) {
            if (support(j, k)) {
                out << j << ',' << k << ',' << format_double(norms(j, k)) << '\n';
            }
        }
    }
    finish(out, path);
}

void write_cv_csv(const fs::path& path, const CVResult& result) {
    auto out = open_out(path, false);
    out << "lambda,mean_err,se\n";
    for (std::size_t g = 0; g < result.lambdas.size(); ++g) {
        out << format_double(result.lambdas[g]) << ',' << format_double(result.mean_err[g]) << ','
            << format_double(result.se[g]) << '\n';
    }
    finish(out, path);
}

void write_roc_csv(const fs::path& path, std::span<const RocPoint> curve) {
    auto out = open_out(path, false);
    out << "lambda,tpr,fpr\n";
    for (const auto& pt : curve) {
        out << format_double(pt.lambda) << ',' << format_double(pt.tpr) << ',' << format_double(pt.fpr) << '\n';
    }
    finish(out, path);
}

json diagnostics_json(const SmoothedCovariance& smoothed) {
    json pairs = json::array();
    std::size_t local_constant = 0, empty = 0;
    for (const auto& d : smoothed.pairs) {
        pairs.push_back({{"j", d.j},
                         {"k", d.k},
                         {"bandwidth", d.bandwidth},
                         {"local_constant_points", d.local_constant_points},
                         {"empty_points", d.empty_points}});
        local_constant += d.local_constant_points;
        empty += d.empty_points;
    }
    return {{"pairs", pairs},
            {"local_constant_points", local_constant},
            {"empty_points", empty},
            {"kernel_evals", smoothed.counts.kernel_evals},
            {"arithmetic_ops", smoothed.counts.arithmetic_ops}};
}

void write_json(const fs::path& path, const json& value) {
    auto out = open_out(path, false);
    out << value.dump(2) << '\n';
    finish(out, path);
}

json read_json(const fs::path& path) {
    auto in = open_in(path, false);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

}
