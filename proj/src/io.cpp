#include "gridcpd/io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace gridcpd::io {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(const fs::path& path, const std::string& message) {
    throw std::runtime_error(path.string() + ": " + message);
}

[[noreturn]] void fail_line(const fs::path& path, int line, const std::string& message) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + message);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

double parse_double(std::string_view token, const fs::path& path, const char* what) {
    double value = 0.0;
    const char* begin = token.data();
    const char* end = begin + token.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        fail(path, std::string("invalid ") + what + ": '" + std::string(token) + "'");
    }
    return value;
}

long parse_long(std::string_view token, const fs::path& path, const char* what) {
    long value = 0;
    const char* begin = token.data();
    const char* end = begin + token.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        fail(path, std::string("invalid ") + what + ": '" + std::string(token) + "'");
    }
    return value;
}

// Whitespace-separated token stream over a whole file.
class TokenReader {
public:
    TokenReader(std::string text, fs::path path)
        : text_(std::move(text)), path_(std::move(path)) {}

    std::string next(const char* what) {
        skip_space();
        if (pos_ >= text_.size()) fail(path_, std::string("unexpected end of file, expected ") + what);
        const size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        return text_.substr(start, pos_ - start);
    }

    double next_double(const char* what) { return parse_double(next(what), path_, what); }
    long next_long(const char* what) { return parse_long(next(what), path_, what); }
    int next_int(const char* what) { return static_cast<int>(next_long(what)); }

    void expect(const char* literal) {
        const std::string tok = next(literal);
        if (tok != literal) {
            fail(path_, std::string("expected '") + literal + "', found '" + tok + "'");
        }
    }

    bool at_end() {
        skip_space();
        return pos_ >= text_.size();
    }

private:
    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    std::string text_;
    fs::path path_;
    size_t pos_ = 0;
};

void append_double(std::string& out, double v) {
    out += format_double(v);
}

void check_dims(const fs::path& path, long di, long dj, long dk) {
    if (di < 1 || dj < 1 || dk < 1 || di > (1L << 30) || dj > (1L << 30) || dk > (1L << 30)) {
        fail(path, "invalid dims");
    }
    if (di * dj * dk > (1L << 31)) fail(path, "tensor too large");
}

std::string phase_set_string(const std::array<bool, 3>& flags) {
    std::string s;
    const char letters[3] = {'a', 'b', 'c'};
    for (int ph = 0; ph < 3; ++ph)
        if (flags[ph]) s += letters[ph];
    return s.empty() ? "-" : s;
}

std::array<bool, 3> parse_phase_set(const std::string& s, const fs::path& path, int line) {
    std::array<bool, 3> flags{false, false, false};
    if (s == "-") return flags;
    for (char c : s) {
        if (c < 'a' || c > 'c') fail_line(path, line, "invalid phase set '" + s + "'");
        flags[c - 'a'] = true;
    }
    return flags;
}

constexpr const char* kCsvHeader = "timestamp_min,phase,re_v_pu,im_v_pu,vmag_pu,p_kw,q_kvar";

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
        const size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("double formatting failed");
    return std::string(buf, ptr);
}

void atomic_write(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(tmp, "cannot open for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) fail(tmp, "write failed");
    }
    fs::rename(tmp, path);
}

void write_tensor_text(const fs::path& path, const Tensor3& x) {
    std::string out;
    out.reserve(static_cast<size_t>(x.size()) * 12 + 64);
    out += "tensor ";
    out += std::to_string(x.dim0());
    out += ' ';
    out += std::to_string(x.dim1());
    out += ' ';
    out += std::to_string(x.dim2());
    out += '\n';
    for (int i = 0; i < x.dim0(); ++i) {
        for (int j = 0; j < x.dim1(); ++j) {
            for (int k = 0; k < x.dim2(); ++k) {
                if (k > 0) out += ' ';
                append_double(out, x(i, j, k));
            }
            out += '\n';
        }
    }
    atomic_write(path, out);
}

Tensor3 read_tensor_text(const fs::path& path) {
    TokenReader reader(read_file(path), path);
    reader.expect("tensor");
    const long di = reader.next_long("dim0");
    const long dj = reader.next_long("dim1");
    const long dk = reader.next_long("dim2");
    check_dims(path, di, dj, dk);
    Tensor3 x(static_cast<int>(di), static_cast<int>(dj), static_cast<int>(dk));
    for (int i = 0; i < di; ++i)
        for (int j = 0; j < dj; ++j)
            for (int k = 0; k < dk; ++k) x(i, j, k) = reader.next_double("tensor entry");
    if (!reader.at_end()) fail(path, "trailing content after tensor values");
    return x;
}

void write_tensor_binary(const fs::path& path, const Tensor3& x) {
    std::string out;
    out.reserve(static_cast<size_t>(x.size()) * 8 + 32);
    out += "GCT3";
    const std::uint32_t version = 1;
    out.append(reinterpret_cast<const char*>(&version), 4);
    for (int d : x.dims()) {
        const std::uint64_t v = static_cast<std::uint64_t>(d);
        out.append(reinterpret_cast<const char*>(&v), 8);
    }
    for (int i = 0; i < x.dim0(); ++i)
        for (int j = 0; j < x.dim1(); ++j)
            for (int k = 0; k < x.dim2(); ++k) {
                const double v = x(i, j, k);
                out.append(reinterpret_cast<const char*>(&v), 8);
            }
    atomic_write(path, out);
}

Tensor3 read_tensor_binary(const fs::path& path) {
    const std::string data = read_file(path);
    if (data.size() < 32 || data.compare(0, 4, "GCT3") != 0) {
        fail(path, "not a tensor binary file (bad magic)");
    }
    std::uint32_t version = 0;
    std::memcpy(&version, data.data() + 4, 4);
    if (version != 1) fail(path, "unsupported tensor binary version");
    std::uint64_t dims[3];
    std::memcpy(dims, data.data() + 8, 24);
    check_dims(path, static_cast<long>(dims[0]), static_cast<long>(dims[1]),
               static_cast<long>(dims[2]));
    const size_t count = static_cast<size_t>(dims[0] * dims[1] * dims[2]);
    if (data.size() != 32 + count * 8) fail(path, "tensor binary size mismatch");
    Tensor3 x(static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2]));
    size_t off = 32;
    for (int i = 0; i < x.dim0(); ++i)
        for (int j = 0; j < x.dim1(); ++j)
            for (int k = 0; k < x.dim2(); ++k) {
                std::memcpy(&x(i, j, k), data.data() + off, 8);
                off += 8;
            }
    return x;
}

void write_mask(const fs::path& path, const MaskTensor& m) {
    std::string out;
    out.reserve(static_cast<size_t>(m.size()) * 2 + 64);
    out += "mask ";
    out += std::to_string(m.dim0());
    out += ' ';
    out += std::to_string(m.dim1());
    out += ' ';
    out += std::to_string(m.dim2());
    out += '\n';
    for (int i = 0; i < m.dim0(); ++i) {
        for (int j = 0; j < m.dim1(); ++j) {
            for (int k = 0; k < m.dim2(); ++k) {
                if (k > 0) out += ' ';
                out += m(i, j, k) ? '1' : '0';
            }
            out += '\n';
        }
    }
    atomic_write(path, out);
}

MaskTensor read_mask(const fs::path& path) {
    TokenReader reader(read_file(path), path);
    reader.expect("mask");
    const long di = reader.next_long("dim0");
    const long dj = reader.next_long("dim1");
    const long dk = reader.next_long("dim2");
    check_dims(path, di, dj, dk);
    MaskTensor m(static_cast<int>(di), static_cast<int>(dj), static_cast<int>(dk));
    for (int i = 0; i < di; ++i)
        for (int j = 0; j < dj; ++j)
            for (int k = 0; k < dk; ++k) {
                const long v = reader.next_long("mask entry");
                if (v != 0 && v != 1) fail(path, "mask entries must be 0 or 1");
                m.set(i, j, k, v == 1);
            }
    if (!reader.at_end()) fail(path, "trailing content after mask values");
    return m;
}

namespace {

void append_matrix(std::string& out, const char* name, const Matrix& m) {
    out += name;
    out += ' ';
    out += std::to_string(m.rows());
    out += ' ';
    out += std::to_string(m.cols());
    out += '\n';
    for (long r = 0; r < m.rows(); ++r) {
        for (long c = 0; c < m.cols(); ++c) {
            if (c > 0) out += ' ';
            append_double(out, m(r, c));
        }
        out += '\n';
    }
}

Matrix read_matrix(TokenReader& reader, const char* name) {
    reader.expect(name);
    const long rows = reader.next_long("rows");
    const long cols = reader.next_long("cols");
    if (rows < 1 || cols < 1 || rows > (1L << 26) || cols > (1L << 26)) {
        throw std::runtime_error(std::string("invalid matrix dims for ") + name);
    }
    Matrix m(rows, cols);
    for (long r = 0; r < rows; ++r)
        for (long c = 0; c < cols; ++c) m(r, c) = reader.next_double("matrix entry");
    return m;
}

void append_index_list(std::string& out, const char* name, const std::vector<int>& idx) {
    out += name;
    out += ' ';
    out += std::to_string(idx.size());
    for (int v : idx) {
        out += ' ';
        out += std::to_string(v);
    }
    out += '\n';
}

std::vector<int> read_index_list(TokenReader& reader, const char* name) {
    reader.expect(name);
    const long n = reader.next_long("index count");
    if (n < 0 || n > (1L << 26)) throw std::runtime_error("invalid index count");
    std::vector<int> idx(static_cast<size_t>(n));
    for (long t = 0; t < n; ++t) idx[t] = reader.next_int("index");
    return idx;
}

}  // namespace

void write_fit_result(const fs::path& path, const FitResult& fit) {
    std::string out;
    out += "fit_result\n";
    out += "rank " + std::to_string(fit.factors.rank()) + "\n";
    out += "converged " + std::to_string(fit.converged ? 1 : 0) + "\n";
    out += "sweeps_used " + std::to_string(fit.sweeps_used) + "\n";
    out += "restart_index " + std::to_string(fit.restart_index) + "\n";
    append_matrix(out, "factor_a", fit.factors.a);
    append_matrix(out, "factor_b", fit.factors.b);
    append_matrix(out, "factor_c", fit.factors.c);
    out += "objective_trace " + std::to_string(fit.objective_trace.size()) + "\n";
    for (size_t t = 0; t < fit.objective_trace.size(); ++t) {
        if (t > 0) out += ' ';
        append_double(out, fit.objective_trace[t]);
    }
    if (!fit.objective_trace.empty()) out += '\n';
    append_index_list(out, "undetermined_a", fit.undetermined_rows[0]);
    append_index_list(out, "undetermined_b", fit.undetermined_rows[1]);
    append_index_list(out, "undetermined_c", fit.undetermined_rows[2]);
    append_index_list(out, "degenerate_columns", fit.degenerate_columns);
    out += "end\n";
    atomic_write(path, out);
}

FitResult read_fit_result(const fs::path& path) {
    TokenReader reader(read_file(path), path);
    reader.expect("fit_result");
    FitResult fit;
    reader.expect("rank");
    const int rank = reader.next_int("rank");
    reader.expect("converged");
    fit.converged = reader.next_long("converged flag") != 0;
    reader.expect("sweeps_used");
    fit.sweeps_used = reader.next_int("sweeps_used");
    reader.expect("restart_index");
    fit.restart_index = reader.next_int("restart_index");
    fit.factors.a = read_matrix(reader, "factor_a");
    fit.factors.b = read_matrix(reader, "factor_b");
    fit.factors.c = read_matrix(reader, "factor_c");
    if (fit.factors.rank() != rank) fail(path, "factor rank mismatch");
    fit.factors.require_consistent();
    reader.expect("objective_trace");
    const long n_trace = reader.next_long("trace length");
    fit.objective_trace.resize(static_cast<size_t>(n_trace));
    for (long t = 0; t < n_trace; ++t) fit.objective_trace[t] = reader.next_double("objective");
    fit.undetermined_rows[0] = read_index_list(reader, "undetermined_a");
    fit.undetermined_rows[1] = read_index_list(reader, "undetermined_b");
    fit.undetermined_rows[2] = read_index_list(reader, "undetermined_c");
    fit.degenerate_columns = read_index_list(reader, "degenerate_columns");
    reader.expect("end");
    return fit;
}

void write_slab_scheme(const fs::path& path, const SlabScheme& s) {
    std::string out;
    out += "scheme slab\n";
    out += "dims " + std::to_string(s.dim0) + " " + std::to_string(s.dim1) + " " +
           std::to_string(s.dim2) + "\n";
    append_index_list(out, "horizontal", s.horizontal);
    append_index_list(out, "frontal", s.frontal);
    atomic_write(path, out);
}

void write_fiber_scheme(const fs::path& path, const FiberScheme& s) {
    std::string out;
    out += "scheme fiber\n";
    out += "dims " + std::to_string(s.dim0) + " " + std::to_string(s.dim1) + " " +
           std::to_string(s.dim2) + "\n";
    append_index_list(out, "rows1", s.patterns[0].rows);
    append_index_list(out, "cols1", s.patterns[0].cols);
    append_index_list(out, "rows2", s.patterns[1].rows);
    append_index_list(out, "cols2", s.patterns[1].cols);
    atomic_write(path, out);
}

SchemeFile read_scheme(const fs::path& path) {
    TokenReader reader(read_file(path), path);
    reader.expect("scheme");
    SchemeFile file;
    file.kind = reader.next("scheme kind");
    reader.expect("dims");
    const int di = reader.next_int("dim0");
    const int dj = reader.next_int("dim1");
    const int dk = reader.next_int("dim2");
    if (file.kind == "slab") {
        auto horizontal = read_index_list(reader, "horizontal");
        auto frontal = read_index_list(reader, "frontal");
        file.slab = SlabScheme(std::move(horizontal), std::move(frontal), di, dj, dk);
    } else if (file.kind == "fiber") {
        FiberPattern p1, p2;
        p1.rows = read_index_list(reader, "rows1");
        p1.cols = read_index_list(reader, "cols1");
        p2.rows = read_index_list(reader, "rows2");
        p2.cols = read_index_list(reader, "cols2");
        file.fiber = FiberScheme(std::move(p1), std::move(p2), di, dj, dk);
    } else {
        fail(path, "unknown scheme kind: " + file.kind);
    }
    return file;
}

void write_meta(const fs::path& path, const StateTensorMeta& meta) {
    meta.validate();
    std::string out;
    out += "state_meta\n";
    out += "phases " + std::to_string(meta.phase_count()) + "\n";
    for (int i = 0; i < meta.phase_count(); ++i) {
        out += meta.phase_labels[i];
        out += ' ';
        out += meta.zero_injection[i] ? '1' : '0';
        out += '\n';
    }
    out += "timestamps " + std::to_string(meta.step_count()) + "\n";
    for (int k = 0; k < meta.step_count(); ++k) {
        if (k > 0) out += ' ';
        append_double(out, meta.timestamps_min[k]);
    }
    out += "\nend\n";
    atomic_write(path, out);
}

StateTensorMeta read_meta(const fs::path& path) {
    TokenReader reader(read_file(path), path);
    reader.expect("state_meta");
    StateTensorMeta meta;
    reader.expect("phases");
    const long n = reader.next_long("phase count");
    for (long i = 0; i < n; ++i) {
        meta.phase_labels.push_back(reader.next("phase label"));
        const long flag = reader.next_long("zero-injection flag");
        if (flag != 0 && flag != 1) fail(path, "zero-injection flag must be 0 or 1");
        meta.zero_injection.push_back(static_cast<std::uint8_t>(flag));
    }
    reader.expect("timestamps");
    const long steps = reader.next_long("timestamp count");
    for (long k = 0; k < steps; ++k) {
        meta.timestamps_min.push_back(reader.next_double("timestamp"));
    }
    reader.expect("end");
    meta.validate();
    return meta;
}

void write_state_csv(const fs::path& path, const Tensor3& x, const StateTensorMeta& meta,
                     const MaskTensor* mask) {
    meta.validate();
    if (meta.phase_count() != x.dim0() || meta.step_count() != x.dim2() ||
        x.dim1() != measurement::kCount) {
        throw std::invalid_argument("write_state_csv: meta does not match tensor dims");
    }
    if (mask != nullptr && !mask->matches(x)) {
        throw std::invalid_argument("write_state_csv: mask dims differ");
    }
    std::string out;
    out += kCsvHeader;
    out += '\n';
    for (int k = 0; k < x.dim2(); ++k) {
        for (int i = 0; i < x.dim0(); ++i) {
            append_double(out, meta.timestamps_min[k]);
            out += ',';
            out += meta.phase_labels[i];
            for (int j = 0; j < measurement::kCount; ++j) {
                out += ',';
                if (mask == nullptr || (*mask)(i, j, k)) append_double(out, x(i, j, k));
            }
            out += '\n';
        }
    }
    atomic_write(path, out);
}

std::vector<StateRecord> read_state_csv(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) fail(path, "empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) {
        fail(path, "unexpected header (measurement names/units must be '" +
                       std::string(kCsvHeader) + "')");
    }
    std::vector<StateRecord> records;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 2 + measurement::kCount) {
            fail_line(path, line_no, "expected " + std::to_string(2 + measurement::kCount) +
                                         " fields, found " + std::to_string(fields.size()));
        }
        StateRecord rec;
        rec.timestamp_min = parse_double(fields[0], path, "timestamp");
        rec.phase_label = fields[1];
        if (rec.phase_label.empty()) fail_line(path, line_no, "empty phase label");
        for (int j = 0; j < measurement::kCount; ++j) {
            const std::string& cell = fields[2 + j];
            if (cell.empty()) continue;
            rec.values[j] = parse_double(cell, path, measurement::kNames[j]);
        }
        records.push_back(std::move(rec));
    }
    return records;
}

void write_feeder(const fs::path& path, const FeederModel& feeder) {
    feeder.validate();
    std::string out;
    out += "feeder " + feeder.name + "\n";
    out += "sbase_kva ";
    append_double(out, feeder.sbase_kva);
    out += '\n';
    for (size_t b = 0; b < feeder.buses.size(); ++b) {
        const FeederBus& bus = feeder.buses[b];
        out += "bus " + bus.name;
        if (b == 0) {
            out += " slack";
        } else {
            out += " parent " + feeder.buses[bus.parent].name;
            out += " r ";
            append_double(out, bus.line_r);
            out += " x ";
            append_double(out, bus.line_x);
        }
        out += " phases " + phase_set_string(bus.has_phase);
        const std::string loads = phase_set_string(bus.has_load);
        const std::string solar = phase_set_string(bus.has_solar);
        if (loads != "-") out += " load " + loads;
        if (solar != "-") out += " solar " + solar;
        out += '\n';
    }
    atomic_write(path, out);
}

FeederModel read_feeder(const fs::path& path) {
    std::istringstream in(read_file(path));
    FeederModel feeder;
    std::map<std::string, int> bus_index;
    std::string line;
    int line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const size_t comment = line.find('#');
        if (comment != std::string::npos) line.resize(comment);
        std::istringstream ls(line);
        std::string word;
        if (!(ls >> word)) continue;
        if (word == "feeder") {
            if (saw_header) fail_line(path, line_no, "duplicate feeder header");
            if (!(ls >> feeder.name)) fail_line(path, line_no, "feeder name missing");
            saw_header = true;
        } else if (word == "sbase_kva") {
            std::string v;
            if (!(ls >> v)) fail_line(path, line_no, "sbase_kva value missing");
            feeder.sbase_kva = parse_double(v, path, "sbase_kva");
        } else if (word == "bus") {
            if (!saw_header) fail_line(path, line_no, "bus before feeder header");
            FeederBus bus;
            if (!(ls >> bus.name)) fail_line(path, line_no, "bus name missing");
            std::string tok;
            bool saw_phases = false;
            auto line_double = [&](const std::string& v, const char* what) {
                double value = 0.0;
                auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), value);
                if (ec != std::errc() || ptr != v.data() + v.size()) {
                    fail_line(path, line_no,
                              std::string("invalid ") + what + ": '" + v + "'");
                }
                return value;
            };
            while (ls >> tok) {
                if (tok == "slack") {
                    bus.parent = -1;
                } else if (tok == "parent") {
                    std::string pname;
                    if (!(ls >> pname)) fail_line(path, line_no, "parent name missing");
                    const auto it = bus_index.find(pname);
                    if (it == bus_index.end()) {
                        fail_line(path, line_no, "parent bus '" + pname +
                                                     "' not defined above this line");
                    }
                    bus.parent = it->second;
                } else if (tok == "r") {
                    std::string v;
                    if (!(ls >> v)) fail_line(path, line_no, "r value missing");
                    bus.line_r = line_double(v, "line r");
                } else if (tok == "x") {
                    std::string v;
                    if (!(ls >> v)) fail_line(path, line_no, "x value missing");
                    bus.line_x = line_double(v, "line x");
                } else if (tok == "phases") {
                    std::string v;
                    if (!(ls >> v)) fail_line(path, line_no, "phase set missing");
                    bus.has_phase = parse_phase_set(v, path, line_no);
                    saw_phases = true;
                } else if (tok == "load") {
                    std::string v;
                    if (!(ls >> v)) fail_line(path, line_no, "load set missing");
                    bus.has_load = parse_phase_set(v, path, line_no);
                } else if (tok == "solar") {
                    std::string v;
                    if (!(ls >> v)) fail_line(path, line_no, "solar set missing");
                    bus.has_solar = parse_phase_set(v, path, line_no);
                } else {
                    fail_line(path, line_no, "unknown bus attribute '" + tok + "'");
                }
            }
            if (!saw_phases) fail_line(path, line_no, "bus " + bus.name + " lists no phases");
            if (feeder.buses.empty() && bus.parent != -1) {
                fail_line(path, line_no, "first bus must be the slack bus");
            }
            if (bus_index.count(bus.name) != 0) {
                fail_line(path, line_no, "duplicate bus name " + bus.name);
            }
            bus_index[bus.name] = static_cast<int>(feeder.buses.size());
            feeder.buses.push_back(std::move(bus));
        } else {
            fail_line(path, line_no, "unknown directive '" + word + "'");
        }
    }
    if (!saw_header) fail(path, "missing feeder header");
    try {
        feeder.validate();
    } catch (const std::exception& e) {
        fail(path, e.what());
    }
    return feeder;
}

}  // namespace gridcpd::io
