#pragma once

// File formats. Tensors use a little-endian binary container; masks,
// representations, problems, quadratic forms and matrices use line-oriented
// text with '#' comments and 1-based indices. Grammar in docs/formats.md.

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "completion.hpp"
#include "equivariance.hpp"
#include "sdp.hpp"
#include "sos.hpp"

namespace tsdp {

inline constexpr std::array<char, 4> tensor_magic{'T', 'S', 'D', 'P'};
inline constexpr std::uint16_t tensor_format_version = 1;
inline constexpr std::size_t tensor_header_bytes = 4 + 2 + 3 * 4;

namespace detail {

template <typename T>
void put_le(std::string& out, T value) {
    for (std::size_t b = 0; b < sizeof(T); ++b)
        out.push_back(static_cast<char>((value >> (8 * b)) & 0xff));
}

template <typename T>
T get_le(std::string_view bytes, std::size_t offset) {
    T value = 0;
    for (std::size_t b = 0; b < sizeof(T); ++b)
        value |= static_cast<T>(static_cast<unsigned char>(bytes[offset + b])) << (8 * b);
    return value;
}

inline std::string read_all(std::istream& in) {
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline std::ifstream open_in(std::filesystem::path const& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in)
        throw InvalidArgument("cannot open " + path.string() + " for reading");
    return in;
}

inline std::ofstream open_out(std::filesystem::path const& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode);
    if (!out)
        throw InvalidArgument("cannot open " + path.string() + " for writing");
    return out;
}

} // namespace detail

inline std::string encode_tensor(Tensor3 const& a) {
    std::string out(tensor_magic.begin(), tensor_magic.end());
    out.reserve(tensor_header_bytes + 8 * a.size());
    detail::put_le<std::uint16_t>(out, tensor_format_version);
    for (std::size_t e : {a.n1(), a.n2(), a.n3()}) {
        if (e > UINT32_MAX)
            throw InvalidArgument("encode_tensor: extent " + std::to_string(e) + " does not fit in 32 bits");
        detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e));
    }
    for (double v : a.data())
        detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    return out;
}

inline Tensor3 decode_tensor(std::string_view bytes) {
    if (bytes.size() < tensor_header_bytes)
        throw ParseError("tensor file: header truncated, expected " + std::to_string(tensor_header_bytes) +
                             " bytes, got " + std::to_string(bytes.size()),
                         bytes.size());
    if (!std::equal(tensor_magic.begin(), tensor_magic.end(), bytes.begin()))
        throw ParseError("tensor file: bad magic, expected \"TSDP\"", 0);
    auto const version = detail::get_le<std::uint16_t>(bytes, 4);
    if (version != tensor_format_version)
        throw ParseError("tensor file: unsupported version " + std::to_string(version) + ", expected " +
                             std::to_string(tensor_format_version),
                         4);
    std::size_t const n1 = detail::get_le<std::uint32_t>(bytes, 6);
    std::size_t const n2 = detail::get_le<std::uint32_t>(bytes, 10);
    std::size_t const n3 = detail::get_le<std::uint32_t>(bytes, 14);
    if (n1 == 0 || n2 == 0 || n3 == 0)
        throw ParseError("tensor file: extents must be positive, got " + detail::extents_str(n1, n2, n3), 6);
    std::size_t const expected = tensor_header_bytes + 8 * n1 * n2 * n3;
    if (bytes.size() < expected)
        throw ParseError("tensor file: payload truncated, expected " + std::to_string(expected) + " bytes, got " +
                             std::to_string(bytes.size()),
                         bytes.size());
    if (bytes.size() > expected)
        throw ParseError("tensor file: trailing data, expected " + std::to_string(expected) + " bytes, got " +
                             std::to_string(bytes.size()),
                         expected);
    std::vector<double> data(n1 * n2 * n3);
    for (std::size_t t = 0; t < data.size(); ++t) {
        data[t] = std::bit_cast<double>(detail::get_le<std::uint64_t>(bytes, tensor_header_bytes + 8 * t));
        if (!std::isfinite(data[t]))
            throw ParseError("tensor file: non-finite entry", tensor_header_bytes + 8 * t);
    }
    return Tensor3(n1, n2, n3, std::move(data));
}

inline void write_tensor(std::ostream& out, Tensor3 const& a) {
    auto const bytes = encode_tensor(a);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline Tensor3 read_tensor(std::istream& in) { return decode_tensor(detail::read_all(in)); }

inline void save_tensor(std::filesystem::path const& path, Tensor3 const& a) {
    auto out = detail::open_out(path, std::ios::binary);
    write_tensor(out, a);
    if (!out)
        throw InvalidArgument("failed writing " + path.string());
}

inline Tensor3 load_tensor(std::filesystem::path const& path) {
    auto in = detail::open_in(path, std::ios::binary);
    try {
        return read_tensor(in);
    } catch (ParseError const& e) {
        throw ParseError(path.string() + ": " + e.what(), e.location());
    }
}

namespace detail {

/// Splits text into whitespace-separated tokens line by line, dropping '#' comments and blank lines.
class LineReader {
public:
    explicit LineReader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}

    bool next(std::vector<std::string>& tokens) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_;
            if (auto const hash = line.find('#'); hash != std::string::npos)
                line.resize(hash);
            std::istringstream ss(line);
            tokens.clear();
            for (std::string t; ss >> t;)
                tokens.push_back(std::move(t));
            if (!tokens.empty())
                return true;
        }
        return false;
    }

    std::size_t line() const noexcept { return line_; }

    [[noreturn]] void fail(std::string const& what) const {
        throw ParseError(name_ + ":" + std::to_string(line_) + ": " + what, line_);
    }

    double number(std::string const& token) const {
        double v = 0.0;
        auto const [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(v))
            fail("expected a finite number, got '" + token + "'");
        return v;
    }

    std::size_t count(std::string const& token) const {
        std::size_t v = 0;
        auto const [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc{} || ptr != token.data() + token.size())
            fail("expected a non-negative integer, got '" + token + "'");
        return v;
    }

    std::size_t positive(std::string const& token) const {
        std::size_t const v = count(token);
        if (v == 0)
            fail("expected a positive integer, got '" + token + "'");
        return v;
    }

    void expect_arity(std::vector<std::string> const& tokens, std::size_t n) const {
        if (tokens.size() != n)
            fail("'" + tokens.front() + "' expects " + std::to_string(n - 1) + " argument(s), got " +
                 std::to_string(tokens.size() - 1));
    }

private:
    std::istream& in_;
    std::string name_;
    std::size_t line_ = 0;
};

inline std::string format_double(double v) {
    std::array<char, 32> buf{};
    auto const [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

inline void write_matrix_rows(std::ostream& out, Matrix const& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            out << (j ? " " : "") << format_double(m(i, j));
        out << '\n';
    }
}

inline Matrix read_matrix_rows(LineReader& r, std::vector<std::string>& tokens, std::size_t n) {
    Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (!r.next(tokens))
            r.fail("expected " + std::to_string(n) + " matrix rows, got " + std::to_string(i));
        if (tokens.size() != n)
            r.fail("matrix row has " + std::to_string(tokens.size()) + " entries, expected " + std::to_string(n));
        for (std::size_t j = 0; j < n; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r.number(tokens[j]);
    }
    return m;
}

} // namespace detail

// Matrix text file: one row per line.

inline Matrix read_matrix_text(std::istream& in, std::string const& name = "matrix") {
    detail::LineReader r(in, name);
    std::vector<std::string> tokens;
    std::vector<std::vector<double>> rows;
    while (r.next(tokens)) {
        if (!rows.empty() && tokens.size() != rows.front().size())
            r.fail("row has " + std::to_string(tokens.size()) + " entries, expected " +
                   std::to_string(rows.front().size()));
        std::vector<double> row;
        for (auto const& t : tokens)
            row.push_back(r.number(t));
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        r.fail("matrix file is empty");
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

inline void write_matrix_text(std::ostream& out, Matrix const& m) { detail::write_matrix_rows(out, m); }

inline Matrix load_matrix_text(std::filesystem::path const& path) {
    auto in = detail::open_in(path);
    return read_matrix_text(in, path.string());
}

// Mask file: "size N1 N2" then one "i j" pair per line.

struct MaskFile {
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    TubalMask omega; ///< 0-based
};

inline MaskFile read_mask(std::istream& in, std::string const& name = "mask") {
    detail::LineReader r(in, name);
    std::vector<std::string> tokens;
    if (!r.next(tokens) || tokens.front() != "size")
        r.fail("mask file must start with 'size N1 N2'");
    r.expect_arity(tokens, 3);
    MaskFile out{r.positive(tokens[1]), r.positive(tokens[2]), {}};
    std::set<std::pair<std::size_t, std::size_t>> seen;
    while (r.next(tokens)) {
        if (tokens.size() != 2)
            r.fail("expected an index pair 'i j', got " + std::to_string(tokens.size()) + " tokens");
        std::size_t const i = r.positive(tokens[0]);
        std::size_t const j = r.positive(tokens[1]);
        if (i > out.n1 || j > out.n2)
            r.fail("index (" + tokens[0] + "," + tokens[1] + ") is outside " + std::to_string(out.n1) + "x" +
                   std::to_string(out.n2));
        if (!seen.emplace(i, j).second)
            r.fail("duplicate index (" + tokens[0] + "," + tokens[1] + ")");
        out.omega.emplace_back(i - 1, j - 1);
    }
    if (out.omega.empty())
        r.fail("mask lists no indices");
    return out;
}

inline void write_mask(std::ostream& out, MaskFile const& m) {
    out << "size " << m.n1 << ' ' << m.n2 << '\n';
    for (auto const& [i, j] : m.omega)
        out << i + 1 << ' ' << j + 1 << '\n';
}

inline MaskFile load_mask(std::filesystem::path const& path) {
    auto in = detail::open_in(path);
    return read_mask(in, path.string());
}

// Representation file: "n3 N", optional "dims d1 ... dm", then "generator" blocks of N rows.

struct RepFile {
    std::vector<Matrix> generators;
    std::optional<IrrepDims> dims;

    GroupRep rep() const { return GroupRep(generators); }
};

inline RepFile read_rep(std::istream& in, std::string const& name = "rep") {
    detail::LineReader r(in, name);
    std::vector<std::string> tokens;
    if (!r.next(tokens) || tokens.front() != "n3")
        r.fail("representation file must start with 'n3 N'");
    r.expect_arity(tokens, 2);
    std::size_t const n3 = r.positive(tokens[1]);
    RepFile out;
    while (r.next(tokens)) {
        if (tokens.front() == "dims") {
            if (out.dims)
                r.fail("'dims' given twice");
            if (tokens.size() < 2)
                r.fail("'dims' needs at least one block size");
            IrrepDims d;
            for (std::size_t t = 1; t < tokens.size(); ++t)
                d.dims.push_back(r.positive(tokens[t]));
            if (d.total() != n3)
                r.fail("dims sum to " + std::to_string(d.total()) + ", expected " + std::to_string(n3));
            out.dims = std::move(d);
        } else if (tokens.front() == "generator") {
            r.expect_arity(tokens, 1);
            out.generators.push_back(detail::read_matrix_rows(r, tokens, n3));
        } else {
            r.fail("unknown keyword '" + tokens.front() + "'");
        }
    }
    if (out.generators.empty())
        r.fail("representation lists no generators");
    return out;
}

inline void write_rep(std::ostream& out, RepFile const& rep) {
    out << "n3 " << rep.generators.front().rows() << '\n';
    if (rep.dims) {
        out << "dims";
        for (auto d : rep.dims->dims)
            out << ' ' << d;
        out << '\n';
    }
    for (auto const& g : rep.generators) {
        out << "generator\n";
        detail::write_matrix_rows(out, g);
    }
}

inline RepFile load_rep(std::filesystem::path const& path) {
    auto in = detail::open_in(path);
    return read_rep(in, path.string());
}

// Form file: "m M", "n3 N", then the upper triangle of the Gram matrix, row-major.

inline QuadraticForm read_form(std::istream& in, std::string const& name = "form") {
    detail::LineReader r(in, name);
    std::vector<std::string> tokens;
    std::optional<std::size_t> m, n3;
    std::vector<double> values;
    while (r.next(tokens)) {
        if (tokens.front() == "m" || tokens.front() == "n3") {
            if (!values.empty())
                r.fail("'" + tokens.front() + "' must precede the coefficients");
            r.expect_arity(tokens, 2);
            auto& slot = tokens.front() == "m" ? m : n3;
            if (slot)
                r.fail("'" + tokens.front() + "' given twice");
            slot = r.positive(tokens[1]);
            continue;
        }
        if (!m || !n3)
            r.fail("'m' and 'n3' must precede the coefficients");
        for (auto const& t : tokens)
            values.push_back(r.number(t));
    }
    if (!m || !n3)
        r.fail("form file needs 'm' and 'n3'");
    std::size_t const n = *m * *n3;
    if (values.size() != n * (n + 1) / 2)
        r.fail("expected " + std::to_string(n * (n + 1) / 2) + " upper-triangle coefficients, got " +
               std::to_string(values.size()));
    QuadraticForm f{*m, *n3, Matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))};
    std::size_t t = 0;
    for (Eigen::Index i = 0; i < f.gram.rows(); ++i)
        for (Eigen::Index j = i; j < f.gram.cols(); ++j) {
            f.gram(i, j) = values[t++];
            f.gram(j, i) = f.gram(i, j);
        }
    return f;
}

inline void write_form(std::ostream& out, QuadraticForm const& f) {
    out << "m " << f.m << "\nn3 " << f.n3 << '\n';
    for (Eigen::Index i = 0; i < f.gram.rows(); ++i) {
        for (Eigen::Index j = i; j < f.gram.cols(); ++j)
            out << (j > i ? " " : "") << detail::format_double(f.gram(i, j));
        out << '\n';
    }
}

inline QuadraticForm load_form(std::filesystem::path const& path) {
    auto in = detail::open_in(path);
    return read_form(in, path.string());
}

// Problem file: "sense", "cost PATH", "constraint PATH B" lines, optional "transform SPEC" and "route".

struct ProblemFile {
    Sense sense = Sense::min;
    std::filesystem::path cost;
    std::vector<std::pair<std::filesystem::path, double>> constraints;
    std::optional<std::string> transform;
    Route route = Route::automatic;
};

inline Route parse_route(std::string_view s) {
    if (s == "auto")
        return Route::automatic;
    if (s == "general")
        return Route::general;
    if (s == "sliced")
        return Route::sliced;
    throw InvalidArgument("unknown route '" + std::string(s) + "' (expected auto, general or sliced)");
}

/// Relative tensor paths are resolved against `base`.
inline ProblemFile read_problem(std::istream& in, std::filesystem::path const& base = {},
                                std::string const& name = "problem") {
    detail::LineReader r(in, name);
    std::vector<std::string> tokens;
    ProblemFile out;
    bool have_sense = false, have_cost = false, have_route = false;
    auto resolve = [&](std::string const& p) {
        std::filesystem::path path(p);
        return path.is_absolute() ? path : base / path;
    };
    while (r.next(tokens)) {
        auto const& key = tokens.front();
        if (key == "sense") {
            r.expect_arity(tokens, 2);
            if (have_sense)
                r.fail("'sense' given twice");
            if (tokens[1] != "min" && tokens[1] != "max")
                r.fail("sense must be 'min' or 'max', got '" + tokens[1] + "'");
            out.sense = tokens[1] == "max" ? Sense::max : Sense::min;
            have_sense = true;
        } else if (key == "cost") {
            r.expect_arity(tokens, 2);
            if (have_cost)
                r.fail("'cost' given twice");
            out.cost = resolve(tokens[1]);
            have_cost = true;
        } else if (key == "constraint") {
            r.expect_arity(tokens, 3);
            out.constraints.emplace_back(resolve(tokens[1]), r.number(tokens[2]));
        } else if (key == "transform") {
            r.expect_arity(tokens, 2);
            if (out.transform)
                r.fail("'transform' given twice");
            out.transform = tokens[1];
        } else if (key == "route") {
            r.expect_arity(tokens, 2);
            if (have_route)
                r.fail("'route' given twice");
            try {
                out.route = parse_route(tokens[1]);
            } catch (InvalidArgument const& e) {
                r.fail(e.what());
            }
            have_route = true;
        } else {
            r.fail("unknown keyword '" + key + "'");
        }
    }
    if (!have_sense || !have_cost)
        r.fail("problem file needs 'sense' and 'cost'");
    return out;
}

inline void write_problem(std::ostream& out, ProblemFile const& p) {
    out << "sense " << to_string(p.sense) << "\ncost " << p.cost.string() << '\n';
    for (auto const& [path, b] : p.constraints)
        out << "constraint " << path.string() << ' ' << detail::format_double(b) << '\n';
    if (p.transform)
        out << "transform " << *p.transform << '\n';
    out << "route " << to_string(p.route) << '\n';
}

inline ProblemFile load_problem(std::filesystem::path const& path) {
    auto in = detail::open_in(path);
    return read_problem(in, path.parent_path(), path.string());
}

/// Loads the tensors a problem file names and assembles the M-SDP.
inline MSDPProblem assemble_problem(ProblemFile const& file, StarMContext const& ctx) {
    MSDPProblem p{ctx, load_tensor(file.cost), {}, file.sense};
    for (auto const& [path, b] : file.constraints)
        p.constraints.push_back({load_tensor(path), b});
    return p;
}

// Transform specifications: identity[:N], dct[:N], haar[:N], data, random[:SEED], file:PATH.

struct TransformSpec {
    TransformKind kind = TransformKind::identity;
    std::optional<std::size_t> n3;
    std::optional<std::uint64_t> seed;
    std::filesystem::path path;
};

inline TransformSpec parse_transform_spec(std::string_view text) {
    auto const colon = text.find(':');
    std::string_view const head = text.substr(0, colon);
    std::optional<std::string_view> arg;
    if (colon != std::string_view::npos)
        arg = text.substr(colon + 1);
    auto number = [&](std::string_view s, char const* what) {
        std::uint64_t v = 0;
        auto const [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
            throw InvalidArgument("transform '" + std::string(text) + "': " + what + " must be a non-negative integer");
        return v;
    };
    TransformSpec out;
    if (head == "file") {
        if (!arg || arg->empty())
            throw InvalidArgument("transform 'file' needs a path: file:PATH");
        out.kind = TransformKind::user;
        out.path = std::string(*arg);
        return out;
    }
    if (head == "data") {
        if (arg)
            throw InvalidArgument("transform 'data' takes no argument");
        out.kind = TransformKind::data_dependent;
        return out;
    }
    if (head == "random") {
        out.kind = TransformKind::random;
        if (arg)
            out.seed = number(*arg, "seed");
        return out;
    }
    if (head != "identity" && head != "dct" && head != "haar")
        throw InvalidArgument("unknown transform '" + std::string(text) +
                              "' (expected identity, dct, haar, data, random[:SEED] or file:PATH)");
    out.kind = parse_transform_kind(head);
    if (arg) {
        out.n3 = number(*arg, "size");
        if (*out.n3 == 0)
            throw InvalidArgument("transform '" + std::string(text) + "': size must be positive");
    }
    return out;
}

/// Builds the transform for tensors with tube length n3. `data` feeds the
/// data-dependent kind; `default_seed` applies to random without an explicit seed.
inline OrthoTransform resolve_transform(TransformSpec const& spec, std::size_t n3, Tensor3 const* data = nullptr,
                                        std::uint64_t default_seed = 0) {
    if (spec.n3 && *spec.n3 != n3)
        throw DimensionError("transform size " + std::to_string(*spec.n3) + " does not match tube length " +
                             std::to_string(n3));
    switch (spec.kind) {
    case TransformKind::user: {
        Matrix m = load_matrix_text(spec.path);
        if (static_cast<std::size_t>(m.rows()) != n3 || m.rows() != m.cols())
            throw DimensionError("transform file " + spec.path.string() + " holds a " + std::to_string(m.rows()) +
                                 "x" + std::to_string(m.cols()) + " matrix, expected " + std::to_string(n3) + "x" +
                                 std::to_string(n3));
        return OrthoTransform(std::move(m), TransformKind::user);
    }
    case TransformKind::data_dependent:
        if (data == nullptr)
            throw InvalidArgument("transform 'data' needs a tensor to derive M from");
        return build_data_dependent(*data);
    case TransformKind::random: {
        TransformOptions opts;
        opts.seed = spec.seed.value_or(default_seed);
        return build_transform(TransformKind::random, n3, opts);
    }
    default: return build_transform(spec.kind, n3);
    }
}

} // namespace tsdp
