#include "nodelab/io.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace nodelab::io {

namespace fs = std::filesystem;

std::string format_double(double x)
{
    if (std::isnan(x)) {
        return "nan";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return {buf, res.ptr};
}

double parse_double(std::string_view s)
{
    if (s == "nan") {
        return std::nan("");
    }
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw std::invalid_argument("not a number: '" + std::string(s) + "'");
    }
    return v;
}

json finite_or_null(double x)
{
    return std::isfinite(x) ? json(x) : json(nullptr);
}

json grid_to_json(const Grid& grid)
{
    json j;
    j["dim"] = grid.dim();
    json pts = json::array();
    json ext = json::array();
    for (int a = 0; a < grid.dim(); ++a) {
        pts.push_back(grid.points(a));
        ext.push_back({grid.axis(a).lo, grid.axis(a).hi});
    }
    j["points"] = pts;
    j["extent"] = ext;
    j["periodic"] = grid.periodic();
    return j;
}

Grid grid_from_json(const json& j)
{
    const int dim = j.at("dim").get<int>();
    const auto& pts = j.at("points");
    const auto& ext = j.at("extent");
    const bool periodic = j.value("periodic", true);
    auto axis = [&](int a) {
        return Axis{pts.at(a).get<std::size_t>(), ext.at(a).at(0).get<double>(), ext.at(a).at(1).get<double>()};
    };
    if (dim == 1) {
        const Axis x = axis(0);
        return Grid::line(x.points, x.lo, x.hi, periodic);
    }
    if (dim == 2) {
        return Grid::plane(axis(0), axis(1), periodic);
    }
    throw std::invalid_argument("grid descriptor: dim must be 1 or 2");
}

CsvWriter::CsvWriter(const fs::path& path, std::initializer_list<std::string_view> header)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    out_.open(path);
    if (!out_) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    bool first = true;
    for (auto h : header) {
        out_ << (first ? "" : ",") << h;
        first = false;
    }
    out_ << '\n';
}

void write_wavefunction(const fs::path& stem, const Wavefunction& psi, const json& metadata)
{
    const Grid& g = psi.grid();
    fs::path csv = stem;
    csv += ".csv";
    if (g.dim() == 1) {
        CsvWriter w(csv, {"index", "x", "re", "im"});
        for (std::size_t i = 0; i < psi.size(); ++i) {
            w.row(i, g.coords(i)[0], psi[i].real(), psi[i].imag());
        }
    } else {
        CsvWriter w(csv, {"index", "x", "y", "re", "im"});
        for (std::size_t i = 0; i < psi.size(); ++i) {
            const Point p = g.coords(i);
            w.row(i, p[0], p[1], psi[i].real(), psi[i].imag());
        }
    }
    json side = grid_to_json(g);
    for (const auto& [k, v] : metadata.items()) {
        side[k] = v;
    }
    fs::path sidecar = stem;
    sidecar += ".json";
    write_json(sidecar, side);
}

Wavefunction read_wavefunction(const fs::path& stem)
{
    fs::path sidecar = stem;
    sidecar += ".json";
    const Grid g = grid_from_json(read_json(sidecar));
    fs::path csv = stem;
    csv += ".csv";
    std::ifstream in(csv);
    if (!in) {
        throw std::runtime_error("cannot open " + csv.string());
    }
    std::string line;
    std::getline(in, line);
    const std::string expected = g.dim() == 1 ? "index,x,re,im" : "index,x,y,re,im";
    if (line != expected) {
        throw std::invalid_argument("unexpected wavefunction CSV header: " + line);
    }
    std::vector<cplx> amps(g.size());
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string_view> cols;
        std::string_view sv(line);
        while (true) {
            const auto pos = sv.find(',');
            cols.push_back(sv.substr(0, pos));
            if (pos == std::string_view::npos) {
                break;
            }
            sv.remove_prefix(pos + 1);
        }
        if (cols.size() != static_cast<std::size_t>(g.dim()) + 3) {
            throw std::invalid_argument("malformed wavefunction CSV row: " + line);
        }
        const auto idx = static_cast<std::size_t>(parse_double(cols[0]));
        if (idx >= amps.size()) {
            throw std::invalid_argument("wavefunction CSV index out of range");
        }
        amps[idx] = {parse_double(cols[cols.size() - 2]), parse_double(cols.back())};
        ++rows;
    }
    if (rows != g.size()) {
        throw std::invalid_argument("wavefunction CSV row count does not match grid");
    }
    return Wavefunction(g, std::move(amps));
}

void write_json(const fs::path& path, const json& j)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << j.dump(2) << '\n';
}

json read_json(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return json::parse(in);
}

} // namespace nodelab::io
