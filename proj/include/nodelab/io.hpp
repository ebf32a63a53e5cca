#pragma once

#include "nodelab/grid.hpp"

#include <json.hpp>

#include <concepts>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

namespace nodelab::io {

using json = nlohmann::ordered_json;

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double x);
double parse_double(std::string_view s);

/// The number itself, or null when it is NaN or infinite (JSON has no NaN).
json finite_or_null(double x);

json grid_to_json(const Grid& grid);
Grid grid_from_json(const json& j);

/// Minimal CSV writer. Doubles are written in shortest round-trip form.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header);

    template <class... Ts>
    void row(const Ts&... cells)
    {
        bool first = true;
        ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
        out_ << '\n';
    }

private:
    static std::string cell(double x) { return format_double(x); }
    static std::string cell(std::string_view s) { return std::string(s); }
    static std::string cell(const char* s) { return s; }
    static std::string cell(bool b) { return b ? "1" : "0"; }
    template <std::integral T>
    static std::string cell(T v) { return std::to_string(v); }

    std::ofstream out_;
};

/// Writes `<stem>.csv` with header index,x[,y],re,im and the sidecar grid
/// descriptor `<stem>.json`. Extra keys in `metadata` go into the sidecar.
void write_wavefunction(const std::filesystem::path& stem, const Wavefunction& psi,
                        const json& metadata = json::object());

/// Reads a wavefunction written by write_wavefunction; bit-exact for finite doubles.
Wavefunction read_wavefunction(const std::filesystem::path& stem);

void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

} // namespace nodelab::io
