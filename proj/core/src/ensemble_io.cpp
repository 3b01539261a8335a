#include "gcb/ensemble_io.hpp"

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gcb {

static_assert(std::endian::native == std::endian::little,
              "binary ensemble format assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'G', 'C', 'B', 'E'};
constexpr uint32_t kVersion = 1;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error("ensemble io: " + path + ": " + what);
}

}  // namespace

void write_ensemble_csv(const Ensemble& ens, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) {
        fail(path, "cannot open for writing");
    }
    std::fputs("path_id,t", f);
    for (int i = 1; i <= ens.dim; ++i) {
        std::fprintf(f, ",x%d", i);
    }
    std::fputc('\n', f);
    for (long p = 0; p < ens.n_paths; ++p) {
        std::fprintf(f, "%ld,%.17g", p, ens.time);
        const auto row = ens.state(p);
        for (double v : row) {
            std::fprintf(f, ",%.17g", v);
        }
        std::fputc('\n', f);
    }
    std::fclose(f);
}

Ensemble read_ensemble_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        fail(path, "cannot open");
    }
    std::string line;
    if (!std::getline(in, line)) {
        fail(path, "empty file");
    }
    int dim = 0;
    {
        std::stringstream header(line);
        std::string field;
        int fields = 0;
        while (std::getline(header, field, ',')) {
            ++fields;
        }
        dim = fields - 2;
        if (dim < 1) {
            fail(path, "header must be path_id,t,x1,...");
        }
    }
    Ensemble ens;
    ens.dim = dim;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::stringstream row(line);
        std::string field;
        std::getline(row, field, ',');  // path_id, implicit by order
        if (!std::getline(row, field, ',')) {
            fail(path, "short row");
        }
        ens.time = std::stod(field);
        for (int i = 0; i < dim; ++i) {
            if (!std::getline(row, field, ',')) {
                fail(path, "short row");
            }
            ens.data.push_back(std::stod(field));
        }
        ++ens.n_paths;
    }
    return ens;
}

void write_ensemble_binary(const Ensemble& ens, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail(path, "cannot open for writing");
    }
    out.write(kMagic, 4);
    const uint32_t version = kVersion;
    const uint32_t dim = static_cast<uint32_t>(ens.dim);
    const uint64_t n = static_cast<uint64_t>(ens.n_paths);
    out.write(reinterpret_cast<const char*>(&version), sizeof version);
    out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(&ens.time), sizeof ens.time);
    out.write(reinterpret_cast<const char*>(&ens.dt), sizeof ens.dt);
    out.write(reinterpret_cast<const char*>(&ens.seed), sizeof ens.seed);
    out.write(reinterpret_cast<const char*>(ens.data.data()),
              static_cast<std::streamsize>(ens.data.size() * sizeof(double)));
    if (!out) {
        fail(path, "write failed");
    }
}

Ensemble read_ensemble_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(path, "cannot open");
    }
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        fail(path, "bad magic");
    }
    uint32_t version = 0, dim = 0;
    uint64_t n = 0;
    Ensemble ens;
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    in.read(reinterpret_cast<char*>(&dim), sizeof dim);
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    in.read(reinterpret_cast<char*>(&ens.time), sizeof ens.time);
    in.read(reinterpret_cast<char*>(&ens.dt), sizeof ens.dt);
    in.read(reinterpret_cast<char*>(&ens.seed), sizeof ens.seed);
    if (!in || version != kVersion || dim == 0) {
        fail(path, "bad header");
    }
    ens.dim = static_cast<int>(dim);
    ens.n_paths = static_cast<long>(n);
    ens.data.resize(static_cast<std::size_t>(n) * dim);
    in.read(reinterpret_cast<char*>(ens.data.data()),
            static_cast<std::streamsize>(ens.data.size() * sizeof(double)));
    if (!in) {
        fail(path, "truncated payload");
    }
    return ens;
}

Ensemble read_ensemble(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) {
        fail(path, "cannot open");
    }
    char magic[4] = {};
    probe.read(magic, 4);
    probe.close();
    if (std::memcmp(magic, kMagic, 4) == 0) {
        return read_ensemble_binary(path);
    }
    return read_ensemble_csv(path);
}

void write_ensemble(const Ensemble& ens, const std::string& path) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
        write_ensemble_csv(ens, path);
    } else {
        write_ensemble_binary(ens, path);
    }
}

}  // namespace gcb
