#include "kdvq/serialize.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace kdvq {

using json = nlohmann::ordered_json;

std::string field_to_json(const PeriodicField& u) {
    json j;
    j["n_max"] = u.n_max;
    j["is_real"] = u.is_real;
    std::vector<double> re, im;
    re.reserve(u.c.size());
    im.reserve(u.c.size());
    for (int n = -u.n_max; n <= u.n_max; ++n) {
        re.push_back(u.mode(n).real());
        im.push_back(u.mode(n).imag());
    }
    j["re"] = re;
    j["im"] = im;
    return j.dump();
}

PeriodicField field_from_json(const std::string& text) {
    json j = json::parse(text);
    int nm = j.at("n_max").get<int>();
    PeriodicField u(nm, j.at("is_real").get<bool>());
    auto re = j.at("re").get<std::vector<double>>();
    auto im = j.at("im").get<std::vector<double>>();
    if (re.size() != u.c.size() || im.size() != u.c.size())
        throw std::invalid_argument("field_from_json: coefficient count mismatch");
    for (int n = -nm; n <= nm; ++n)
        u.mode(n) = cplx{re[static_cast<size_t>(n + nm)], im[static_cast<size_t>(n + nm)]};
    validate(u);
    return u;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void save_field_json(const std::string& path, const PeriodicField& u) {
    write_text_file(path, field_to_json(u));
}

PeriodicField load_field_json(const std::string& path) {
    return field_from_json(read_text_file(path));
}

namespace {
const char kMagic[8] = {'K', 'D', 'V', 'Q', 'F', 'L', 'D', '1'};
}

void save_field_binary(const std::string& path, const PeriodicField& u) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f.write(kMagic, 8);
    std::int64_t nm = u.n_max, real_flag = u.is_real ? 1 : 0;
    f.write(reinterpret_cast<const char*>(&nm), 8);
    f.write(reinterpret_cast<const char*>(&real_flag), 8);
    for (int n = -u.n_max; n <= u.n_max; ++n) {
        double x = u.mode(n).real();
        f.write(reinterpret_cast<const char*>(&x), 8);
    }
    for (int n = -u.n_max; n <= u.n_max; ++n) {
        double x = u.mode(n).imag();
        f.write(reinterpret_cast<const char*>(&x), 8);
    }
}

PeriodicField load_field_binary(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kMagic, 8) != 0)
        throw std::invalid_argument("load_field_binary: bad magic");
    std::int64_t nm = 0, real_flag = 0;
    f.read(reinterpret_cast<char*>(&nm), 8);
    f.read(reinterpret_cast<char*>(&real_flag), 8);
    if (!f || nm < 0 || nm > (1 << 20)) throw std::invalid_argument("load_field_binary: bad header");
    PeriodicField u(static_cast<int>(nm), real_flag != 0);
    std::vector<double> re(u.c.size()), im(u.c.size());
    f.read(reinterpret_cast<char*>(re.data()), static_cast<std::streamsize>(re.size() * 8));
    f.read(reinterpret_cast<char*>(im.data()), static_cast<std::streamsize>(im.size() * 8));
    if (!f) throw std::invalid_argument("load_field_binary: truncated file");
    for (int n = -u.n_max; n <= u.n_max; ++n)
        u.mode(n) = cplx{re[static_cast<size_t>(n + u.n_max)], im[static_cast<size_t>(n + u.n_max)]};
    validate(u);
    return u;
}

std::string st_field_to_json(const SpaceTimeField& u) {
    json j;
    j["T"] = u.grid.T;
    j["M"] = u.grid.M;
    json snaps = json::array();
    for (const PeriodicField& s : u.snaps) snaps.push_back(json::parse(field_to_json(s)));
    j["snaps"] = snaps;
    return j.dump();
}

SpaceTimeField st_field_from_json(const std::string& text) {
    json j = json::parse(text);
    SpaceTimeField u;
    u.grid.T = j.at("T").get<double>();
    u.grid.M = j.at("M").get<int>();
    for (const auto& s : j.at("snaps")) u.snaps.push_back(field_from_json(s.dump()));
    if (static_cast<int>(u.snaps.size()) != u.grid.M + 1)
        throw std::invalid_argument("st_field_from_json: snapshot count mismatch");
    return u;
}

void save_st_field_json(const std::string& path, const SpaceTimeField& u) {
    write_text_file(path, st_field_to_json(u));
}

SpaceTimeField load_st_field_json(const std::string& path) {
    return st_field_from_json(read_text_file(path));
}

} // namespace kdvq
