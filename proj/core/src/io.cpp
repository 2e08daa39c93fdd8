#include "hplk/io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <stdexcept>

namespace hplk {

using nlohmann::json;

std::string format_double(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

namespace {

json cjson(cplx z) { return json::array({z.real(), z.imag()}); }

template <class E>
E enum_from(const std::string& s, std::initializer_list<E> all) {
    for (E e : all)
        if (s == to_string(e)) return e;
    throw std::invalid_argument("unknown tag '" + s + "'");
}

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& os, double x) {
    const std::uint64_t v = std::bit_cast<std::uint64_t>(x);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("portrait: truncated header");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("portrait: truncated data");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(v);
}

}  // namespace

std::string series_to_json(const SeriesSolution& s, int indent) {
    json j;
    j["direction"] = to_string(s.direction);
    j["anchor"] = s.anchor;
    j["first_index"] = s.first_index;
    j["exponent"] = cjson(s.exponent);
    j["normalization"] = to_string(s.normalization);
    j["truncation_error"] = s.truncation_error;
    j["open_below"] = s.open_below;
    j["open_above"] = s.open_above;
    json c = json::array();
    for (const cplx& a : s.coeffs) c.push_back(cjson(a));
    j["coeffs"] = std::move(c);
    return j.dump(indent);
}

SeriesSolution series_from_json(const std::string& text) {
    const json j = json::parse(text);
    SeriesSolution s;
    s.direction = enum_from<Direction>(j.at("direction"), {Direction::forward, Direction::backward, Direction::two_sided});
    s.normalization = enum_from<Normalization>(
        j.at("normalization"),
        {Normalization::product_entry, Normalization::entire, Normalization::d_matched,
         Normalization::resonant_matched, Normalization::sharp_image, Normalization::diamond_image,
         Normalization::polynomial, Normalization::operator_image, Normalization::unnormalized});
    s.anchor = j.at("anchor");
    s.first_index = j.at("first_index");
    s.exponent = {j.at("exponent")[0].get<double>(), j.at("exponent")[1].get<double>()};
    s.truncation_error = j.at("truncation_error");
    s.open_below = j.value("open_below", false);
    s.open_above = j.value("open_above", false);
    for (const json& a : j.at("coeffs")) s.coeffs.emplace_back(a[0].get<double>(), a[1].get<double>());
    return s;
}

void write_portrait_csv(std::ostream& os, const Portrait& p) {
    os << kCsvHeader << '\n' << "B,A,rho,uncertainty,locked\n";
    for (int ia = 0; ia < p.a_axis.n; ++ia) {
        for (int ib = 0; ib < p.b_axis.n; ++ib) {
            const RotationEstimate& e = p.at(ia, ib);
            os << format_double(p.b_axis.at(ib)) << ',' << format_double(p.a_axis.at(ia)) << ','
               << format_double(e.rho) << ',' << format_double(e.uncertainty) << ','
               << ((p.flag(ia, ib) & kLocked) ? 1 : 0) << '\n';
        }
    }
}

void write_portrait_binary(std::ostream& os, const Portrait& p) {
    os.write(kPortraitMagic, 5);
    put_u32(os, static_cast<std::uint32_t>(p.b_axis.n));
    put_u32(os, static_cast<std::uint32_t>(p.a_axis.n));
    for (double x : {p.b_axis.lo, p.b_axis.hi, p.a_axis.lo, p.a_axis.hi, p.omega}) put_f64(os, x);
    for (const RotationEstimate& e : p.cells) put_f64(os, e.rho);
    for (const RotationEstimate& e : p.cells) put_f64(os, e.uncertainty);
}

Portrait read_portrait_binary(std::istream& is) {
    char magic[5];
    if (!is.read(magic, 5) || std::memcmp(magic, kPortraitMagic, 5) != 0)
        throw std::runtime_error("portrait: bad magic");
    Portrait p;
    p.b_axis.n = static_cast<int>(get_u32(is));
    p.a_axis.n = static_cast<int>(get_u32(is));
    p.b_axis.lo = get_f64(is);
    p.b_axis.hi = get_f64(is);
    p.a_axis.lo = get_f64(is);
    p.a_axis.hi = get_f64(is);
    p.omega = get_f64(is);
    const size_t n = static_cast<size_t>(p.b_axis.n) * static_cast<size_t>(p.a_axis.n);
    p.cells.resize(n);
    p.flags.assign(n, 0);
    for (auto& e : p.cells) e.rho = get_f64(is);
    for (auto& e : p.cells) e.uncertainty = get_f64(is);
    for (size_t i = 0; i < n; ++i)
        if (std::abs(p.cells[i].rho - std::round(p.cells[i].rho)) < 3.0 * p.cells[i].uncertainty) p.flags[i] |= kLocked;
    return p;
}

std::string portrait_to_json(const Portrait& p, int indent) {
    json j;
    j["omega"] = p.omega;
    j["tol"] = p.tol;
    j["b"] = {{"lo", p.b_axis.lo}, {"hi", p.b_axis.hi}, {"n", p.b_axis.n}};
    j["a"] = {{"lo", p.a_axis.lo}, {"hi", p.a_axis.hi}, {"n", p.a_axis.n}};
    json rho = json::array(), unc = json::array(), locked = json::array(), boundary = json::array();
    for (size_t i = 0; i < p.cells.size(); ++i) {
        rho.push_back(p.cells[i].rho);
        unc.push_back(p.cells[i].uncertainty);
        locked.push_back((p.flags[i] & kLocked) ? 1 : 0);
    }
    for (const auto& [ia, ib] : p.boundary_cells()) boundary.push_back({ia, ib});
    j["rho"] = std::move(rho);
    j["uncertainty"] = std::move(unc);
    j["locked"] = std::move(locked);
    j["boundary_cells"] = std::move(boundary);
    j["not_converged_fraction"] = p.not_converged_fraction();
    return j.dump(indent);
}

void write_curves_csv(std::ostream& os, const std::vector<Curve>& curves) {
    os << kCsvHeader << '\n' << "A,B,equation,sign,residual\n";
    for (size_t i = 0; i < curves.size(); ++i) {
        os << "# curve " << i << '\n';
        for (const CurvePoint& q : curves[i].points)
            os << format_double(q.A) << ',' << format_double(q.B) << ',' << curves[i].equation << ','
               << to_string(curves[i].sign) << ',' << format_double(q.residual) << '\n';
    }
}

std::string curves_to_json(const std::vector<Curve>& curves, int indent) {
    json arr = json::array();
    for (const Curve& c : curves) {
        json pts = json::array();
        for (const CurvePoint& q : c.points) pts.push_back({{"A", q.A}, {"B", q.B}, {"residual", q.residual}});
        arr.push_back({{"equation", c.equation}, {"sign", to_string(c.sign)}, {"complete", c.complete},
                       {"points", std::move(pts)}});
    }
    return arr.dump(indent);
}

}  // namespace hplk
