#include "gflow/config_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace gflow {

namespace pt = boost::property_tree;

namespace {

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::vector<double> parse_list(const std::string& s, const char* seps) {
    std::vector<std::string> toks;
    std::string t = boost::algorithm::trim_copy(s);
    if (t.empty()) return {};
    boost::algorithm::split(toks, t, boost::algorithm::is_any_of(seps), boost::algorithm::token_compress_on);
    std::vector<double> out;
    for (auto& tok : toks) {
        std::size_t used = 0;
        double x;
        try {
            x = std::stod(tok, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("not a number: '" + tok + "'");
        }
        if (used != tok.size()) throw std::invalid_argument("not a number: '" + tok + "'");
        out.push_back(x);
    }
    return out;
}

std::string list(const std::vector<double>& v, const char* sep = ", ") {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + num(v[i]);
    return s;
}

pt::ptree read_ini_text(const std::string& text) {
    pt::ptree t;
    std::istringstream is(text);
    try {
        pt::read_ini(is, t);
    } catch (const pt::ini_parser_error& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    return t;
}

void only_keys(const pt::ptree& t, const std::string& sec, std::initializer_list<const char*> keys) {
    auto sub = t.get_child_optional(sec);
    if (!sub) return;
    for (auto& kv : *sub) {
        bool ok = false;
        for (auto k : keys) ok |= kv.first == k;
        if (!ok) throw std::invalid_argument("config: unknown key " + sec + "." + kv.first);
    }
}

}  // namespace

PiecewisePolynomial parse_pp(const std::string& breaks, const std::string& rows) {
    auto br = parse_list(breaks, ", \t");
    std::vector<std::string> rtoks;
    boost::algorithm::split(rtoks, rows, boost::algorithm::is_any_of("|"));
    std::vector<std::vector<double>> r;
    for (auto& tok : rtoks) {
        auto c = parse_list(tok, ", \t");
        if (c.empty()) c = {0.0};
        r.push_back(std::move(c));
    }
    return PiecewisePolynomial::from_global(br, r);
}

std::pair<std::string, std::string> format_pp(const PiecewisePolynomial& pp) {
    std::string rows;
    for (std::size_t k = 0; k < pp.segment_count(); ++k) rows += (k ? " | " : "") + list(pp.global_coeffs(k), " ");
    return {list(pp.breaks()), rows};
}

ProblemData problem_from_ini(const std::string& text, Variant v) {
    auto t = read_ini_text(text);
    only_keys(t, "problem", {"a", "b", "f_breaks", "f_rows", "p_breaks", "p_rows"});
    ProblemData d;
    try {
        if (t.get_child_optional("problem.a")) d.a = t.get<double>("problem.a");
        if (t.get_child_optional("problem.b")) d.b = t.get<double>("problem.b");
    } catch (const pt::ptree_bad_data& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    if (auto r = t.get_optional<std::string>("problem.f_rows"))
        d.f = parse_pp(t.get("problem.f_breaks", ""), *r);
    else
        d.f = v == Variant::clipping ? PiecewisePolynomial::polynomial({0, 1}) : PiecewisePolynomial::polynomial({0, 2, 1});
    if (auto r = t.get_optional<std::string>("problem.p_rows"))
        d.p = parse_pp(t.get("problem.p_breaks", ""), *r);
    else
        d.p = PiecewisePolynomial::indicator(d.a, d.b);
    d.validate(v);
    return d;
}

std::string problem_to_ini(const ProblemData& d) {
    pt::ptree t;
    t.put("problem.a", num(d.a));
    t.put("problem.b", num(d.b));
    auto [fb, fr] = format_pp(d.f);
    auto [pb, pr] = format_pp(d.p);
    t.put("problem.f_breaks", fb);
    t.put("problem.f_rows", fr);
    t.put("problem.p_breaks", pb);
    t.put("problem.p_rows", pr);
    std::ostringstream os;
    pt::write_ini(os, t);
    return os.str();
}

ShallowParams params_from_ini(const std::string& text) {
    auto t = read_ini_text(text);
    only_keys(t, "params", {"variant", "v", "w", "inner_bias", "outer_bias", "trainable", "flow_scale"});
    if (!t.get_child_optional("params")) throw std::invalid_argument("config: no [params] section");
    Variant var = parse_variant(t.get("params.variant", std::string("clipping")));
    auto v = parse_list(t.get("params.v", ""), ", \t");
    auto inner = parse_list(t.get("params.inner_bias", ""), ", \t");
    double outer;
    try {
        outer = t.get_child_optional("params.outer_bias") ? t.get<double>("params.outer_bias") : 0.0;
    } catch (const pt::ptree_bad_data& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    ShallowParams P;
    if (var == Variant::clipping) {
        P = ShallowParams::clipping(v, parse_list(t.get("params.w", ""), ", \t"), inner, outer);
    } else {
        if (t.get_optional<std::string>("params.w")) throw std::invalid_argument("config: relu params take no w");
        P = ShallowParams::relu(v, inner, outer);
    }
    if (auto s = t.get_optional<std::string>("params.trainable")) {
        auto m = parse_list(*s, ", \t");
        if ((int)m.size() != P.dim()) throw std::invalid_argument("config: trainable needs h+1 flags");
        for (std::size_t i = 0; i < m.size(); ++i) P.trainable[i] = m[i] != 0.0;
    }
    if (auto s = t.get_optional<std::string>("params.flow_scale")) {
        auto m = parse_list(*s, ", \t");
        if ((int)m.size() != P.dim()) throw std::invalid_argument("config: flow_scale needs h+1 entries");
        P.flow_scale = m;
    }
    P.validate();
    return P;
}

std::string params_to_ini(const ShallowParams& P) {
    pt::ptree t;
    t.put("params.variant", to_string(P.variant));
    t.put("params.v", list(P.v));
    if (P.variant == Variant::clipping) t.put("params.w", list(P.w));
    t.put("params.inner_bias", list(P.inner_bias));
    t.put("params.outer_bias", num(P.outer_bias));
    std::vector<double> m(P.trainable.begin(), P.trainable.end());
    t.put("params.trainable", list(m));
    t.put("params.flow_scale", list(P.flow_scale));
    std::ostringstream os;
    pt::write_ini(os, t);
    return os.str();
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace gflow
