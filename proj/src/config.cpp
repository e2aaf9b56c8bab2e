#include "lsbec/config.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace lsbec {

static std::string pos_msg(int line, int col, const std::string& msg) {
    if (line <= 0) return msg;
    char head[48];
    std::snprintf(head, sizeof head, "line %d, col %d: ", line, col);
    return head + msg;
}

ConfigError::ConfigError(int l, int c, const std::string& msg)
    : std::runtime_error(pos_msg(l, c, msg)), line(l), col(c), bare(msg) {}

double Expression::eval(const double* v) const {
    double st[64];
    int sp = 0;
    for (const Node& nd : prog) {
        switch (nd.op) {
            case num: st[sp++] = nd.a; break;
            case var: st[sp++] = v[(int)nd.a]; break;
            case add: --sp; st[sp - 1] += st[sp]; break;
            case sub: --sp; st[sp - 1] -= st[sp]; break;
            case mul: --sp; st[sp - 1] *= st[sp]; break;
            case div: --sp; st[sp - 1] /= st[sp]; break;
            case pw:  --sp; st[sp - 1] = std::pow(st[sp - 1], st[sp]); break;
            case neg: st[sp - 1] = -st[sp - 1]; break;
            case fsin: st[sp - 1] = std::sin(st[sp - 1]); break;
            case fcos: st[sp - 1] = std::cos(st[sp - 1]); break;
            case fexp: st[sp - 1] = std::exp(st[sp - 1]); break;
            case fsqrt: st[sp - 1] = std::sqrt(st[sp - 1]); break;
        }
        if (sp >= 63) throw std::runtime_error("expression stack overflow");
    }
    return sp > 0 ? st[sp - 1] : 0.0;
}

bool Expression::uses_var(int index) const {
    for (const Node& nd : prog)
        if (nd.op == var && (int)nd.a == index) return true;
    return false;
}

namespace {

// Cursor over one config value with file positions for error reports.
struct Lex {
    const std::string& s;
    int line, col0;   // 1-based position of s[0] in the config text
    size_t i = 0;

    [[noreturn]] void fail(size_t at, const std::string& msg) const {
        throw ConfigError(line, col0 + (int)at, msg);
    }
    void skip() {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    }
    bool eof() {
        skip();
        return i >= s.size();
    }
    char peek() {
        skip();
        return i < s.size() ? s[i] : '\0';
    }
    bool accept(char c) {
        if (peek() == c) { ++i; return true; }
        return false;
    }
    void expect(char c, const char* what) {
        if (!accept(c)) fail(i, std::string("expected ") + what);
    }
    std::string ident() {
        skip();
        size_t b = i;
        while (i < s.size() && (std::isalnum((unsigned char)s[i]) || s[i] == '_')) ++i;
        return s.substr(b, i - b);
    }
};

struct ExprParser {
    Lex& lx;
    const std::vector<std::string>& vars;
    std::vector<Expression::Node>& out;
    int depth = 0;

    void push(int op, double a = 0.0) { out.push_back({op, a}); }

    void expr() {
        term();
        for (;;) {
            if (lx.accept('+')) { term(); push(Expression::add); }
            else if (lx.accept('-')) { term(); push(Expression::sub); }
            else break;
        }
    }
    void term() {
        factor();
        for (;;) {
            if (lx.accept('*')) { factor(); push(Expression::mul); }
            else if (lx.accept('/')) { factor(); push(Expression::div); }
            else break;
        }
    }
    void factor() {
        if (lx.accept('-')) { factor(); push(Expression::neg); return; }
        power();
    }
    void power() {
        primary();
        if (lx.accept('^')) { factor(); push(Expression::pw); }   // right associative
    }
    void primary() {
        if (++depth > 48) lx.fail(lx.i, "expression nests too deeply");
        char c = lx.peek();
        if (c == '(') {
            ++lx.i;
            expr();
            lx.expect(')', "')'");
        } else if (std::isdigit((unsigned char)c) || c == '.') {
            const char* base = lx.s.c_str();
            char* end = nullptr;
            double v = std::strtod(base + lx.i, &end);
            if (end == base + lx.i) lx.fail(lx.i, "bad number");
            lx.i = end - base;
            push(Expression::num, v);
        } else if (std::isalpha((unsigned char)c) || c == '_') {
            size_t at = lx.i;
            std::string id = lx.ident();
            if (id == "pi") { push(Expression::num, M_PI); --depth; return; }
            for (size_t k = 0; k < vars.size(); ++k)
                if (id == vars[k]) { push(Expression::var, (double)k); --depth; return; }
            int fn = id == "sin" ? Expression::fsin
                   : id == "cos" ? Expression::fcos
                   : id == "exp" ? Expression::fexp
                   : id == "sqrt" ? Expression::fsqrt : -1;
            if (fn < 0) lx.fail(at, "unknown name '" + id + "'");
            lx.expect('(', "'(' after function name");
            expr();
            lx.expect(')', "')'");
            push(fn);
        } else {
            lx.fail(lx.i, "expected a number, name, or '('");
        }
        --depth;
    }
};

double const_value(Lex& lx) {
    std::vector<std::string> none;
    std::vector<Expression::Node> prog;
    size_t at = lx.i;
    ExprParser{lx, none, prog}.expr();
    Expression e;
    e.prog = std::move(prog);
    double v = e.eval(nullptr);
    if (!std::isfinite(v)) lx.fail(at, "value is not finite");
    return v;
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct ShapeArity {
    const char* name;
    Shape::Kind kind;
    int params;   // -1: two shape children
};
const ShapeArity kShapes[] = {
    {"circle", Shape::Kind::circle, 3},
    {"ellipse", Shape::Kind::ellipse, 2},
    {"rectangle", Shape::Kind::rectangle, 4},
    {"lshape", Shape::Kind::lshape, 6},
    {"sector", Shape::Kind::sector, 2},
    {"csg_difference", Shape::Kind::difference, -1},
    {"csg_intersection", Shape::Kind::intersection, -1},
};

ShapeSpec shape_inner(Lex& lx) {
    lx.skip();
    size_t at = lx.i;
    std::string id = lx.ident();
    if (id.empty()) lx.fail(lx.i, "expected a shape name");
    const ShapeArity* sa = nullptr;
    for (const ShapeArity& c : kShapes)
        if (id == c.name) { sa = &c; break; }
    if (!sa) lx.fail(at, "unknown shape '" + id + "'");
    ShapeSpec sp;
    sp.kind = sa->kind;
    lx.expect('(', "'(' after shape name");
    if (sa->params < 0) {
        sp.children.push_back(shape_inner(lx));
        lx.expect(',', "','");
        sp.children.push_back(shape_inner(lx));
    } else {
        for (int k = 0; k < sa->params; ++k) {
            if (k) lx.expect(',', "','");
            sp.p.push_back(const_value(lx));
        }
    }
    lx.expect(')', "')'");
    return sp;
}

std::string fmt(double v) {
    char b[40];
    std::snprintf(b, sizeof b, "%.17g", v);
    return b;
}

const char* model_name(ModelKind k) {
    switch (k) {
        case ModelKind::cubic: return "cubic";
        case ModelKind::cubic_rescaled: return "cubic-rescaled";
        case ModelKind::cubic_quintic: return "cubic-quintic";
        case ModelKind::hoi: return "hoi-split";
    }
    return "cubic";
}

const char* init_name(InitKind k) {
    switch (k) {
        case InitKind::auto_pick: return "auto";
        case InitKind::linear: return "linear";
        case InitKind::thomas_fermi: return "thomas-fermi";
        case InitKind::continuation: return "continuation";
    }
    return "auto";
}

} // namespace

Expression parse_expression(const std::string& text, const std::vector<std::string>& vars) {
    std::string t = trim(text);
    Lex lx{t, 1, 1};
    Expression e;
    ExprParser{lx, vars, e.prog}.expr();
    if (!lx.eof()) lx.fail(lx.i, "unexpected trailing text");
    e.text = t;
    return e;
}

ShapeSpec parse_shape(const std::string& text) {
    std::string t = trim(text);
    Lex lx{t, 1, 1};
    ShapeSpec sp = shape_inner(lx);
    if (!lx.eof()) lx.fail(lx.i, "unexpected trailing text");
    return sp;
}

Shape ShapeSpec::build() const {
    switch (kind) {
        case Shape::Kind::circle:
            if (p.size() != 3) throw std::invalid_argument("circle needs (cx, cy, r)");
            if (p[2] <= 0.0) throw std::invalid_argument("circle radius must be positive");
            return Shape::circle(p[0], p[1], p[2]);
        case Shape::Kind::ellipse:
            if (p.size() != 2) throw std::invalid_argument("ellipse needs (a, b)");
            if (p[0] <= 0.0 || p[1] <= 0.0)
                throw std::invalid_argument("ellipse semi-axes must be positive");
            return Shape::ellipse(p[0], p[1]);
        case Shape::Kind::rectangle:
            if (p.size() != 4) throw std::invalid_argument("rectangle needs (x0, y0, x1, y1)");
            if (p[0] >= p[2] || p[1] >= p[3])
                throw std::invalid_argument("rectangle corners must be ordered");
            return Shape::rectangle(p[0], p[1], p[2], p[3]);
        case Shape::Kind::lshape:
            if (p.size() != 6) throw std::invalid_argument("lshape needs (x0, y0, x1, y1, qx, qy)");
            if (p[0] >= p[2] || p[1] >= p[3])
                throw std::invalid_argument("lshape corners must be ordered");
            if (p[4] <= p[0] || p[4] >= p[2] || p[5] <= p[1] || p[5] >= p[3])
                throw std::invalid_argument("lshape notch corner must lie strictly inside");
            return Shape::lshape(p[0], p[1], p[2], p[3], p[4], p[5]);
        case Shape::Kind::sector:
            if (p.size() != 2) throw std::invalid_argument("sector needs (radius, opening)");
            if (p[0] <= 0.0) throw std::invalid_argument("sector radius must be positive");
            if (p[1] <= 0.0 || p[1] >= M_PI)
                throw std::invalid_argument("sector opening must lie in (0, pi)");
            return Shape::sector(p[0], p[1]);
        case Shape::Kind::difference:
        case Shape::Kind::intersection: {
            if (children.size() != 2) throw std::invalid_argument("csg node needs two children");
            Shape a = children[0].build(), b = children[1].build();
            return kind == Shape::Kind::difference ? Shape::difference(a, b)
                                                   : Shape::intersection(a, b);
        }
        case Shape::Kind::analytic:
            break;
    }
    throw std::logic_error("shape spec: unsupported kind");
}

std::string ShapeSpec::str() const {
    const char* nm = nullptr;
    for (const ShapeArity& c : kShapes)
        if (c.kind == kind) { nm = c.name; break; }
    if (!nm) throw std::logic_error("shape spec: unsupported kind");
    std::string s = nm;
    s += '(';
    if (!children.empty()) {
        s += children[0].str() + ", " + children[1].str();
    } else {
        for (size_t k = 0; k < p.size(); ++k) {
            if (k) s += ", ";
            s += fmt(p[k]);
        }
    }
    s += ')';
    return s;
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::map<std::string, std::pair<int, int>> keypos;
    std::string potential_raw, dt_raw;
    int dt_line = 0, dt_col = 0;

    std::istringstream in(text);
    std::string raw;
    int ln = 0;
    while (std::getline(in, raw)) {
        ++ln;
        std::string lnbuf = raw;
        size_t hash = lnbuf.find('#');
        if (hash != std::string::npos) lnbuf.erase(hash);
        if (trim(lnbuf).empty()) continue;
        size_t eq = lnbuf.find('=');
        if (eq == std::string::npos)
            throw ConfigError(ln, 1, "expected 'key = value'");
        std::string key = trim(lnbuf.substr(0, eq));
        size_t kcol = lnbuf.find_first_not_of(" \t") + 1;
        if (key.empty()) throw ConfigError(ln, (int)kcol, "empty key");
        std::string val = lnbuf.substr(eq + 1);
        size_t voff = val.find_first_not_of(" \t");
        if (voff == std::string::npos)
            throw ConfigError(ln, (int)eq + 2, "empty value for '" + key + "'");
        int vcol = (int)(eq + 1 + voff) + 1;
        val = trim(val);
        Lex lx{val, ln, vcol};

        if (keypos.count(key))
            throw ConfigError(ln, (int)kcol, "duplicate key '" + key + "'");
        keypos[key] = {ln, (int)kcol};

        if (key == "name") {
            cfg.name = val;
        } else if (key == "shape") {
            cfg.shape = shape_inner(lx);
            if (!lx.eof()) lx.fail(lx.i, "unexpected trailing text");
            try {
                cfg.shape.build();
            } catch (const std::invalid_argument& e) {
                throw ConfigError(ln, vcol, e.what());
            }
        } else if (key == "box") {
            for (int k = 0; k < 4; ++k) {
                if (k) lx.expect(',', "','");
                cfg.box[k] = const_value(lx);
            }
            if (!lx.eof()) lx.fail(lx.i, "unexpected trailing text");
            if (cfg.box[0] >= cfg.box[2] || cfg.box[1] >= cfg.box[3])
                throw ConfigError(ln, vcol, "box corners must be ordered (x0 y0 x1 y1)");
        } else if (key == "model") {
            if (val == "cubic") cfg.model.kind = ModelKind::cubic;
            else if (val == "cubic-rescaled") cfg.model.kind = ModelKind::cubic_rescaled;
            else if (val == "cubic-quintic") cfg.model.kind = ModelKind::cubic_quintic;
            else if (val == "hoi-split") cfg.model.kind = ModelKind::hoi;
            else throw ConfigError(ln, vcol, "unknown model '" + val +
                        "' (cubic, cubic-rescaled, cubic-quintic, hoi-split)");
        } else if (key == "beta") {
            cfg.model.beta = const_value(lx);
            if (!lx.eof()) lx.fail(lx.i, "unexpected trailing text");
            if (cfg.model.beta < 0.0)
                throw ConfigError(ln, vcol,
                        "beta must be nonnegative: the model assumes a defocusing interaction");
        } else if (key == "gamma") {
            cfg.model.gamma = const_value(lx);
            if (!lx.eof()) lx.fail(lx.i, "unexpected trailing text");
            if (cfg.model.gamma < 0.0)
                throw ConfigError(ln, vcol, "gamma must be nonnegative");
        } else if (key == "delta") {
            cfg.model.delta = const_value(lx);
            if (!lx.eof()) lx.fail(lx.i, "unexpected trailing text");
            if (cfg.model.delta < 0.0)
                throw ConfigError(ln, vcol, "delta must be nonnegative");
        } else if (key == "potential") {
            potential_raw = val;
            std::string body = val == "zero" ? "0"
                             : val == "harmonic" ? "(x^2 + y^2) / 2" : val;
            try {
                cfg.potential = parse_expression(body, {"x", "y"});
            } catch (const ConfigError& e) {
                throw ConfigError(ln, vcol + (e.col - 1), e.bare);
            }
            cfg.potential.text = val;
        } else if (key == "resolutions") {
            cfg.resolutions.clear();
            for (int k = 0; !lx.eof(); ++k) {
                if (k) lx.expect(',', "','");
                double h = const_value(lx);
                if (h <= 0.0) lx.fail(lx.i, "grid spacings must be positive");
                if (k > 0 && h >= cfg.resolutions.back())
                    lx.fail(lx.i, "grid spacings must be strictly decreasing");
                cfg.resolutions.push_back(h);
            }
            if (cfg.resolutions.empty())
                throw ConfigError(ln, vcol, "resolutions must list at least one spacing");
        } else if (key == "dt") {
            dt_raw = val;
            dt_line = ln;
            dt_col = vcol;
        } else if (key == "tol_phase1") {
            cfg.tol_phase1 = const_value(lx);
            if (cfg.tol_phase1 <= 0.0) throw ConfigError(ln, vcol, "tolerance must be positive");
        } else if (key == "tol_phase2") {
            cfg.tol_phase2 = const_value(lx);
            if (cfg.tol_phase2 <= 0.0) throw ConfigError(ln, vcol, "tolerance must be positive");
        } else if (key == "max_steps") {
            double v = const_value(lx);
            if (v < 1.0 || v != std::floor(v) || v > 2e9)
                throw ConfigError(ln, vcol, "max_steps must be a positive integer");
            cfg.max_steps = (int)v;
        } else if (key == "continuation_steps") {
            double v = const_value(lx);
            if (v < 1.0 || v != std::floor(v) || v > 1e6)
                throw ConfigError(ln, vcol, "continuation_steps must be a positive integer");
            cfg.continuation_steps = (int)v;
        } else if (key == "excited_k") {
            double v = const_value(lx);
            if (v < 0.0 || v != std::floor(v) || v > 64)
                throw ConfigError(ln, vcol, "excited_k must be an integer in [0, 64]");
            cfg.excited_k = (int)v;
        } else if (key == "init") {
            if (val == "auto") cfg.init = InitKind::auto_pick;
            else if (val == "linear") cfg.init = InitKind::linear;
            else if (val == "thomas-fermi") cfg.init = InitKind::thomas_fermi;
            else if (val == "continuation") cfg.init = InitKind::continuation;
            else throw ConfigError(ln, vcol, "unknown init '" + val +
                        "' (auto, linear, thomas-fermi, continuation)");
        } else if (key == "rescale") {
            if (val == "auto") cfg.rescale = RescalePolicy::automatic;
            else if (val == "on") cfg.rescale = RescalePolicy::on;
            else if (val == "off") cfg.rescale = RescalePolicy::off;
            else throw ConfigError(ln, vcol, "rescale must be auto, on, or off");
        } else if (key == "report_scale") {
            cfg.report_scale = const_value(lx);
            if (cfg.report_scale <= 0.0)
                throw ConfigError(ln, vcol, "report_scale must be positive");
        } else if (key == "reference_mu") {
            cfg.reference_mu = const_value(lx);
        } else if (key == "reference_energy") {
            cfg.reference_energy = const_value(lx);
        } else if (key == "curvature_cutoff") {
            cfg.curvature_cutoff = const_value(lx);
            if (cfg.curvature_cutoff < 0.0)
                throw ConfigError(ln, vcol, "curvature_cutoff must be nonnegative");
        } else if (key == "seed") {
            char* end = nullptr;
            cfg.seed = std::strtoull(val.c_str(), &end, 10);
            if (end != val.c_str() + val.size())
                throw ConfigError(ln, vcol, "seed must be a decimal integer");
        } else {
            throw ConfigError(ln, (int)kcol, "unknown key '" + key + "'");
        }
    }

    auto need = [&](const char* key) {
        if (!keypos.count(key))
            throw ConfigError(0, 0, std::string("missing required key '") + key + "'");
    };
    need("shape");
    need("box");
    need("resolutions");

    if (cfg.model.gamma != 0.0 && cfg.model.kind != ModelKind::cubic_quintic) {
        auto [l, c] = keypos["gamma"];
        throw ConfigError(l, c, "gamma is only meaningful for the cubic-quintic model");
    }
    if (cfg.model.delta != 0.0 && cfg.model.kind != ModelKind::hoi) {
        auto [l, c] = keypos["delta"];
        throw ConfigError(l, c, "delta is only meaningful for the hoi-split model");
    }
    if (cfg.model.kind == ModelKind::cubic_rescaled && cfg.model.beta <= 0.0) {
        auto [l, c] = keypos["model"];
        throw ConfigError(l, c, "the rescaled route needs beta > 0");
    }

    if (dt_raw.empty()) dt_raw = cfg.model.kind == ModelKind::hoi ? "0.001" : "h";
    try {
        cfg.dt = parse_expression(dt_raw, {"h"});
    } catch (const ConfigError& e) {
        throw ConfigError(dt_line, dt_line ? dt_col + (e.col - 1) : 0, e.bare);
    }
    double h0 = cfg.resolutions.front();
    double dt0 = cfg.dt(h0);
    if (!std::isfinite(dt0) || dt0 <= 0.0)
        throw ConfigError(dt_line, dt_col, "dt must evaluate to a positive value");

    if (potential_raw.empty()) cfg.potential = parse_expression("0", {"x", "y"});
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, 0, "cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::string s;
    s += "name = " + cfg.name + "\n";
    s += "shape = " + cfg.shape.str() + "\n";
    s += "box = " + fmt(cfg.box[0]) + ", " + fmt(cfg.box[1]) + ", " + fmt(cfg.box[2]) + ", " +
         fmt(cfg.box[3]) + "\n";
    s += std::string("model = ") + model_name(cfg.model.kind) + "\n";
    s += "beta = " + fmt(cfg.model.beta) + "\n";
    s += "gamma = " + fmt(cfg.model.gamma) + "\n";
    s += "delta = " + fmt(cfg.model.delta) + "\n";
    s += "potential = " + (cfg.potential.text.empty() ? "0" : cfg.potential.text) + "\n";
    s += "resolutions = ";
    for (size_t k = 0; k < cfg.resolutions.size(); ++k) {
        if (k) s += ", ";
        s += fmt(cfg.resolutions[k]);
    }
    s += "\n";
    s += "dt = " + (cfg.dt.text.empty()
                        ? std::string(cfg.model.kind == ModelKind::hoi ? "0.001" : "h")
                        : cfg.dt.text) + "\n";
    s += "tol_phase1 = " + fmt(cfg.tol_phase1) + "\n";
    s += "tol_phase2 = " + fmt(cfg.tol_phase2) + "\n";
    s += "max_steps = " + std::to_string(cfg.max_steps) + "\n";
    s += std::string("init = ") + init_name(cfg.init) + "\n";
    s += "continuation_steps = " + std::to_string(cfg.continuation_steps) + "\n";
    s += std::string("rescale = ") + (cfg.rescale == RescalePolicy::automatic ? "auto"
                                      : cfg.rescale == RescalePolicy::on ? "on" : "off") + "\n";
    s += "excited_k = " + std::to_string(cfg.excited_k) + "\n";
    s += "report_scale = " + fmt(cfg.report_scale) + "\n";
    s += "curvature_cutoff = " + fmt(cfg.curvature_cutoff) + "\n";
    s += "seed = " + std::to_string(cfg.seed) + "\n";
    if (!std::isnan(cfg.reference_mu)) s += "reference_mu = " + fmt(cfg.reference_mu) + "\n";
    if (!std::isnan(cfg.reference_energy))
        s += "reference_energy = " + fmt(cfg.reference_energy) + "\n";
    return s;
}

} // namespace lsbec
