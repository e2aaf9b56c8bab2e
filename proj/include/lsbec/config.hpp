#pragma once

#include "lsbec/flow.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lsbec {

// Parse or validation failure with a position in the config text.
struct ConfigError : std::runtime_error {
    int line = 0, col = 0;
    std::string bare;   // message without the position prefix
    ConfigError(int l, int c, const std::string& msg);
};

// Compiled arithmetic over named variables: numbers, pi, + - * / ^ with the
// usual precedence, unary minus, sin/cos/exp/sqrt, parentheses.
struct Expression {
    enum Op : int { num, var, add, sub, mul, div, pw, neg, fsin, fcos, fexp, fsqrt };
    struct Node {
        int op;
        double a;   // literal value or variable index
    };
    std::vector<Node> prog;   // postfix program
    std::string text;         // source, kept for serialization

    double eval(const double* v) const;
    double operator()(double x) const { return eval(&x); }
    double operator()(double x, double y) const {
        double v[2] = {x, y};
        return eval(v);
    }
    bool uses_var(int index) const;
};

Expression parse_expression(const std::string& text, const std::vector<std::string>& vars);

// Shape description tree, buildable and serializable. Parameters may be
// constant expressions: csg_difference(circle(0,0,1.2), circle(0.5,0,0.9)).
struct ShapeSpec {
    Shape::Kind kind = Shape::Kind::circle;
    std::vector<double> p;
    std::vector<ShapeSpec> children;

    Shape build() const;
    std::string str() const;
};

ShapeSpec parse_shape(const std::string& text);

enum class RescalePolicy { automatic, on, off };

struct ExperimentConfig {
    std::string name = "run";
    ShapeSpec shape;
    double box[4] = {0.0, 0.0, 0.0, 0.0};   // x0 y0 x1 y1
    ModelSpec model;
    Expression potential;                   // over x, y; named forms compile to this
    std::vector<double> resolutions;        // strictly decreasing grid spacings
    Expression dt;                          // over h; defaults to h (0.001 for hoi-split)
    double tol_phase1 = 1e-8, tol_phase2 = 1e-8;
    int max_steps = 1000000;
    InitKind init = InitKind::auto_pick;
    int continuation_steps = 4;
    RescalePolicy rescale = RescalePolicy::automatic;
    int excited_k = 0;                      // 0: ground state, k >= 1: k-th linear mode start
    double report_scale = 1.0;              // scales reported mu/energy (pure eigenvalue runs)
    double reference_mu = NAN;              // optional study reference
    double reference_energy = NAN;
    double curvature_cutoff = 0.0;
    uint64_t seed = 0x5eed;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Canonical form: every key echoed, defaults filled in; parsing it back gives
// an equivalent config (serialize . parse . serialize is the identity).
std::string serialize_config(const ExperimentConfig& cfg);

} // namespace lsbec
