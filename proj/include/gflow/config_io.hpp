#pragma once

#include <string>
#include <utility>

#include "gflow/shallow_net.hpp"

namespace gflow {

// Piecewise polynomials as two strings: breakpoints "0, 1" and coefficient rows
// in powers of x, one row per segment, rows separated by '|': "0 | 0 1 | 1".
PiecewisePolynomial parse_pp(const std::string& breaks, const std::string& rows);
std::pair<std::string, std::string> format_pp(const PiecewisePolynomial& pp);

// [problem] a, b, f_breaks, f_rows, p_breaks, p_rows.
// Missing f defaults to x (clipping) or x^2 + 2x (relu); missing p to 1 on (a, b).
ProblemData problem_from_ini(const std::string& text, Variant v);
std::string problem_to_ini(const ProblemData& d);

// [params] variant, v, w, inner_bias, outer_bias and optional trainable (h+1 flags).
// relu files give the kinks in inner_bias and omit w.
ShallowParams params_from_ini(const std::string& text);
std::string params_to_ini(const ShallowParams& P);

std::string read_file(const std::string& path);

}  // namespace gflow
