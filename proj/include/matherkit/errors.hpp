#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace matherkit {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Integration step exceeds the stability threshold of the potential.
class StepTooLarge : public Error {
public:
    StepTooLarge(double dt, double dt_max)
        : Error("integration step " + std::to_string(dt) +
                " exceeds stability threshold " + std::to_string(dt_max)),
          dt(dt), dt_max(dt_max) {}
    double dt;
    double dt_max;
};

/// The transition window of a grid admits no move (v_max*dt below one cell).
class EmptyWindow : public Error {
public:
    EmptyWindow(double v_max, double dt, double cell)
        : Error("transition window is empty: v_max*dt = " +
                std::to_string(v_max * dt) + " < cell size " + std::to_string(cell)) {}
};

/// Fixed-point iteration failed to reach the requested residual.
/// Carries the partial result so callers can inspect it.
template <typename Result>
class NoConvergence : public Error {
public:
    NoConvergence(int iters, double residual, Result partial)
        : Error("no convergence after " + std::to_string(iters) +
                " sweeps, residual " + std::to_string(residual)),
          iters(iters), residual(residual), partial(std::move(partial)) {}
    int iters;
    double residual;
    Result partial;
};

/// Barrier horizon window too short: the tail minimum is still dropping.
class WindowTooShort : public Error {
public:
    WindowTooShort(int src, int dst, double drop)
        : Error("barrier window too short: entry (" + std::to_string(src) + "," +
                std::to_string(dst) + ") still drops by " + std::to_string(drop)),
          src(src), dst(dst), drop(drop) {}
    int src;
    int dst;
    double drop;
};

/// No diagonal barrier entry fell below the Aubry tolerance.
class EmptyAubry : public Error {
public:
    EmptyAubry(double min_diag, double tol)
        : Error("empty Aubry set: smallest h(x,x) = " + std::to_string(min_diag) +
                " exceeds tol_aubry = " + std::to_string(tol)),
          min_diag(min_diag), tol(tol) {}
    double min_diag;
    double tol;
};

/// Barrier table lacks the full-grid fields needed to build a solution.
class CoverageGap : public Error {
public:
    explicit CoverageGap(const std::string& what) : Error("coverage gap: " + what) {}
};

/// An extended function violates the weak KAM inequality beyond tolerance.
class DominationFailure : public Error {
public:
    DominationFailure(double defect, int t_idx, int cell)
        : Error("domination defect " + std::to_string(defect) + " at slice " +
                std::to_string(t_idx) + ", cell " + std::to_string(cell)),
          defect(defect), t_idx(t_idx), cell(cell) {}
    double defect;
    int t_idx;
    int cell;
};

/// Node sets of an accumulating family fail the Hausdorff precondition.
class HausdorffGap : public Error {
public:
    HausdorffGap(std::size_t k, double excess, double tol)
        : Error("flow " + std::to_string(k) + " misses the limit node set by " +
                std::to_string(excess) + " (allowed " + std::to_string(tol) + ")"),
          flow_index(k), excess(excess), tol(tol) {}
    std::size_t flow_index;
    double excess;
    double tol;
};

/// Hausdorff excess of an empty sample set is undefined.
class EmptySet : public Error {
public:
    explicit EmptySet(const std::string& which) : Error("empty sample set: " + which) {}
};

/// Scenario configuration could not be parsed.
class ParseError : public Error {
public:
    ParseError(int line, const std::string& msg)
        : Error("parse error at line " + std::to_string(line) + ": " + msg),
          line(line) {}
    int line;
};

/// Scenario configuration parsed but violates a field constraint.
class ValidationError : public Error {
public:
    ValidationError(const std::string& field, const std::string& constraint)
        : Error("invalid field '" + field + "': " + constraint),
          field(field), constraint(constraint) {}
    std::string field;
    std::string constraint;
};

} // namespace matherkit
