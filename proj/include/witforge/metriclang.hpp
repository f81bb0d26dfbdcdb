#pragma once

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "witforge/scene.hpp"
#include "witforge/schema.hpp"
#include "witforge/snapshot.hpp"

namespace witforge::metriclang {

class SyntaxError : public std::runtime_error {
public:
    SyntaxError(int line, int column, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ", column " +
                             std::to_string(column) + ": " + what),
          line(line),
          column(column) {}
    int line;
    int column;
};

class TypeError : public std::runtime_error {
public:
    explicit TypeError(const std::string& what) : std::runtime_error(what) {}
};

class UnknownBuiltin : public std::runtime_error {
public:
    explicit UnknownBuiltin(const std::string& name)
        : std::runtime_error("unknown builtin \"" + name + "\"") {}
};

class MissingObject : public std::runtime_error {
public:
    explicit MissingObject(const std::string& name)
        : std::runtime_error("snapshot has no object \"" + name + "\"") {}
};

class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

class UnresolvedObject : public std::runtime_error {
public:
    explicit UnresolvedObject(const std::string& what) : std::runtime_error(what) {}
};

enum class ValueType { boolean, number, vec3, object_name, polygon };

const char* to_string(ValueType t);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind { bool_lit, number_lit, string_lit, unary, binary, call };
    enum class Op {
        logical_or, logical_and, logical_not,
        lt, le, gt, ge, eq, ne,
        add, sub, mul, div, neg
    };

    Kind kind = Kind::bool_lit;
    bool bool_value = false;
    double number_value = 0.0;
    std::string string_value;  // object name literal
    Op op = Op::logical_or;
    ExprPtr lhs;
    ExprPtr rhs;
    std::string callee;
    std::vector<ExprPtr> args;
    ValueType type = ValueType::boolean;  // assigned by the type checker
};

bool expr_equal(const ExprPtr& a, const ExprPtr& b);

struct Milestone {
    std::string name;
    double weight = 1.0;  // > 0
    ExprPtr expr;
};

/// Parsed and type-checked success/progress metric. Immutable after parse.
struct MetricProgram {
    ExprPtr success;
    std::vector<Milestone> milestones;
    std::vector<std::string> referenced_objects;  // derived, first-appearance order

    friend bool operator==(const MetricProgram& a, const MetricProgram& b);
};

/// Parses the metric grammar:
///   program   := "metric" "{" "success" ":" expr ";" { milestone } "}"
///   milestone := "milestone" name "weight" number ":" expr ";"
/// with precedence or < and < not < comparison < additive < multiplicative
/// < unary minus < call/paren/literal/string.
MetricProgram parse_metric(const std::string& source);

/// Canonical pretty-printed form; parse_metric(to_source(p)) == p.
std::string to_source(const MetricProgram& p);

struct MetricResult {
    bool success = false;
    double progress = 0.0;  // in [0, 1]; success implies 1.0
    std::vector<std::pair<std::string, bool>> milestone_flags;
    std::vector<std::string> trace;  // evaluated sub-expressions and guard codes

    bool trace_contains(const std::string& needle) const;
};

inline constexpr double kFellOffSlackM = 0.05;
inline constexpr const char* kFellOffCode = "FELL_OFF";

/// Pure evaluation of a program against one snapshot. Every referenced
/// rigid object must still be near or above the table plane
/// (max_z >= table_height - 5 cm); otherwise success is forced false and
/// the trace carries FELL_OFF.
MetricResult evaluate(const MetricProgram& p, const ObjsSnapshot& snap,
                      const scene::WorkspaceSpec& ws);

/// One metric shared by every member of a mutation family.
struct BoundMetric {
    MetricProgram program;
    schema::TaskFamily family;

    friend bool operator==(const BoundMetric& a, const BoundMetric& b) {
        return a.program == b.program && a.family == b.family;
    }
};

/// Binds a program to a family: every referenced object must be quoted in
/// the seed's success criteria (when present) and must exist, unrenamed, in
/// every member's object list. Throws UnresolvedObject.
BoundMetric bind(const MetricProgram& p, const schema::TaskFamily& family,
                 const std::map<std::string, schema::TaskSpec>& tasks);

}  // namespace witforge::metriclang
