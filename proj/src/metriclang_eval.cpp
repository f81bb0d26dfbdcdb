#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "witforge/metriclang.hpp"

namespace witforge::metriclang {

namespace {

struct Value {
    ValueType type = ValueType::boolean;
    bool b = false;
    double num = 0.0;
    Vec3 v3;
    std::string name;
    geom::Polygon2D poly;

    static Value boolean(bool v) { Value x; x.type = ValueType::boolean; x.b = v; return x; }
    static Value number(double v) { Value x; x.type = ValueType::number; x.num = v; return x; }
    static Value vec(const Vec3& v) { Value x; x.type = ValueType::vec3; x.v3 = v; return x; }
    static Value object(std::string n) {
        Value x; x.type = ValueType::object_name; x.name = std::move(n); return x;
    }
    static Value polygon(geom::Polygon2D p) {
        Value x; x.type = ValueType::polygon; x.poly = std::move(p); return x;
    }
};

std::string short_num(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

class Evaluator {
public:
    Evaluator(const ObjsSnapshot& snap, const scene::WorkspaceSpec& ws,
              std::vector<std::string>& trace)
        : snap_(snap), ws_(ws), trace_(trace) {}

    bool eval_bool(const ExprPtr& e) {
        const Value v = eval(e);
        return v.b;
    }

private:
    const ObjectState& state(const std::string& name) const {
        const auto* s = snap_.find(name);
        if (!s) throw MissingObject(name);
        return *s;
    }

    Vec3 pos_of(const std::string& name) const { return state(name).centroid(); }

    geom::Polygon2D hull_of(const std::string& name) const {
        const ObjectState& s = state(name);
        if (s.is_rigid()) {
            // the hull wins over the AABB whenever both are present
            if (s.convex_hull_2d) return geom::hull_2d(*s.convex_hull_2d);
            if (s.bounds) {
                return geom::axis_rect((*s.bounds)[0].x, (*s.bounds)[1].x, (*s.bounds)[0].y,
                                       (*s.bounds)[1].y);
            }
            throw NumericError("\"" + name + "\" carries neither convex_hull_2d nor bounds");
        }
        std::vector<geom::Vec2> xy;
        xy.reserve(s.pos.size());
        for (const auto& p : s.pos) xy.push_back({p.x, p.y});
        return geom::hull_2d(xy);
    }

    double min_z_of(const std::string& name) const {
        const ObjectState& s = state(name);
        if (s.is_rigid()) return s.bounds ? (*s.bounds)[0].z : s.pos.at(0).z;
        double z = s.pos.at(0).z;
        for (const auto& p : s.pos) z = std::min(z, p.z);
        return z;
    }

    double max_z_of(const std::string& name) const {
        const ObjectState& s = state(name);
        if (s.is_rigid()) return s.bounds ? (*s.bounds)[1].z : s.pos.at(0).z;
        double z = s.pos.at(0).z;
        for (const auto& p : s.pos) z = std::max(z, p.z);
        return z;
    }

    void note(const std::string& text) { trace_.push_back(text); }

    Value call(const Expr& e) {
        std::vector<Value> args;
        args.reserve(e.args.size());
        for (const auto& a : e.args) args.push_back(eval(a));
        auto obj = [&](std::size_t i) -> const std::string& { return args[i].name; };

        if (e.callee == "pos") return Value::vec(pos_of(obj(0)));
        if (e.callee == "vel_norm") {
            const double v = state(obj(0)).speed();
            note("vel_norm(\"" + obj(0) + "\") = " + short_num(v));
            return Value::number(v);
        }
        if (e.callee == "hull") return Value::polygon(hull_of(obj(0)));
        if (e.callee == "overlap_frac") {
            double frac = 0.0;
            try {
                frac = geom::overlap_fraction(hull_of(obj(0)), hull_of(obj(1)));
            } catch (const geom::DegenerateInput& err) {
                throw NumericError(err.what());
            }
            note("overlap_frac(\"" + obj(0) + "\", \"" + obj(1) + "\") = " + short_num(frac));
            return Value::number(frac);
        }
        if (e.callee == "on_table") {
            bool on = true;
            const auto poly = hull_of(obj(0));
            for (const auto& v : poly.vertices) {
                if (v.x < ws_.table_surface.x_min - 1e-9 || v.x > ws_.table_surface.x_max + 1e-9 ||
                    v.y < ws_.table_surface.y_min - 1e-9 || v.y > ws_.table_surface.y_max + 1e-9) {
                    on = false;
                }
            }
            if (std::abs(min_z_of(obj(0)) - ws_.table_height) > 2e-3) on = false;
            note("on_table(\"" + obj(0) + "\") = " + (on ? std::string("true") : "false"));
            return Value::boolean(on);
        }
        if (e.callee == "min_z") return Value::number(min_z_of(obj(0)));
        if (e.callee == "max_z") return Value::number(max_z_of(obj(0)));
        if (e.callee == "dist") {
            const double d = norm(pos_of(obj(0)) - pos_of(obj(1)));
            note("dist(\"" + obj(0) + "\", \"" + obj(1) + "\") = " + short_num(d));
            return Value::number(d);
        }
        if (e.callee == "contained_frac") {
            geom::Prism prism{hull_of(obj(1)), args[2].num, args[3].num};
            std::vector<std::array<double, 3>> pts;
            for (const auto& p : state(obj(0)).pos) pts.push_back({p.x, p.y, p.z});
            double frac = 0.0;
            try {
                frac = geom::containment_fraction(pts, prism);
            } catch (const geom::DegenerateInput& err) {
                throw NumericError(err.what());
            }
            note("contained_frac(\"" + obj(0) + "\", \"" + obj(1) + "\") = " + short_num(frac));
            return Value::number(frac);
        }
        if (e.callee == "still") {
            const bool s = state(obj(0)).speed() < args[1].num;
            note("still(\"" + obj(0) + "\") = " + (s ? std::string("true") : "false"));
            return Value::boolean(s);
        }
        if (e.callee == "x_of") return Value::number(args[0].v3.x);
        if (e.callee == "y_of") return Value::number(args[0].v3.y);
        if (e.callee == "z_of") return Value::number(args[0].v3.z);
        throw UnknownBuiltin(e.callee);
    }

    Value eval(const ExprPtr& node) {
        const Expr& e = *node;
        switch (e.kind) {
            case Expr::Kind::bool_lit: return Value::boolean(e.bool_value);
            case Expr::Kind::number_lit: return Value::number(e.number_value);
            case Expr::Kind::string_lit: return Value::object(e.string_value);
            case Expr::Kind::unary: {
                const Value inner = eval(e.lhs);
                return e.op == Expr::Op::logical_not ? Value::boolean(!inner.b)
                                                     : Value::number(-inner.num);
            }
            case Expr::Kind::binary: {
                if (e.op == Expr::Op::logical_and) {
                    return Value::boolean(eval_bool(e.lhs) && eval_bool(e.rhs));
                }
                if (e.op == Expr::Op::logical_or) {
                    return Value::boolean(eval_bool(e.lhs) || eval_bool(e.rhs));
                }
                const Value l = eval(e.lhs);
                const Value r = eval(e.rhs);
                switch (e.op) {
                    case Expr::Op::lt: return Value::boolean(l.num < r.num);
                    case Expr::Op::le: return Value::boolean(l.num <= r.num);
                    case Expr::Op::gt: return Value::boolean(l.num > r.num);
                    case Expr::Op::ge: return Value::boolean(l.num >= r.num);
                    case Expr::Op::eq:
                        return Value::boolean(l.type == ValueType::boolean ? l.b == r.b
                                                                           : l.num == r.num);
                    case Expr::Op::ne:
                        return Value::boolean(l.type == ValueType::boolean ? l.b != r.b
                                                                           : l.num != r.num);
                    case Expr::Op::add: return Value::number(l.num + r.num);
                    case Expr::Op::sub: return Value::number(l.num - r.num);
                    case Expr::Op::mul: return Value::number(l.num * r.num);
                    case Expr::Op::div: {
                        if (r.num == 0.0) throw NumericError("division by zero");
                        return Value::number(l.num / r.num);
                    }
                    default: break;
                }
                throw NumericError("unreachable binary op");
            }
            case Expr::Kind::call: return call(e);
        }
        throw NumericError("unreachable expression kind");
    }

    const ObjsSnapshot& snap_;
    const scene::WorkspaceSpec& ws_;
    std::vector<std::string>& trace_;
};

}  // namespace

bool MetricResult::trace_contains(const std::string& needle) const {
    return std::any_of(trace.begin(), trace.end(), [&](const std::string& entry) {
        return entry.find(needle) != std::string::npos;
    });
}

MetricResult evaluate(const MetricProgram& p, const ObjsSnapshot& snap,
                      const scene::WorkspaceSpec& ws) {
    MetricResult result;
    Evaluator ev(snap, ws, result.trace);

    // default criterion: referenced rigid objects must not fall off the table
    bool fell_off = false;
    for (const auto& name : p.referenced_objects) {
        const auto* s = snap.find(name);
        if (!s) throw MissingObject(name);
        if (!s->is_rigid()) continue;
        const double top = s->bounds ? (*s->bounds)[1].z : s->pos.at(0).z;
        if (top < ws.table_height - kFellOffSlackM) {
            result.trace.push_back(std::string(kFellOffCode) + " \"" + name + "\"");
            fell_off = true;
        }
    }

    const bool raw_success = ev.eval_bool(p.success);
    result.success = raw_success && !fell_off;

    double total_weight = 0.0;
    double true_weight = 0.0;
    for (const auto& m : p.milestones) {
        const bool hit = ev.eval_bool(m.expr);
        result.milestone_flags.emplace_back(m.name, hit);
        result.trace.push_back("milestone " + m.name + " = " + (hit ? "true" : "false"));
        total_weight += m.weight;
        if (hit) true_weight += m.weight;
    }

    // success completes the metric outright; otherwise progress is the
    // weighted fraction of satisfied milestones
    if (result.success) {
        result.progress = 1.0;
    } else if (p.milestones.empty()) {
        result.progress = 0.0;
    } else {
        result.progress = true_weight / total_weight;
    }
    return result;
}

BoundMetric bind(const MetricProgram& p, const schema::TaskFamily& family,
                 const std::map<std::string, schema::TaskSpec>& tasks) {
    const auto seed_it = tasks.find(family.seed_id);
    if (seed_it == tasks.end()) {
        throw UnresolvedObject("family seed \"" + family.seed_id + "\" is not available");
    }

    const auto criteria_names =
        schema::extract_quoted_names(seed_it->second.task_success_criteria);
    if (!criteria_names.empty()) {
        const std::set<std::string> allowed(criteria_names.begin(), criteria_names.end());
        for (const auto& name : p.referenced_objects) {
            if (!allowed.count(name)) {
                throw UnresolvedObject("metric references \"" + name +
                                       "\" which the seed success criteria never quote");
            }
        }
    }

    for (const auto& member_id : family.member_ids) {
        const auto it = tasks.find(member_id);
        if (it == tasks.end()) {
            throw UnresolvedObject("family member \"" + member_id + "\" is not available");
        }
        std::set<std::string> names;
        for (const auto& o : it->second.object_list) names.insert(o.object_name);
        for (const auto& name : p.referenced_objects) {
            if (!names.count(name)) {
                throw UnresolvedObject("member \"" + member_id + "\" lost metric object \"" +
                                       name + "\"");
            }
        }
    }
    return BoundMetric{p, family};
}

}  // namespace witforge::metriclang
