#include "imdp/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace imdp {

using json = nlohmann::json;

bool Box::contains(std::span<const double> a, double slack) const {
    if (static_cast<int>(a.size()) != dim())
        return false;
    for (int k = 0; k < dim(); ++k) {
        if (a[k] < lower[k] - slack || a[k] > upper[k] + slack)
            return false;
    }
    return true;
}

bool Box::contains(const Box& inner) const {
    if (inner.dim() != dim())
        return false;
    for (int k = 0; k < dim(); ++k) {
        if (inner.lower[k] < lower[k] || inner.upper[k] > upper[k])
            return false;
    }
    return true;
}

void Box::clamp(std::span<double> a) const {
    for (int k = 0; k < dim(); ++k) a[k] = std::clamp(a[k], lower[k], upper[k]);
}

Action Box::midpoint() const {
    Action mid(lower.size());
    for (std::size_t k = 0; k < mid.size(); ++k) mid[k] = 0.5 * (lower[k] + upper[k]);
    return mid;
}

double Box::diameter() const {
    double d = 0.0;
    for (int k = 0; k < dim(); ++k) d = std::max(d, upper[k] - lower[k]);
    return d;
}

namespace {

const json& require(const json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw SchemaError(path + ": missing field '" + key + "'");
    return *it;
}

double number(const json& j, const std::string& path) {
    if (!j.is_number())
        throw SchemaError(path + ": expected a number");
    return j.get<double>();
}

Expression expression(const json& j, int dim, const std::string& path) {
    if (j.is_number())
        return Expression::constant(j.get<double>(), dim);
    if (!j.is_string())
        throw SchemaError(path + ": expected an expression string");
    try {
        return Expression::parse(j.get<std::string>(), dim);
    } catch (const ParseError& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

Box read_box(const json& j, int dim, const std::string& path) {
    if (!j.is_object())
        throw SchemaError(path + ": expected an object with 'lower' and 'upper'");
    Box box;
    for (auto [key, out] : {std::pair{"lower", &box.lower}, std::pair{"upper", &box.upper}}) {
        const json& arr = require(j, key, path);
        std::string sub = path + "." + key;
        if (!arr.is_array() || static_cast<int>(arr.size()) != dim)
            throw SchemaError(sub + ": expected an array of " + std::to_string(dim) + " numbers");
        for (std::size_t k = 0; k < arr.size(); ++k) out->push_back(number(arr[k], sub + "[" + std::to_string(k) + "]"));
    }
    for (int k = 0; k < dim; ++k) {
        if (!(box.lower[k] <= box.upper[k]))
            throw SchemaError(path + ": lower > upper in dimension " + std::to_string(k + 1));
    }
    return box;
}

int state_index(const std::map<std::string, int>& index, const json& j, const std::string& path) {
    if (!j.is_string())
        throw SchemaError(path + ": expected a state name");
    auto it = index.find(j.get<std::string>());
    if (it == index.end())
        throw SchemaError(path + ": unknown state '" + j.get<std::string>() + "'");
    return it->second;
}

void read_transitions(const json& arr, const std::map<std::string, int>& index, int dim, const std::string& path,
                      ExpressionGrid& lower, ExpressionGrid& upper) {
    if (!arr.is_array())
        throw SchemaError(path + ": expected an array");
    std::set<std::pair<int, int>> seen;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        std::string p = path + "[" + std::to_string(i) + "]";
        const json& t = arr[i];
        if (!t.is_object())
            throw SchemaError(p + ": expected an object");
        int from = state_index(index, require(t, "from", p), p + ".from");
        int to = state_index(index, require(t, "to", p), p + ".to");
        if (!seen.insert({from, to}).second)
            throw SchemaError(p + ": duplicate transition entry");
        lower.at(from, to) = expression(require(t, "lower", p), dim, p + ".lower");
        upper.at(from, to) = expression(require(t, "upper", p), dim, p + ".upper");
    }
}

std::string fmt_point(std::span<const double> a) {
    std::ostringstream out;
    out.precision(6);
    out << '(';
    for (std::size_t k = 0; k < a.size(); ++k) out << (k ? ", " : "") << a[k];
    out << ')';
    return out.str();
}

}  // namespace

Model parse_model(const std::string& json_text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw SchemaError(origin + ": invalid JSON: " + e.what());
    }
    if (!doc.is_object())
        throw SchemaError(origin + ": top level must be an object");

    Model model;
    IntervalMdp& mdp = model.base;

    const json& states = require(doc, "states", origin);
    if (!states.is_array() || states.empty())
        throw SchemaError(origin + ".states: expected a non-empty array of names");
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (!states[i].is_string())
            throw SchemaError(origin + ".states[" + std::to_string(i) + "]: expected a string");
        auto name = states[i].get<std::string>();
        if (!index.emplace(name, static_cast<int>(i)).second)
            throw SchemaError(origin + ".states: duplicate state name '" + name + "'");
        mdp.states.push_back(name);
    }
    const int n = mdp.num_states();

    const json& dim = require(doc, "action_dim", origin);
    if (!dim.is_number_integer() || dim.get<int>() < 1)
        throw SchemaError(origin + ".action_dim: expected a positive integer");
    mdp.action_dim = dim.get<int>();
    const int m = mdp.action_dim;

    mdp.action_box = read_box(require(doc, "action_space", origin), m, origin + ".action_space");

    mdp.gamma = number(require(doc, "gamma", origin), origin + ".gamma");
    if (!(mdp.gamma > 0.0 && mdp.gamma < 1.0))
        throw SchemaError(origin + ".gamma: gamma out of range (0, 1)");

    mdp.trans_lower = ExpressionGrid(n, m);
    mdp.trans_upper = ExpressionGrid(n, m);
    read_transitions(require(doc, "transitions", origin), index, m, origin + ".transitions", mdp.trans_lower,
                     mdp.trans_upper);

    mdp.reward_lower.assign(n, Expression(m));
    mdp.reward_upper.assign(n, Expression(m));
    const json& rewards = require(doc, "rewards", origin);
    if (!rewards.is_array())
        throw SchemaError(origin + ".rewards: expected an array");
    std::set<int> seen;
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        std::string p = origin + ".rewards[" + std::to_string(i) + "]";
        const json& r = rewards[i];
        if (!r.is_object())
            throw SchemaError(p + ": expected an object");
        int s = state_index(index, require(r, "state", p), p + ".state");
        if (!seen.insert(s).second)
            throw SchemaError(p + ": duplicate reward entry");
        mdp.reward_lower[s] = expression(require(r, "lower", p), m, p + ".lower");
        mdp.reward_upper[s] = expression(require(r, "upper", p), m, p + ".upper");
    }

    if (auto it = doc.find("relaxation"); it != doc.end() && !it->is_null()) {
        const json& rx = *it;
        std::string p = origin + ".relaxation";
        if (!rx.is_object())
            throw SchemaError(p + ": expected an object");
        RelaxationOverlay overlay;
        overlay.action_box = rx.contains("action_space") ? read_box(rx["action_space"], m, p + ".action_space")
                                                         : mdp.action_box;
        if (rx.contains("transitions")) {
            overlay.trans_lower = ExpressionGrid(n, m);
            overlay.trans_upper = ExpressionGrid(n, m);
            read_transitions(rx["transitions"], index, m, p + ".transitions", overlay.trans_lower,
                             overlay.trans_upper);
        } else {
            overlay.trans_lower = mdp.trans_lower;
            overlay.trans_upper = mdp.trans_upper;
        }
        overlay.reward_lower = mdp.reward_lower;
        if (rx.contains("rewards")) {
            const json& rr = rx["rewards"];
            if (!rr.is_array())
                throw SchemaError(p + ".rewards: expected an array");
            std::set<int> seen_cv;
            for (std::size_t i = 0; i < rr.size(); ++i) {
                std::string q = p + ".rewards[" + std::to_string(i) + "]";
                if (!rr[i].is_object())
                    throw SchemaError(q + ": expected an object");
                int s = state_index(index, require(rr[i], "state", q), q + ".state");
                if (!seen_cv.insert(s).second)
                    throw SchemaError(q + ": duplicate reward entry");
                overlay.reward_lower[s] = expression(require(rr[i], "lower", q), m, q + ".lower");
            }
        }
        if (rx.contains("constants")) {
            const json& c = rx["constants"];
            if (!c.is_object())
                throw SchemaError(p + ".constants: expected an object");
            for (auto [key, out] : {std::pair{"c", &overlay.constants.c}, std::pair{"L", &overlay.constants.L},
                                    std::pair{"m", &overlay.constants.m}}) {
                if (c.contains(key) && !c[key].is_null())
                    *out = number(c[key], p + ".constants." + key);
            }
            const auto& k = overlay.constants;
            if (k.c && *k.c <= 0.0)
                throw SchemaError(p + ".constants.c: must be positive");
            if (k.L && *k.L <= 0.0)
                throw SchemaError(p + ".constants.L: must be positive");
            if (k.c && k.L && *k.c > *k.L)
                throw SchemaError(p + ".constants: c must not exceed L");
        }
        model.relaxation = std::move(overlay);
    }
    return model;
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error(path.string() + ": file not found or unreadable");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str(), path.filename().string());
}

IntervalMdp relaxed_view(const Model& model) {
    if (!model.relaxation)
        throw std::invalid_argument("model has no relaxation overlay");
    const RelaxationOverlay& rx = *model.relaxation;
    IntervalMdp view = model.base;
    view.action_box = rx.action_box;
    view.trans_lower = rx.trans_lower;
    view.trans_upper = rx.trans_upper;
    view.reward_lower = rx.reward_lower;
    return view;
}

void check_structure(const IntervalMdp& mdp, bool strict_gamma) {
    const int n = mdp.num_states();
    if (n < 1)
        throw SchemaError("model has no states");
    if (strict_gamma ? !(mdp.gamma > 0.0 && mdp.gamma < 1.0) : !(mdp.gamma >= 0.0 && mdp.gamma < 1.0))
        throw SchemaError("gamma out of range");
    if (mdp.action_box.dim() != mdp.action_dim || static_cast<int>(mdp.action_box.upper.size()) != mdp.action_dim)
        throw SchemaError("action box dimension mismatch");
    for (int k = 0; k < mdp.action_dim; ++k) {
        if (!(mdp.action_box.lower[k] <= mdp.action_box.upper[k]))
            throw SchemaError("action box lower > upper");
    }
    if (mdp.trans_lower.size() != n || mdp.trans_upper.size() != n)
        throw SchemaError("transition grid dimension mismatch");
    if (static_cast<int>(mdp.reward_lower.size()) != n || static_cast<int>(mdp.reward_upper.size()) != n)
        throw SchemaError("reward list dimension mismatch");
}

std::string content_digest(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// validation

namespace {

constexpr double kPointTol = 1e-9;
constexpr double kCurvatureTol = 1e-9;

class Reporter {
public:
    explicit Reporter(ValidationReport& report) : report_(report) {}

    void add(const std::string& check, int s, int t, std::vector<Action> witness, const std::string& detail) {
        if (!seen_.insert({check, s, t}).second)
            return;
        report_.violations.push_back({check, detail, s, t, std::move(witness)});
    }

private:
    ValidationReport& report_;
    std::set<std::tuple<std::string, int, int>> seen_;
};

std::vector<Action> sample_points(const Box& box, int samples, std::mt19937_64& rng) {
    std::vector<Action> pts;
    pts.reserve(static_cast<std::size_t>(samples));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < samples; ++i) {
        if (i == 0)
            pts.push_back(box.lower);
        else if (i == 1)
            pts.push_back(box.upper);
        else {
            Action a(box.lower.size());
            for (std::size_t k = 0; k < a.size(); ++k) a[k] = box.lower[k] + u(rng) * (box.upper[k] - box.lower[k]);
            pts.push_back(std::move(a));
        }
    }
    return pts;
}

std::string label(const IntervalMdp& mdp, int s, int t = -1) {
    std::string out = "state '" + mdp.states[s] + "'";
    if (t >= 0)
        out += " -> '" + mdp.states[t] + "'";
    return out;
}

// Ordering, range and row-sum consistency of `mdp` at the given points.
void check_intervals(const IntervalMdp& mdp, const std::vector<Action>& points, const std::string& prefix,
                     Reporter& rep) {
    const int n = mdp.num_states();
    for (const Action& a : points) {
        for (int s = 0; s < n; ++s) {
            double sum_lo = 0.0, sum_hi = 0.0;
            bool ok = true;
            for (int t = 0; t < n; ++t) {
                double lo, hi;
                try {
                    lo = mdp.trans_lower.at(s, t).value(a);
                    hi = mdp.trans_upper.at(s, t).value(a);
                } catch (const DomainError& e) {
                    rep.add(prefix + "evaluation", s, t, {a}, label(mdp, s, t) + ": " + e.what());
                    ok = false;
                    continue;
                }
                sum_lo += lo;
                sum_hi += hi;
                if (lo < -kPointTol || hi > 1.0 + kPointTol)
                    rep.add(prefix + "probability_range", s, t, {a},
                            label(mdp, s, t) + ": bounds [" + std::to_string(lo) + ", " + std::to_string(hi) +
                                "] leave [0, 1] at a=" + fmt_point(a));
                if (lo > hi + kPointTol)
                    rep.add(prefix + "interval_order", s, t, {a},
                            label(mdp, s, t) + ": lower " + std::to_string(lo) + " > upper " + std::to_string(hi) +
                                " at a=" + fmt_point(a));
            }
            if (ok && (sum_lo > 1.0 + kPointTol || sum_hi < 1.0 - kPointTol))
                rep.add(prefix + "row_sum", s, -1, {a},
                        label(mdp, s) + ": sum lower = " + std::to_string(sum_lo) + ", sum upper = " +
                            std::to_string(sum_hi) + " at a=" + fmt_point(a) + " (need sum lower <= 1 <= sum upper)");
        }
    }
}

// Midpoint second-difference test; sign=+1 checks concavity, -1 convexity.
void check_curvature(const Expression& f, const std::vector<std::pair<Action, Action>>& pairs, int sign,
                     const std::string& check, int s, int t, const std::string& what, Reporter& rep) {
    if (f.is_constant())
        return;
    for (const auto& [a, b] : pairs) {
        Action mid(a.size());
        for (std::size_t k = 0; k < a.size(); ++k) mid[k] = 0.5 * (a[k] + b[k]);
        double fa, fb, fm;
        try {
            fa = f.value(a);
            fb = f.value(b);
            fm = f.value(mid);
        } catch (const DomainError& e) {
            rep.add("evaluation", s, t, {a, b}, what + ": " + e.what());
            return;
        }
        double gap = sign * (fm - 0.5 * (fa + fb));
        if (gap < -kCurvatureTol) {
            rep.add(check, s, t, {a, b},
                    what + ": midpoint test fails for a=" + fmt_point(a) + ", b=" + fmt_point(b) + " (gap " +
                        std::to_string(-gap) + ")");
            return;
        }
    }
}

}  // namespace

ValidationReport validate(const Model& model, int samples, std::uint64_t seed) {
    if (samples < 1)
        throw std::invalid_argument("samples must be >= 1");
    ValidationReport report;
    report.samples = samples;
    report.seed = seed;
    Reporter rep(report);
    const IntervalMdp& mdp = model.base;
    const int n = mdp.num_states();

    std::mt19937_64 rng(seed);
    auto points = sample_points(mdp.action_box, samples, rng);

    report.checks_run = {"probability_range", "interval_order", "row_sum", "reward_order"};
    check_intervals(mdp, points, "", rep);
    for (const Action& a : points) {
        for (int s = 0; s < n; ++s) {
            try {
                double lo = mdp.reward_lower[s].value(a);
                double hi = mdp.reward_upper[s].value(a);
                if (lo > hi + kPointTol)
                    rep.add("reward_order", s, -1, {a},
                            label(mdp, s) + ": reward lower " + std::to_string(lo) + " > upper " +
                                std::to_string(hi) + " at a=" + fmt_point(a));
            } catch (const DomainError& e) {
                rep.add("evaluation", s, -1, {a}, label(mdp, s) + " reward: " + e.what());
            }
        }
    }

    if (!model.relaxation)
        return report;

    const RelaxationOverlay& rx = *model.relaxation;
    const IntervalMdp cv = relaxed_view(model);
    report.checks_run.insert(report.checks_run.end(),
                             {"box_containment", "dominance", "relaxed_row_sum", "concavity", "convexity"});

    if (!rx.action_box.contains(mdp.action_box))
        rep.add("box_containment", -1, -1, {}, "relaxed action box does not contain the base action box");

    // Dominance on A.
    for (const Action& a : points) {
        for (int s = 0; s < n; ++s) {
            try {
                double r = mdp.reward_lower[s].value(a);
                double rcv = rx.reward_lower[s].value(a);
                if (r > rcv + kPointTol)
                    rep.add("dominance", s, -1, {a},
                            label(mdp, s) + ": relaxed lower reward " + std::to_string(rcv) + " < base " +
                                std::to_string(r) + " at a=" + fmt_point(a));
                for (int t = 0; t < n; ++t) {
                    double lo = mdp.trans_lower.at(s, t).value(a);
                    double lo_cv = rx.trans_lower.at(s, t).value(a);
                    double hi = mdp.trans_upper.at(s, t).value(a);
                    double hi_cv = rx.trans_upper.at(s, t).value(a);
                    if (lo > lo_cv + kPointTol || hi_cv > hi + kPointTol)
                        rep.add("dominance", s, t, {a},
                                label(mdp, s, t) + ": relaxed interval [" + std::to_string(lo_cv) + ", " +
                                    std::to_string(hi_cv) + "] not inside base [" + std::to_string(lo) + ", " +
                                    std::to_string(hi) + "] at a=" + fmt_point(a));
                }
            } catch (const DomainError& e) {
                rep.add("evaluation", s, -1, {a}, label(mdp, s) + ": " + e.what());
            }
        }
    }

    // The relaxed model must itself be a consistent IMDP on its box.
    auto cv_points = sample_points(rx.action_box, samples, rng);
    check_intervals(cv, cv_points, "relaxed_", rep);

    // Corner pair first, then random pairs.
    std::vector<std::pair<Action, Action>> pairs;
    pairs.reserve(static_cast<std::size_t>(samples));
    pairs.emplace_back(rx.action_box.lower, rx.action_box.upper);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto random_point = [&] {
        Action a(rx.action_box.lower.size());
        for (std::size_t k = 0; k < a.size(); ++k)
            a[k] = rx.action_box.lower[k] + u(rng) * (rx.action_box.upper[k] - rx.action_box.lower[k]);
        return a;
    };
    while (static_cast<int>(pairs.size()) < samples) {
        Action a = random_point();
        Action b = random_point();
        pairs.emplace_back(std::move(a), std::move(b));
    }
    for (int s = 0; s < n; ++s) {
        check_curvature(rx.reward_lower[s], pairs, +1, "concavity", s, -1, label(mdp, s) + " relaxed lower reward",
                        rep);
        for (int t = 0; t < n; ++t) {
            check_curvature(rx.trans_lower.at(s, t), pairs, +1, "concavity", s, t,
                            label(mdp, s, t) + " relaxed lower transition", rep);
            check_curvature(rx.trans_upper.at(s, t), pairs, -1, "convexity", s, t,
                            label(mdp, s, t) + " relaxed upper transition", rep);
        }
    }
    return report;
}

}  // namespace imdp
