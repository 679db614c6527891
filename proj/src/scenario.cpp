#include "superflow/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace superflow {

const std::vector<SuperVectorField>* Scenario::find_fields(std::string_view n) const {
    for (const auto& [key, list] : field_lists)
        if (key == n) return &list;
    return nullptr;
}

const GroupPath* Scenario::find_loop(std::string_view n) const {
    for (const auto& l : loops)
        if (l.name == n) return &l;
    return nullptr;
}

namespace {

std::string strip_location(const std::string& what) {
    const auto pos = what.rfind(" (line ");
    return pos == std::string::npos ? what : what.substr(0, pos);
}

bool is_blank(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

/// A piece of a line together with its 1-based starting column.
struct Piece {
    std::string_view text;
    std::size_t column = 1;

    Piece trimmed() const {
        std::size_t a = 0, b = text.size();
        while (a < b && is_blank(text[a])) ++a;
        while (b > a && is_blank(text[b - 1])) --b;
        return {text.substr(a, b - a), column + a};
    }
    Piece sub(std::size_t pos, std::size_t len = std::string_view::npos) const {
        return {text.substr(pos, len), column + pos};
    }
    bool empty() const { return text.empty(); }
};

/// Splits at `sep` outside (), [] nesting.
std::vector<Piece> split_top(Piece p, char sep) {
    std::vector<Piece> out;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < p.text.size(); ++i) {
        const char c = p.text[i];
        if (c == '(' || c == '[') ++depth;
        if (c == ')' || c == ']') --depth;
        if (c == sep && depth == 0) {
            out.push_back(p.sub(start, i - start).trimmed());
            start = i + 1;
        }
    }
    out.push_back(p.sub(start).trimmed());
    return out;
}

/// Splits at runs of blanks.
std::vector<Piece> words(Piece p) {
    std::vector<Piece> out;
    std::size_t i = 0;
    while (i < p.text.size()) {
        while (i < p.text.size() && is_blank(p.text[i])) ++i;
        const std::size_t s = i;
        while (i < p.text.size() && !is_blank(p.text[i])) ++i;
        if (i > s) out.push_back(p.sub(s, i - s));
    }
    return out;
}

bool parse_bool(std::string_view v, bool& out) {
    if (v == "true" || v == "yes" || v == "1") {
        out = true;
        return true;
    }
    if (v == "false" || v == "no" || v == "0") {
        out = false;
        return true;
    }
    return false;
}

struct PendingLambda {
    std::string basis;
    SuperVectorField field;
    std::size_t line, column;
};

struct PendingBracket {
    std::string a, b;
    Piece rhs;
    std::string rhs_text;
    std::size_t line;
};

struct PendingLoop {
    GroupPath path;
    std::vector<std::vector<Expr>> even_xi;
    std::size_t line, column;
};

class ScenarioParser {
public:
    explicit ScenarioParser(std::string name) { sc_.name = std::move(name); }

    Scenario run(std::string_view text) {
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const std::size_t nl = text.find('\n', pos);
            std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
            ++line_;
            if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
            if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
            clause(Piece{raw, 1}.trimmed());
            if (nl == std::string_view::npos) break;
            pos = nl + 1;
        }
        finish();
        return std::move(sc_);
    }

private:
    [[noreturn]] void fail(const std::string& msg, std::size_t column) const { throw ScenarioError(msg, line_, column); }

    template <class F>
    auto guarded(const Piece& p, F&& f) -> decltype(f()) {
        try {
            return f();
        } catch (const ScenarioError&) {
            throw;
        } catch (const ParseError& e) {
            fail(strip_location(e.what()), p.column + (e.column() ? e.column() - 1 : 0));
        } catch (const Error& e) {
            fail(e.what(), p.column);
        }
    }

    void need_domain(const Piece& at) const {
        if (!sc_.domain) fail("'manifold' must be declared before this clause", at.column);
    }

    void clause(Piece p) {
        if (p.empty()) return;
        std::size_t k = 0;
        while (k < p.text.size() && !is_blank(p.text[k])) ++k;
        const std::string key(p.text.substr(0, k));
        const Piece rest = p.sub(k).trimmed();
        if (key == "scalar") return scalar(rest);
        if (key == "manifold") return manifold(rest);
        if (key == "algebra") return algebra(rest);
        if (key == "basis") return basis(rest);
        if (key == "bracket") return bracket_clause(rest);
        if (key == "lambda") return lambda(rest);
        if (key == "fields") return fields(rest);
        if (key == "loop") return loop(rest);
        if (key == "flags") return flags(rest);
        if (key == "verdict") {
            const auto w = words(rest);
            if (w.empty() || w[0].text != "flags") fail("expected 'verdict flags'", rest.column);
            return flags(rest.sub(w[0].text.size()).trimmed());
        }
        if (key == "config") return config(rest);
        if (key == "primitive") return primitive(rest);
        fail("unknown clause '" + key + "'", p.column);
    }

    void scalar(Piece rest) {
        if (sc_.domain) fail("'scalar' must precede 'manifold'", rest.column);
        if (rest.text == "real")
            sc_.field = Field::real;
        else if (rest.text == "complex")
            sc_.field = Field::complex;
        else
            fail("scalar field must be 'real' or 'complex'", rest.column);
    }

    void manifold(Piece rest) {
        if (sc_.domain) fail("duplicate 'manifold' clause", rest.column);
        std::vector<std::string> even, odd;
        std::string excluded;
        std::vector<std::string>* target = nullptr;
        const auto w = words(rest);
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (w[i].text == "even") {
                target = &even;
            } else if (w[i].text == "odd") {
                target = &odd;
            } else if (w[i].text == "exclude") {
                excluded = std::string(rest.text.substr(w[i].column - rest.column + w[i].text.size()));
                excluded = std::string(Piece{excluded, 1}.trimmed().text);
                break;
            } else if (!target) {
                fail("expected 'even', 'odd' or 'exclude'", w[i].column);
            } else {
                target->emplace_back(w[i].text);
            }
        }
        sc_.domain = guarded(rest, [&] { return make_domain(even, odd, sc_.field, excluded); });
    }

    void algebra(Piece rest) {
        if (sc_.has_algebra) fail("duplicate 'algebra' clause", rest.column);
        sc_.has_algebra = true;
    }

    void basis(Piece rest) {
        if (!sc_.has_algebra) fail("'basis' requires a preceding 'algebra' clause", rest.column);
        const auto w = words(rest);
        if (w.size() != 3 || w[1].text != "parity") fail("expected 'basis <name> parity even|odd'", rest.column);
        const std::string name(w[0].text);
        for (const auto& b : basis_)
            if (b.name == name) fail("duplicate basis element '" + name + "'", w[0].column);
        Parity par;
        if (w[2].text == "even")
            par = Parity::even;
        else if (w[2].text == "odd")
            par = Parity::odd;
        else
            fail("parity must be 'even' or 'odd'", w[2].column);
        basis_.push_back({name, par});
    }

    void bracket_clause(Piece rest) {
        if (!sc_.has_algebra) fail("'bracket' requires a preceding 'algebra' clause", rest.column);
        const std::string_view t = rest.text;
        const auto close = t.find(']');
        const auto eq = t.find('=', close == std::string_view::npos ? 0 : close);
        if (t.empty() || t.front() != '[' || close == std::string_view::npos || eq == std::string_view::npos)
            fail("expected 'bracket [a,b] = <combination>'", rest.column);
        const auto parts = split_top(rest.sub(1, close - 1), ',');
        if (parts.size() != 2) fail("expected two basis names inside [ ]", rest.column);
        const Piece rhs = rest.sub(eq + 1).trimmed();
        brackets_.push_back({std::string(parts[0].text), std::string(parts[1].text), rhs, std::string(rhs.text), line_});
    }

    void lambda(Piece rest) {
        need_domain(rest);
        const auto eq = rest.text.find('=');
        if (eq == std::string_view::npos) fail("expected 'lambda <basis> = <vector field>'", rest.column);
        const std::string name(rest.sub(0, eq).trimmed().text);
        for (const auto& l : lambdas_)
            if (l.basis == name) fail("duplicate lambda for '" + name + "'", rest.column);
        const Piece rhs = rest.sub(eq + 1).trimmed();
        SuperVectorField f = guarded(rhs, [&] { return parse_vector_field(rhs.text, sc_.domain); });
        lambdas_.push_back({name, std::move(f), line_, rest.column});
    }

    void fields(Piece rest) {
        need_domain(rest);
        const auto eq = rest.text.find('=');
        if (eq == std::string_view::npos) fail("expected 'fields <name> = <field> ; ...'", rest.column);
        const std::string name(rest.sub(0, eq).trimmed().text);
        if (name.empty()) fail("field list needs a name", rest.column);
        if (sc_.find_fields(name)) fail("duplicate field list '" + name + "'", rest.column);
        std::vector<SuperVectorField> list;
        for (const Piece& item : split_top(rest.sub(eq + 1), ';')) {
            if (item.empty()) fail("empty field in list", item.column);
            list.push_back(guarded(item, [&] { return parse_vector_field(item.text, sc_.domain); }));
        }
        sc_.field_lists.emplace_back(name, std::move(list));
    }

    Expr expr(const Piece& p, std::span<const std::string> vars) {
        return guarded(p, [&] { return parse_expr(p.text, vars); });
    }

    double real_value(const Piece& p) {
        const Expr e = expr(p, {});
        const cplx v = guarded(p, [&] { return evaluate(e, Env{}, Field::complex); });
        if (std::abs(v.imag()) > 0.0) fail("expected a real number", p.column);
        return v.real();
    }

    void loop(Piece rest) {
        need_domain(rest);
        const auto w = words(rest);
        if (w.empty()) fail("loop needs a name", rest.column);
        PendingLoop pl;
        pl.line = line_;
        pl.column = rest.column;
        pl.path.name = std::string(w[0].text);
        for (const auto& l : loops_)
            if (l.path.name == pl.path.name) fail("duplicate loop '" + pl.path.name + "'", w[0].column);
        const std::size_t base_at = rest.text.find(" base");
        const std::size_t seg_at = rest.text.find("segments");
        if (base_at == std::string_view::npos || seg_at == std::string_view::npos || seg_at < base_at)
            fail("expected 'loop <name> base ... segments ...'", rest.column);
        pl.path.base.assign(static_cast<std::size_t>(sc_.domain->even_dim()), cplx{});
        std::vector<bool> seen(static_cast<std::size_t>(sc_.domain->even_dim()), false);
        const Piece base = rest.sub(base_at + 5, seg_at - base_at - 5).trimmed();
        for (Piece item : split_top(base, ',')) {
            for (Piece a : words(item)) {
                const auto eq = a.text.find('=');
                if (eq == std::string_view::npos) fail("expected <coordinate>=<value>", a.column);
                const std::string coord(a.text.substr(0, eq));
                const auto idx = sc_.domain->even_index(coord);
                if (!idx) fail("unknown even coordinate '" + coord + "'", a.column);
                const Piece vp = a.sub(eq + 1);
                const Expr v = expr(vp, {});
                pl.path.base[static_cast<std::size_t>(*idx)] = guarded(vp, [&] { return evaluate(v, Env{}, Field::complex); });
                seen[static_cast<std::size_t>(*idx)] = true;
            }
        }
        if (std::find(seen.begin(), seen.end(), false) != seen.end())
            fail("base point must assign every even coordinate", base.column);
        Piece tail = rest.sub(seg_at + 8).trimmed();
        const std::string t_name[] = {"t"};
        while (!tail.empty() && tail.text.front() == '[') {
            int depth = 0;
            std::size_t close = 0;
            for (std::size_t i = 0; i < tail.text.size(); ++i) {
                if (tail.text[i] == '[') ++depth;
                if (tail.text[i] == ']' && --depth == 0) {
                    close = i;
                    break;
                }
            }
            if (close == 0) fail("unbalanced '[' in segment", tail.column);
            const auto items = split_top(tail.sub(1, close - 1), ',');
            const Piece& range = items.back();
            const auto in_at = range.text.find(" in ");
            if (items.size() < 2 || in_at == std::string_view::npos || range.text.substr(0, in_at) != "t")
                fail("segment must end with 't in [a,b]'", range.column);
            const Piece iv = range.sub(in_at + 4).trimmed();
            if (iv.text.size() < 2 || iv.text.front() != '[' || iv.text.back() != ']')
                fail("expected interval [a,b]", iv.column);
            const auto ends = split_top(iv.sub(1, iv.text.size() - 2), ',');
            if (ends.size() != 2) fail("expected interval [a,b]", iv.column);
            PathSegment seg;
            seg.t0 = real_value(ends[0]);
            seg.t1 = real_value(ends[1]);
            std::vector<Expr> xi;
            for (std::size_t i = 0; i + 1 < items.size(); ++i) xi.push_back(expr(items[i], t_name));
            pl.even_xi.push_back(std::move(xi));
            pl.path.segments.push_back(std::move(seg));
            tail = tail.sub(close + 1).trimmed();
        }
        if (pl.path.segments.empty()) fail("loop needs at least one segment", tail.column);
        if (!tail.empty()) {
            const auto tw = words(tail);
            if (tw.size() != 2 || tw[0].text != "winding-note") fail("expected 'winding-note <int>'", tail.column);
            try {
                pl.path.winding_note = std::stoi(std::string(tw[1].text));
            } catch (const std::exception&) {
                fail("winding note must be an integer", tw[1].column);
            }
        }
        loops_.push_back(std::move(pl));
    }

    void flags(Piece rest) {
        guarded(rest, [&] {
            apply_flag_assignments(sc_.flags, rest.text);
            return 0;
        });
    }

    void config(Piece rest) {
        for (const Piece& a : words(rest)) {
            const auto eq = a.text.find('=');
            if (eq == std::string_view::npos) fail("expected key=value", a.column);
            const std::string key(a.text.substr(0, eq));
            const Piece vp = a.sub(eq + 1);
            const double v = real_value(vp);
            if (key == "step") {
                sc_.config.step = v;
            } else if (key == "jet" || key == "jet_order") {
                sc_.config.jet_order = static_cast<int>(v);
            } else if (key == "samples") {
                sc_.config.samples = static_cast<int>(v);
            } else if (key == "seed") {
                if (v < 0) fail("seed must be non-negative", vp.column);
                sc_.config.seed = static_cast<std::uint64_t>(v);
            } else {
                fail("unknown config key '" + key + "'", a.column);
            }
        }
    }

    void primitive(Piece rest) {
        need_domain(rest);
        if (sc_.primitive) fail("duplicate 'primitive' clause", rest.column);
        sc_.primitive = expr(rest, sc_.domain->even());
    }

    void finish() {
        if (!sc_.domain) throw ScenarioError("scenario declares no 'manifold'", line_, 1);
        std::vector<std::string> names;
        for (const auto& b : basis_) names.push_back(b.name);
        if (sc_.has_algebra) {
            LieSuperAlgebra g(basis_, sc_.field);
            std::set<std::pair<int, int>> given;
            for (const auto& br : brackets_) {
                line_ = br.line;
                const auto i = g.index_of(br.a), j = g.index_of(br.b);
                if (!i || !j) fail("unknown basis element in [" + br.a + "," + br.b + "]", br.rhs.column);
                if (!given.insert({std::min(*i, *j), std::max(*i, *j)}).second)
                    fail("duplicate bracket [" + br.a + "," + br.b + "]", br.rhs.column);
                const Piece rhs{br.rhs_text, br.rhs.column};
                const Expr e = expr(rhs, names);
                const auto poly = to_polynomial(e, names);
                if (!poly) fail("bracket must be a linear combination of basis elements", rhs.column);
                std::vector<cplx> coeffs(names.size());
                for (const auto& [exps, c] : *poly) {
                    int deg = 0, at = -1;
                    for (std::size_t k = 0; k < exps.size(); ++k) {
                        deg += exps[k];
                        if (exps[k]) at = static_cast<int>(k);
                    }
                    if (deg != 1) fail("bracket must be a linear combination of basis elements", rhs.column);
                    if (sc_.field == Field::real && c.imag() != 0.0)
                        fail("complex structure constant in a real algebra", rhs.column);
                    coeffs[static_cast<std::size_t>(at)] = c;
                }
                g.set_bracket_graded(*i, *j, coeffs);
            }
            sc_.algebra = std::move(g);
        }
        for (const auto& l : lambdas_) {
            line_ = l.line;
            if (!sc_.has_algebra || !sc_.algebra.index_of(l.basis)) fail("unknown basis element '" + l.basis + "'", l.column);
        }
        if (sc_.has_algebra && !lambdas_.empty()) {
            InfinitesimalAction act{sc_.algebra, sc_.domain, {}};
            for (const auto& b : basis_) {
                const auto it = std::find_if(lambdas_.begin(), lambdas_.end(), [&](const auto& l) { return l.basis == b.name; });
                if (it == lambdas_.end()) throw ScenarioError("basis element '" + b.name + "' has no lambda image", line_, 1);
                line_ = it->line;
                const auto par = it->field.parity();
                if (!par || (*par != b.parity && !it->field.is_zero()))
                    fail("lambda image of " + to_string(b.parity) + " basis element '" + b.name + "' is not " +
                             to_string(b.parity),
                         it->column);
                act.images.push_back(it->field);
            }
            sc_.action = std::move(act);
        }
        std::vector<int> even_idx = sc_.has_algebra ? sc_.algebra.even_indices() : std::vector<int>{};
        for (auto& pl : loops_) {
            line_ = pl.line;
            if (!sc_.has_algebra) fail("loops require an algebra", pl.column);
            for (std::size_t s = 0; s < pl.even_xi.size(); ++s) {
                if (pl.even_xi[s].size() != even_idx.size())
                    fail("loop '" + pl.path.name + "': each segment needs " + std::to_string(even_idx.size()) +
                             " coefficient(s), one per even basis element",
                         pl.column);
                std::vector<Expr> xi(static_cast<std::size_t>(sc_.algebra.dim()));
                for (std::size_t k = 0; k < even_idx.size(); ++k)
                    xi[static_cast<std::size_t>(even_idx[k])] = pl.even_xi[s][k];
                pl.path.segments[s].xi = std::move(xi);
            }
            guarded(Piece{"", pl.column}, [&] {
                pl.path.validate(sc_.algebra);
                return 0;
            });
            sc_.loops.push_back(std::move(pl.path));
        }
    }

    Scenario sc_;
    std::size_t line_ = 0;
    std::vector<BasisElement> basis_;
    std::vector<PendingBracket> brackets_;
    std::vector<PendingLambda> lambdas_;
    std::vector<PendingLoop> loops_;
};

constexpr std::string_view s1_text = R"(# S^1 acting on R^{0|2} through lambda(e) = theta1 d/dtheta2
scalar real
manifold odd theta1 theta2
algebra
basis e parity even
lambda e = theta1 d/dtheta2
fields noninv = d/dtheta1 + theta1*theta2 d/dtheta2
loop k1 base segments [1, t in [0, 2*pi]] winding-note 1
loop k2 base segments [1, t in [0, 4*pi]] winding-note 2
loop km1 base segments [-1, t in [0, 2*pi]] winding-note -1
loop reparam base segments [2, t in [0, pi]] [0, t in [pi, 2*pi]] winding-note 1
loop constant base segments [0, t in [0, 1]] winding-note 0
flags reduced_global=true simply_connected=false support_compact=true global_flow_generators=false
)";

std::string c_text(const std::string& alpha) {
    static const std::map<std::string, std::string> primitives{
        {"1/z^2", "-1/z"}, {"z", "z^2/2"}, {"0", "0"}, {"1", "z"}, {"2*z", "z^2"}};
    std::ostringstream s;
    s << "# C acting on (C minus 0) x C^{0|2} through X_alpha with alpha = " << alpha << "\n"
      << "scalar complex\n"
      << "manifold even z odd theta1 theta2 exclude z=0\n"
      << "algebra\n"
      << "basis e parity even\n"
      << "lambda e = (1 + (" << alpha << ")*theta1*theta2) d/dz\n"
      << "loop unit base z=1 segments [1i*exp(1i*t), t in [0, 2*pi]] winding-note 1\n"
      << "loop ellipse05 base z=1 segments [-sin(t) + 0.5i*cos(t), t in [0, 2*pi]] winding-note 1\n"
      << "loop ellipse09 base z=1 segments [-sin(t) + 0.9i*cos(t), t in [0, 2*pi]] winding-note 1\n"
      << "loop wobble base z=1 segments [(0.6*cos(3*t) + 1i*(1 + 0.2*sin(3*t)))*exp(1i*t), t in [0, 2*pi]] "
         "winding-note 1\n"
      << "loop twice base z=1 segments [1i*exp(1i*t), t in [0, 4*pi]] winding-note 2\n"
      << "loop constant base z=1 segments [0, t in [0, 1]] winding-note 0\n"
      << "flags reduced_global=true simply_connected=false support_compact=false global_flow_generators=false\n";
    if (const auto it = primitives.find(alpha); it != primitives.end()) s << "primitive " << it->second << "\n";
    return s.str();
}

}  // namespace

Scenario parse_scenario(std::string_view text, std::string name) { return ScenarioParser(std::move(name)).run(text); }

std::optional<std::string> builtin_scenario(std::string_view name) {
    if (name == "s1-example") return std::string(s1_text);
    if (name == "c-example") return c_text("1/z");
    if (name.starts_with("c-example:")) {
        std::string alpha;
        for (char c : name.substr(10))
            if (!is_blank(c)) alpha += c;
        if (alpha.empty()) return std::nullopt;
        return c_text(alpha);
    }
    return std::nullopt;
}

Scenario load_scenario(const std::string& name_or_path) {
    if (const auto text = builtin_scenario(name_or_path)) return parse_scenario(*text, name_or_path);
    std::ifstream in(name_or_path, std::ios::binary);
    if (!in) throw Error("no built-in scenario or readable file named '" + name_or_path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), name_or_path);
}

void apply_flag_assignments(VerdictFlags& flags, std::string_view text) {
    std::string norm(text);
    std::replace(norm.begin(), norm.end(), ',', ' ');
    std::istringstream in(norm);
    std::string item;
    while (in >> item) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw Error("expected flag=<bool>, got '" + item + "'");
        const std::string key = item.substr(0, eq);
        bool v = false;
        if (!parse_bool(item.substr(eq + 1), v)) throw Error("flag '" + key + "' needs true or false");
        if (key == "reduced_global")
            flags.reduced_action_global = v;
        else if (key == "simply_connected")
            flags.group_simply_connected = v;
        else if (key == "support_compact")
            flags.support_relatively_compact = v;
        else if (key == "global_flow_generators")
            flags.generators_with_global_flows = v;
        else
            throw Error("unknown flag '" + key + "'");
    }
}

}  // namespace superflow
