#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "masf/error.hpp"
#include "masf/milp_model.hpp"

namespace masf {

namespace {

constexpr const char *kConstantName = "obj_constant";

std::string num(double v) { return fmt::format("{}", v); }

void write_terms(std::ostringstream &out, const std::vector<Term> &terms,
                 const std::vector<Variable> &vars, bool extra_constant, double constant) {
    int on_line = 0;
    bool first = true;
    auto emit = [&](double coef, const std::string &name) {
        if (on_line == 8) {
            out << "\n   ";
            on_line = 0;
        }
        if (coef < 0) out << (first ? "-" : " -") << ' ' << num(-coef) << ' ' << name;
        else out << (first ? "" : " +") << (first ? "" : " ") << num(coef) << ' ' << name;
        first = false;
        ++on_line;
    };
    for (const auto &t : terms) emit(t.coef, vars[t.var].name);
    if (extra_constant) emit(constant, kConstantName);
    if (first) out << "0 " << (vars.empty() ? kConstantName : vars.front().name);
}

}  // namespace

std::string write_lp(const MilpModel &model) {
    const auto &vars = model.variables();
    std::ostringstream out;
    out << "\\ masf model: " << vars.size() << " variables, " << model.num_constraints()
        << " rows\n";
    out << "Minimize\n obj: ";
    std::vector<Term> obj;
    for (std::size_t j = 0; j < vars.size(); ++j)
        if (model.objective()[j] != 0.0) obj.push_back({static_cast<int>(j), model.objective()[j]});
    const bool constant = model.objective_constant() != 0.0 || vars.empty();
    write_terms(out, obj, vars, constant, model.objective_constant());
    out << "\nSubject To\n";
    for (const auto &row : model.constraints()) {
        out << ' ' << row.name << ": ";
        write_terms(out, row.terms, vars, false, 0.0);
        switch (row.sense) {
        case Sense::le: out << " <= "; break;
        case Sense::ge: out << " >= "; break;
        case Sense::eq: out << " = "; break;
        }
        out << num(row.rhs) << '\n';
    }
    out << "Bounds\n";
    for (const auto &v : vars) {
        if (v.binary && v.lb == 0.0 && v.ub == 1.0) continue;
        const bool lo_inf = std::isinf(v.lb);
        const bool hi_inf = std::isinf(v.ub);
        if (v.lb == v.ub) out << ' ' << v.name << " = " << num(v.lb) << '\n';
        else if (lo_inf && hi_inf) out << ' ' << v.name << " free\n";
        else if (lo_inf) out << " -inf <= " << v.name << " <= " << num(v.ub) << '\n';
        else if (hi_inf) out << ' ' << v.name << " >= " << num(v.lb) << '\n';
        else out << ' ' << num(v.lb) << " <= " << v.name << " <= " << num(v.ub) << '\n';
    }
    if (constant) out << ' ' << kConstantName << " = 1\n";
    bool any_binary = false;
    for (const auto &v : vars) {
        if (!v.binary) continue;
        if (!any_binary) out << "Binaries\n";
        any_binary = true;
        out << ' ' << v.name << '\n';
    }
    out << "End\n";
    return out.str();
}

namespace {

enum class Section { none, objective, rows, bounds, binaries, end };

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Token {
    enum Kind { number, name, op, colon } kind;
    std::string text;
    double value = 0.0;
};

bool is_name_char(char c) {
    return !std::isspace(static_cast<unsigned char>(c)) && c != '+' && c != '-' && c != '<' &&
           c != '>' && c != '=' && c != ':';
}

std::vector<Token> tokenize(const std::string &s, int line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (c == ':') {
            out.push_back({Token::colon, ":"});
            ++i;
        } else if (c == '+' || c == '-') {
            out.push_back({Token::op, std::string(1, c)});
            ++i;
        } else if (c == '<' || c == '>' || c == '=') {
            std::string op(1, c);
            if (i + 1 < s.size() && (s[i + 1] == '=' || s[i + 1] == '<' || s[i + 1] == '>')) {
                op += s[i + 1];
                ++i;
            }
            ++i;
            if (op == "=<" || op == "<") op = "<=";
            if (op == "=>" || op == ">") op = ">=";
            out.push_back({Token::op, op});
        } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t j = i;
            while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.'))
                ++j;
            if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
                if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
                    j = k;
                    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
                }
            }
            const std::string text = s.substr(i, j - i);
            try {
                out.push_back({Token::number, text, std::stod(text)});
            } catch (const std::exception &) {
                throw Error(ErrorCode::parse_failure, fmt::format("line {}: bad number {}", line, text));
            }
            i = j;
        } else {
            std::size_t j = i;
            while (j < s.size() && is_name_char(s[j])) ++j;
            std::string text = s.substr(i, j - i);
            const std::string lw = lower(text);
            if (lw == "inf" || lw == "infinity")
                out.push_back({Token::number, text, HUGE_VAL});
            else
                out.push_back({Token::name, text});
            i = j;
        }
    }
    return out;
}

class Parser {
public:
    explicit Parser(MilpModel &m) : model_(m) {}

    int var(const std::string &name) {
        const int id = model_.find(name);
        if (id >= 0) return id;
        return model_.add_variable(name, 0.0, HUGE_VAL);
    }

    // Linear expression up to a relational operator or the end. Returns terms
    // and the constant part.
    std::pair<std::vector<Term>, double> expression(const std::vector<Token> &t, std::size_t &i,
                                                    int line) {
        std::vector<Term> terms;
        double constant = 0.0;
        while (i < t.size() && !(t[i].kind == Token::op && t[i].text != "+" && t[i].text != "-")) {
            double sign = 1.0;
            while (i < t.size() && t[i].kind == Token::op && (t[i].text == "+" || t[i].text == "-")) {
                if (t[i].text == "-") sign = -sign;
                ++i;
            }
            if (i >= t.size()) throw Error(ErrorCode::parse_failure, fmt::format("line {}: dangling sign", line));
            double coef = 1.0;
            bool have_number = false;
            if (t[i].kind == Token::number) {
                coef = t[i].value;
                have_number = true;
                ++i;
            }
            if (i < t.size() && t[i].kind == Token::name) {
                terms.push_back({var(t[i].text), sign * coef});
                ++i;
            } else if (have_number) {
                constant += sign * coef;
            } else {
                throw Error(ErrorCode::parse_failure, fmt::format("line {}: expected a term", line));
            }
        }
        return {terms, constant};
    }

private:
    MilpModel &model_;
};

}  // namespace

MilpModel read_lp(const std::string &text) {
    MilpModel model;
    Parser parser(model);
    Section section = Section::none;
    bool maximize = false;
    std::vector<Token> objective_tokens;
    std::vector<std::pair<std::vector<Token>, int>> row_tokens;
    std::vector<Token> pending;
    int pending_line = 0;
    std::vector<std::pair<std::string, int>> binaries;
    std::vector<std::pair<std::vector<Token>, int>> bound_lines;

    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (auto c = raw.find('\\'); c != std::string::npos) raw.erase(c);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        const std::string lw = lower(line);
        if (lw == "minimize" || lw == "minimise" || lw == "min") {
            section = Section::objective;
            continue;
        }
        if (lw == "maximize" || lw == "maximise" || lw == "max") {
            section = Section::objective;
            maximize = true;
            continue;
        }
        if (lw == "subject to" || lw == "such that" || lw == "st" || lw == "s.t.") {
            section = Section::rows;
            continue;
        }
        if (lw == "bounds" || lw == "bound") {
            section = Section::bounds;
            continue;
        }
        if (lw == "binaries" || lw == "binary" || lw == "bin") {
            section = Section::binaries;
            continue;
        }
        if (lw == "general" || lw == "generals" || lw == "gen" || lw == "semi-continuous" ||
            lw == "sos")
            throw Error(ErrorCode::parse_failure,
                        fmt::format("line {}: section {} is not supported", line_no, line));
        if (lw == "end") {
            section = Section::end;
            continue;
        }
        auto tokens = tokenize(line, line_no);
        switch (section) {
        case Section::none:
        case Section::end:
            throw Error(ErrorCode::parse_failure, fmt::format("line {}: text outside a section", line_no));
        case Section::objective:
            objective_tokens.insert(objective_tokens.end(), tokens.begin(), tokens.end());
            break;
        case Section::rows: {
            if (pending.empty()) pending_line = line_no;
            pending.insert(pending.end(), tokens.begin(), tokens.end());
            // A row is complete once a relational operator has a number after it.
            for (std::size_t k = 0; k + 1 < pending.size(); ++k) {
                if (pending[k].kind == Token::op && pending[k].text != "+" && pending[k].text != "-") {
                    std::size_t e = k + 1;
                    while (e < pending.size() && pending[e].kind == Token::op) ++e;
                    if (e < pending.size() && pending[e].kind == Token::number) {
                        row_tokens.emplace_back(pending, pending_line);
                        pending.clear();
                    }
                    break;
                }
            }
            break;
        }
        case Section::bounds:
            bound_lines.emplace_back(tokens, line_no);
            break;
        case Section::binaries:
            for (const auto &t : tokens) {
                if (t.kind != Token::name)
                    throw Error(ErrorCode::parse_failure, fmt::format("line {}: expected a name", line_no));
                binaries.emplace_back(t.text, line_no);
            }
            break;
        }
    }
    if (!pending.empty())
        throw Error(ErrorCode::parse_failure, fmt::format("line {}: unfinished row", pending_line));

    {
        std::size_t i = 0;
        if (objective_tokens.size() >= 2 && objective_tokens[0].kind == Token::name &&
            objective_tokens[1].kind == Token::colon)
            i = 2;
        auto [terms, constant] = parser.expression(objective_tokens, i, 0);
        if (i != objective_tokens.size())
            throw Error(ErrorCode::parse_failure, "objective contains a relational operator");
        for (const auto &t : terms) model.add_objective(t.var, maximize ? -t.coef : t.coef);
        model.add_objective_constant(maximize ? -constant : constant);
    }

    int unnamed = 0;
    for (const auto &[tokens, ln] : row_tokens) {
        std::size_t i = 0;
        std::string name;
        if (tokens.size() >= 2 && tokens[0].kind == Token::name && tokens[1].kind == Token::colon) {
            name = tokens[0].text;
            i = 2;
        } else {
            name = fmt::format("R{}", ++unnamed);
        }
        auto [terms, constant] = parser.expression(tokens, i, ln);
        if (i >= tokens.size()) throw Error(ErrorCode::parse_failure, fmt::format("line {}: no operator", ln));
        const std::string op = tokens[i++].text;
        double sign = 1.0;
        while (i < tokens.size() && tokens[i].kind == Token::op) {
            if (tokens[i].text == "-") sign = -sign;
            else if (tokens[i].text != "+")
                throw Error(ErrorCode::parse_failure, fmt::format("line {}: bad right-hand side", ln));
            ++i;
        }
        if (i + 1 != tokens.size() || tokens[i].kind != Token::number)
            throw Error(ErrorCode::parse_failure, fmt::format("line {}: bad right-hand side", ln));
        const double rhs = sign * tokens[i].value - constant;
        const Sense sense = op == "<=" ? Sense::le : op == ">=" ? Sense::ge : Sense::eq;
        if (op != "<=" && op != ">=" && op != "=")
            throw Error(ErrorCode::parse_failure, fmt::format("line {}: unknown operator {}", ln, op));
        model.add_constraint(name, std::move(terms), sense, rhs);
    }

    auto signed_number = [](const std::vector<Token> &t, std::size_t &i, int ln) {
        double sign = 1.0;
        while (i < t.size() && t[i].kind == Token::op && (t[i].text == "+" || t[i].text == "-")) {
            if (t[i].text == "-") sign = -sign;
            ++i;
        }
        if (i >= t.size() || t[i].kind != Token::number)
            throw Error(ErrorCode::parse_failure, fmt::format("line {}: expected a number", ln));
        return sign * t[i++].value;
    };

    for (const auto &[t, ln] : bound_lines) {
        std::size_t i = 0;
        if (t.size() == 2 && t[0].kind == Token::name && t[1].kind == Token::name &&
            lower(t[1].text) == "free") {
            auto &v = model.variable(parser.var(t[0].text));
            v.lb = -HUGE_VAL;
            v.ub = HUGE_VAL;
            continue;
        }
        if (t[0].kind == Token::name) {
            auto &v = model.variable(parser.var(t[0].text));
            i = 1;
            if (i >= t.size() || t[i].kind != Token::op)
                throw Error(ErrorCode::parse_failure, fmt::format("line {}: bad bound", ln));
            const std::string op = t[i++].text;
            const double val = signed_number(t, i, ln);
            if (op == "<=") v.ub = val;
            else if (op == ">=") v.lb = val;
            else if (op == "=") v.lb = v.ub = val;
            else throw Error(ErrorCode::parse_failure, fmt::format("line {}: bad bound", ln));
        } else {
            const double lo = signed_number(t, i, ln);
            if (i >= t.size() || t[i].kind != Token::op)
                throw Error(ErrorCode::parse_failure, fmt::format("line {}: bad bound", ln));
            const std::string op1 = t[i++].text;
            if (i >= t.size() || t[i].kind != Token::name)
                throw Error(ErrorCode::parse_failure, fmt::format("line {}: bad bound", ln));
            auto &v = model.variable(parser.var(t[i++].text));
            if (op1 == "<=") v.lb = lo;
            else if (op1 == ">=") v.ub = lo;
            else if (op1 == "=") v.lb = v.ub = lo;
            else throw Error(ErrorCode::parse_failure, fmt::format("line {}: bad bound", ln));
            if (i < t.size()) {
                const std::string op2 = t[i++].text;
                const double hi = signed_number(t, i, ln);
                if (op2 == "<=") v.ub = hi;
                else if (op2 == ">=") v.lb = hi;
                else throw Error(ErrorCode::parse_failure, fmt::format("line {}: bad bound", ln));
            }
        }
        if (i != t.size()) throw Error(ErrorCode::parse_failure, fmt::format("line {}: trailing text", ln));
    }

    for (const auto &[name, ln] : binaries) {
        auto &v = model.variable(parser.var(name));
        v.binary = true;
        v.lb = std::max(v.lb, 0.0);
        v.ub = std::min(v.ub, 1.0);
    }

    // Fold the constant carrier back into the objective constant.
    const int cid = model.find(kConstantName);
    if (cid < 0 || model.variable(cid).lb != 1.0 || model.variable(cid).ub != 1.0) return model;
    for (const auto &r : model.constraints())
        for (const auto &tm : r.terms)
            if (tm.var == cid) return model;
    MilpModel folded;
    std::vector<int> remap(model.num_variables(), -1);
    for (int j = 0; j < static_cast<int>(model.num_variables()); ++j) {
        if (j == cid) continue;
        const auto &v = model.variable(j);
        remap[j] = folded.add_variable(v.name, v.lb, v.ub, v.tag);
        folded.variable(remap[j]).binary = v.binary;
        folded.add_objective(remap[j], model.objective()[j]);
    }
    folded.add_objective_constant(model.objective_constant() + model.objective()[cid]);
    for (const auto &r : model.constraints()) {
        std::vector<Term> terms;
        for (const auto &tm : r.terms) terms.push_back({remap[tm.var], tm.coef});
        folded.add_constraint(r.name, std::move(terms), r.sense, r.rhs);
    }
    return folded;
}

}  // namespace masf
