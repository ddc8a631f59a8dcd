#pragma once

// Plain-text formats for MDPs, policies, and demonstrations.
//
//   curteach-mdp 1                 curteach-policy 1       curteach-demos 1
//   states <S>                     states <S>              demo <i> start <s> end <e|-> steps <n>
//   actions <A>                    actions <A>             step <tau> <state> <action>
//   gamma <g>                      <S rows of A probs>     ...
//   p0 <S values>                  end                     end
//   terminal <S flags>
//   reward
//   <S rows of A values>
//   transitions <count>
//   <s> <a> <next> <prob>
//   end
//
// Tables are row-major. Numbers use the shortest round-trip representation.

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "curteach/errors.hpp"
#include "curteach/mdp.hpp"
#include "curteach/numeric.hpp"

namespace curteach {

namespace io_detail {

class TokenReader {
public:
    explicit TokenReader(std::istream& in) : in_(in) {}

    std::string next() {
        std::string tok;
        if (!(in_ >> tok)) throw ValidationError("unexpected end of input");
        return tok;
    }

    void expect(const std::string& word) {
        const auto tok = next();
        if (tok != word) throw ValidationError("expected '" + word + "', found '" + tok + "'");
    }

    double number() { return parse_double(next()); }

    std::size_t count() {
        const auto v = parse_int(next());
        if (v < 0) throw ValidationError("expected a non-negative count");
        return static_cast<std::size_t>(v);
    }

private:
    std::istream& in_;
};

inline void expect_version(TokenReader& r, const std::string& magic) {
    r.expect(magic);
    const auto version = r.count();
    if (version != 1) throw ValidationError(magic + ": unsupported version " + std::to_string(version));
}

}  // namespace io_detail

inline void write_mdp(std::ostream& out, const TabularMdp& mdp) {
    const std::size_t S = mdp.n_states(), A = mdp.n_actions();
    out << "curteach-mdp 1\nstates " << S << "\nactions " << A << "\ngamma " << format_double(mdp.gamma())
        << "\np0";
    for (std::size_t s = 0; s < S; ++s) out << ' ' << format_double(mdp.p0()[static_cast<Eigen::Index>(s)]);
    out << "\nterminal";
    for (std::size_t s = 0; s < S; ++s) out << ' ' << (mdp.is_terminal(s) ? 1 : 0);
    out << "\nreward\n";
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) out << (a ? " " : "") << format_double(mdp.reward(s, a));
        out << '\n';
    }
    std::size_t count = 0;
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) count += mdp.successors(s, a).size();
    }
    out << "transitions " << count << '\n';
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            for (const auto& t : mdp.successors(s, a)) {
                out << s << ' ' << a << ' ' << t.next << ' ' << format_double(t.prob) << '\n';
            }
        }
    }
    out << "end\n";
}

inline TabularMdp read_mdp(std::istream& in) {
    io_detail::TokenReader r(in);
    io_detail::expect_version(r, "curteach-mdp");
    r.expect("states");
    const auto S = r.count();
    r.expect("actions");
    const auto A = r.count();
    r.expect("gamma");
    const double gamma = r.number();
    r.expect("p0");
    Eigen::VectorXd p0(static_cast<Eigen::Index>(S));
    for (std::size_t s = 0; s < S; ++s) p0[static_cast<Eigen::Index>(s)] = r.number();
    r.expect("terminal");
    std::vector<bool> terminal(S);
    for (std::size_t s = 0; s < S; ++s) terminal[s] = r.count() != 0;
    r.expect("reward");
    Eigen::MatrixXd reward(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A));
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) reward(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) = r.number();
    }
    r.expect("transitions");
    const auto count = r.count();
    std::vector<std::vector<Transition>> rows(S * A);
    for (std::size_t k = 0; k < count; ++k) {
        const auto s = r.count();
        const auto a = r.count();
        const auto next = r.count();
        const double p = r.number();
        if (s >= S || a >= A) throw ValidationError("transition index out of range");
        rows[s * A + a].push_back({next, p});
    }
    r.expect("end");
    return TabularMdp(S, A, rows, gamma, std::move(p0), std::move(reward), std::move(terminal));
}

inline void write_policy(std::ostream& out, const Policy& policy) {
    out << "curteach-policy 1\nstates " << policy.n_states() << "\nactions " << policy.n_actions() << '\n';
    for (Eigen::Index s = 0; s < policy.probs.rows(); ++s) {
        for (Eigen::Index a = 0; a < policy.probs.cols(); ++a) {
            out << (a ? " " : "") << format_double(policy.probs(s, a));
        }
        out << '\n';
    }
    out << "end\n";
}

inline Policy read_policy(std::istream& in) {
    io_detail::TokenReader r(in);
    io_detail::expect_version(r, "curteach-policy");
    r.expect("states");
    const auto S = r.count();
    r.expect("actions");
    const auto A = r.count();
    Policy p{Eigen::MatrixXd(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A))};
    for (Eigen::Index s = 0; s < p.probs.rows(); ++s) {
        for (Eigen::Index a = 0; a < p.probs.cols(); ++a) p.probs(s, a) = r.number();
    }
    r.expect("end");
    p.validate();
    return p;
}

inline void write_demonstrations(std::ostream& out, const std::vector<Demonstration>& demos) {
    out << "curteach-demos 1\n";
    for (std::size_t i = 0; i < demos.size(); ++i) {
        const auto& d = demos[i];
        out << "demo " << i << " start " << d.start << " end ";
        if (d.end) {
            out << *d.end;
        } else {
            out << '-';
        }
        out << " steps " << d.steps.size() << '\n';
        for (std::size_t t = 0; t < d.steps.size(); ++t) {
            out << "step " << t << ' ' << d.steps[t].state << ' ' << d.steps[t].action << '\n';
        }
    }
    out << "end\n";
}

inline std::vector<Demonstration> read_demonstrations(std::istream& in) {
    io_detail::TokenReader r(in);
    io_detail::expect_version(r, "curteach-demos");
    std::vector<Demonstration> demos;
    for (;;) {
        const auto tok = r.next();
        if (tok == "end") break;
        if (tok != "demo") throw ValidationError("expected 'demo' record, found '" + tok + "'");
        if (r.count() != demos.size()) throw ValidationError("demo records out of order");
        Demonstration d;
        r.expect("start");
        d.start = r.count();
        r.expect("end");
        const auto end_tok = r.next();
        if (end_tok != "-") d.end = static_cast<StateId>(parse_int(end_tok));
        r.expect("steps");
        const auto n = r.count();
        for (std::size_t t = 0; t < n; ++t) {
            r.expect("step");
            if (r.count() != t) throw ValidationError("step records out of order");
            const auto s = r.count();
            const auto a = r.count();
            d.steps.push_back({s, a});
        }
        demos.push_back(std::move(d));
    }
    return demos;
}

template <typename Writer, typename Value>
void save_to_file(const std::string& path, const Value& value, Writer writer) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    writer(out, value);
    if (!out) throw IoError("failed writing '" + path + "'");
}

inline std::ifstream open_for_reading(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return in;
}

}  // namespace curteach
