#pragma once

// curteach-checkpoint 1
// model <maxent|crossent>
// parameterization <linear|quadratic|mlp> input_dim <d> actions <A> hidden <h>
// learning_rate <initial> <decay> <decay_every>
// projection <lower|-> <upper|->
// step <t>
// theta <D> <values...>
// end

#include <istream>
#include <ostream>
#include <string>

#include <Eigen/Dense>

#include "curteach/learners/learner.hpp"
#include "curteach/mdp_io.hpp"

namespace curteach {

struct Checkpoint {
    LearnerSpec spec;
    Eigen::VectorXd theta;
    std::size_t step = 0;
};

inline void write_checkpoint(std::ostream& out, const Checkpoint& cp) {
    const auto& sc = cp.spec.scoring;
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("-"); };
    out << "curteach-checkpoint 1\n";
    out << "model " << learner_model_name(cp.spec.model) << '\n';
    out << "parameterization " << parameterization_name(sc.kind()) << " input_dim " << sc.input_dim() << " actions "
        << sc.n_actions() << " hidden " << sc.hidden() << '\n';
    out << "learning_rate " << format_double(cp.spec.learning_rate.initial) << ' '
        << format_double(cp.spec.learning_rate.decay) << ' ' << cp.spec.learning_rate.decay_every << '\n';
    out << "projection " << opt(cp.spec.projection.lower) << ' ' << opt(cp.spec.projection.upper) << '\n';
    out << "step " << cp.step << '\n';
    out << "theta " << cp.theta.size();
    for (Eigen::Index i = 0; i < cp.theta.size(); ++i) out << ' ' << format_double(cp.theta[i]);
    out << "\nend\n";
}

inline Checkpoint read_checkpoint(std::istream& in) {
    io_detail::TokenReader r(in);
    io_detail::expect_version(r, "curteach-checkpoint");
    Checkpoint cp;
    r.expect("model");
    cp.spec.model = parse_learner_model(r.next());
    r.expect("parameterization");
    const auto kind = parse_parameterization(r.next());
    r.expect("input_dim");
    const auto d = r.count();
    r.expect("actions");
    const auto a = r.count();
    r.expect("hidden");
    const auto h = r.count();
    cp.spec.scoring = ScoringModel(kind, d, a, h);
    r.expect("learning_rate");
    cp.spec.learning_rate.initial = r.number();
    cp.spec.learning_rate.decay = r.number();
    cp.spec.learning_rate.decay_every = r.count();
    r.expect("projection");
    auto opt = [&]() -> std::optional<double> {
        const auto tok = r.next();
        if (tok == "-") return std::nullopt;
        return parse_double(tok);
    };
    cp.spec.projection.lower = opt();
    cp.spec.projection.upper = opt();
    r.expect("step");
    cp.step = r.count();
    r.expect("theta");
    const auto n = r.count();
    if (n != cp.spec.scoring.param_dim()) throw ValidationError("checkpoint: theta size does not match the model");
    cp.theta.resize(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < cp.theta.size(); ++i) cp.theta[i] = r.number();
    r.expect("end");
    return cp;
}

}  // namespace curteach
