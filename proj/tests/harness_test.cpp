#include <cmath>
#include <filesystem>
#include <regex>
#include <sstream>

#include <gtest/gtest.h>

#include "curteach/harness/config.hpp"
#include "curteach/harness/learner_centric.hpp"
#include "curteach/harness/log.hpp"
#include "curteach/harness/plots.hpp"
#include "curteach/harness/runner.hpp"
#include "curteach/harness/teacher_centric.hpp"

namespace curteach::harness {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("curteach_harness_" + name);
    fs::remove_all(p);
    return p;
}

ExperimentConfig small_car(std::size_t steps = 5) {
    ExperimentConfig c;
    c.steps = steps;
    c.seeds = 2;
    return c;
}

ExperimentConfig small_grid(std::size_t epochs = 2) {
    auto c = learner_centric_defaults();
    c.seeds = 1;
    c.dataset_per_group = {1, 1, 1};
    c.schedule.epochs = epochs;
    c.eval_every = 3;
    c.eval_tasks = 20;
    c.learning_rate.initial = 0.05;
    return c;
}

const grid::Dataset& small_dataset() {
    static const grid::Dataset ds = load_or_generate_dataset(small_grid());
    return ds;
}

// ---------------------------------------------------------------- config

TEST(Config, IniRoundTripIsStable) {
    ExperimentConfig c;
    c.seed = 42;
    c.probe = {.interval = 40, .queries = 10000};
    c.layout_seed = 18327014090414409070ull;
    c.strategies = {Strategy::Cur, Strategy::Omn, Strategy::Scot};
    const auto back = parse_config(to_ini(c));
    EXPECT_EQ(to_ini(back), to_ini(c));
    EXPECT_EQ(config_hash(back), config_hash(c));
    EXPECT_EQ(back.probe.queries, std::optional<std::size_t>(10000));
    EXPECT_EQ(back.layout_seed, std::optional<std::uint64_t>(18327014090414409070ull));
}

TEST(Config, HashChangesWithAnyKey) {
    ExperimentConfig a, b;
    b.steps = a.steps + 1;
    EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, UnknownKeyIsConfigError) {
    EXPECT_THROW(parse_config("[teacher]\nstep=3\n"), ConfigError);
}

TEST(Config, BadValueIsConfigError) {
    EXPECT_THROW(parse_config("[teacher]\nsteps=many\n"), ConfigError);
    EXPECT_THROW(parse_config("[teacher]\nsteps=-4\n"), ConfigError);
    EXPECT_THROW(parse_config("[learner]\nlearning_rate=0.1x\n"), ConfigError);
    EXPECT_THROW(parse_config("[probe]\nqueries=0\n"), ConfigError);
    EXPECT_THROW(parse_config("[experiment]\nstrategies=cur,best\n"), ConfigError);
}

TEST(Config, MissingFileIsConfigNotFound) {
    try {
        load_config("/nonexistent/missing.cfg");
        FAIL() << "expected a ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("config not found"), std::string::npos);
    }
}

TEST(Config, ModeEnvironmentPairing) {
    EXPECT_THROW(parse_config("[experiment]\nenvironment=tsp\n"), ConfigError);
    EXPECT_THROW(parse_config("[experiment]\nmode=learner-centric\nenvironment=car\n"), ConfigError);
    EXPECT_THROW(parse_config("[experiment]\nmode=learner-centric\nstrategies=omn\n"), ConfigError);
    EXPECT_THROW(parse_config("[experiment]\nstrategies=omn\n[learner]\nmodel=crossent\n"), ConfigError);
}

TEST(Config, LearnerCentricDefaults) {
    const auto c = parse_config("[experiment]\nmode=learner-centric\n");
    EXPECT_EQ(c.environment, "shortest-path");
    EXPECT_EQ(c.batch_size, 32u);
    EXPECT_EQ(c.schedule.epochs, 40u);
    EXPECT_DOUBLE_EQ(c.schedule.a, 0.8);
    EXPECT_DOUBLE_EQ(c.schedule.b, 0.5);
    EXPECT_DOUBLE_EQ(c.learning_rate.initial, 0.01);
    EXPECT_DOUBLE_EQ(c.learning_rate.decay, 0.5);
    EXPECT_EQ(c.learning_rate.decay_every, 500u);
    EXPECT_EQ(c.model, LearnerModel::CrossEnt);
    EXPECT_EQ(c.parameterization, Parameterization::Mlp);
}

TEST(Config, TeacherCentricLearningRateDefaults) {
    EXPECT_DOUBLE_EQ(parse_config("").learning_rate.initial, 0.1);
    EXPECT_DOUBLE_EQ(parse_config("[learner]\nparameterization=quadratic\n").learning_rate.initial, 0.05);
    EXPECT_DOUBLE_EQ(parse_config("[learner]\nparameterization=quadratic\nlearning_rate=0.2\n").learning_rate.initial, 0.2);
}

TEST(Config, ZeroEpochsAccepted) {
    EXPECT_NO_THROW(parse_config("[experiment]\nmode=learner-centric\n[schedule]\nepochs=0\n"));
}

TEST(Config, ShippedConfigsLoad) {
    for (const auto& e : fs::directory_iterator(CURTEACH_CONFIG_DIR)) {
        if (e.path().extension() != ".ini") continue;
        EXPECT_NO_THROW(load_config(e.path())) << e.path();
    }
}

// ---------------------------------------------------------------- log

ExperimentLog sample_log() {
    ExperimentLog log;
    log.kind = "teacher-centric";
    log.strategy = "cur";
    log.seed = 18327014090414409070ull;
    log.extra_columns = {"eta", "probe_tv"};
    log.append({.t = 0, .demos = 0, .theta_dist = 1.5, .value = -2.0, .extra = {kMissing, kMissing}});
    log.append({.t = 1, .demos = 10, .choice = 31, .task_type = "T6", .log_psi_e = 0.1, .log_psi_l = 0.3,
                .theta_dist = 1.25, .value = -1.0 / 3.0, .extra = {0.1, 0.0}});
    return log;
}

TEST(Log, CsvRoundTripPreservesEverything) {
    const auto log = sample_log();
    std::stringstream s;
    write_log_csv(s, log);
    const auto back = read_log_csv(s);
    EXPECT_EQ(back.kind, log.kind);
    EXPECT_EQ(back.strategy, log.strategy);
    EXPECT_EQ(back.seed, log.seed);
    EXPECT_EQ(back.extra_columns, log.extra_columns);
    EXPECT_EQ(back.rows, log.rows);
}

TEST(Log, HeaderDocumentsColumns) {
    std::stringstream s;
    write_log_csv(s, sample_log());
    std::string first, second;
    std::getline(s, first);
    std::getline(s, second);
    EXPECT_EQ(first, "# curteach-log v1 teacher-centric cur seed=18327014090414409070");
    EXPECT_EQ(second, "t,demos,choice,task_type,log_psi_e,log_psi_l,theta_dist,value,eta,probe_tv");
}

TEST(Log, RowsMustIncrease) {
    auto log = sample_log();
    EXPECT_THROW(log.append({.t = 1, .extra = {0.0, 0.0}}), ValidationError);
    EXPECT_THROW(log.append({.t = 2, .extra = {0.0}}), ValidationError);
}

TEST(Log, MalformedInputIsIoError) {
    std::stringstream a("not a log\n");
    EXPECT_THROW(read_log_csv(a), IoError);
    std::stringstream b("# curteach-log v1 x y seed=1\nt,demos,choice,task_type,log_psi_e,log_psi_l,theta_dist,value\n1,0,,,,,,\n0,0,,,,,,\n");
    EXPECT_THROW(read_log_csv(b), IoError);
    std::stringstream c("# curteach-log v9 x y seed=1\n");
    EXPECT_THROW(read_log_csv(c), IoError);
}

TEST(Log, SummaryUsesPopulationStddev) {
    auto a = sample_log(), b = sample_log();
    b.rows[0].value = -4.0;
    const auto s = summarize({a, b});
    ASSERT_EQ(s.mean.size(), 2u);
    EXPECT_DOUBLE_EQ(s.mean[0], -3.0);
    EXPECT_DOUBLE_EQ(s.stddev[0], 1.0);
    EXPECT_DOUBLE_EQ(s.stddev[1], 0.0);
    EXPECT_EQ(s.x, (std::vector<double>{0.0, 10.0}));
}

// ---------------------------------------------------------------- teacher-centric

TEST(TeacherCentric, ZeroStepsLogsOnlyInitialRow) {
    auto c = small_car(0);
    const auto log = run_teacher_centric(c, Strategy::Cur, 1);
    ASSERT_EQ(log.rows.size(), 1u);
    EXPECT_EQ(log.rows[0].t, 0u);
    EXPECT_EQ(log.rows[0].choice, -1);
}

TEST(TeacherCentric, LearnerStartingAtTeacherStaysAtTeacherValue) {
    auto c = small_car(10);
    c.parameterization = Parameterization::Quadratic;
    c.learning_rate.initial = 0.01;
    auto setup = build_car_setup(c, 3);
    ASSERT_TRUE(setup.theta_star);
    setup.theta_init = *setup.theta_star;
    ExperimentLog log;
    run_teacher_centric(setup, c, Strategy::Cur, 3, log);
    EXPECT_NEAR(log.rows[0].value, setup.teacher_value, 1e-8);
    for (const auto& r : log.rows) EXPECT_NEAR(r.value, setup.teacher_value, 1e-2 * std::abs(setup.teacher_value));
}

TEST(TeacherCentric, QuadraticTargetReproducesTeacherAtAnyTemperature) {
    for (double tau : {1.0, 0.25}) {
        auto c = small_car();
        c.parameterization = Parameterization::Quadratic;
        c.teacher_temperature = tau;
        const auto s = build_car_setup(c, 5);
        const auto pol = learner_policy(s.spec, *s.theta_star, s.env.mdp, s.features);
        EXPECT_NEAR(car_value(s, pol.policy), s.teacher_value, 1e-6 * std::abs(s.teacher_value)) << tau;
    }
}

TEST(TeacherCentric, LinearTargetMissesTheOverride) {
    const auto s = build_car_setup(small_car(), 5);
    const auto pol = learner_policy(s.spec, *s.theta_star, s.env.mdp, s.features);
    EXPECT_LT(car_value(s, pol.policy), s.teacher_value - 1e-3);
}

TEST(TeacherCentric, RowsRecordTheChosenCandidate) {
    const auto c = small_car(8);
    const auto s = build_car_setup(c, 11);
    for (Strategy st : {Strategy::Cur, Strategy::CurT, Strategy::Agn, Strategy::Omn, Strategy::Bbox}) {
        ExperimentLog log;
        run_teacher_centric(s, c, st, 11, log);
        ASSERT_EQ(log.rows.size(), 9u);
        for (std::size_t t = 1; t < log.rows.size(); ++t) {
            const auto& r = log.rows[t];
            EXPECT_EQ(r.t, t);
            ASSERT_GE(r.choice, 0);
            EXPECT_EQ(r.task_type, car_task_type(static_cast<std::size_t>(r.choice)));
            EXPECT_DOUBLE_EQ(r.log_psi_e, s.log_psi_e[static_cast<std::size_t>(r.choice)]);
            EXPECT_EQ(r.demos, t * c.demos_per_state);
        }
    }
}

TEST(TeacherCentric, CurPicksTheLargestLogRatioUnderFullObservability) {
    const auto c = small_car(4);
    const auto s = build_car_setup(c, 2);
    ExperimentLog log;
    run_teacher_centric(s, c, Strategy::Cur, 2, log);
    // Replay: the learner before step 1 is the initial one.
    const auto pol = learner_policy(s.spec, s.theta_init, s.env.mdp, s.features);
    const auto lpl = s.pool.log_difficulties(pol.policy);
    const auto scores = cur_scores(lpl, s.log_psi_e);
    const auto best = static_cast<long long>(std::max_element(scores.begin(), scores.end()) - scores.begin());
    EXPECT_EQ(log.rows[1].choice, best);
}

TEST(TeacherCentric, SameSeedSameLog) {
    const auto c = small_car(6);
    for (Strategy st : {Strategy::CurL, Strategy::Agn, Strategy::Scot}) {
        const auto a = run_teacher_centric(c, st, 9);
        const auto b = run_teacher_centric(c, st, 9);
        EXPECT_EQ(a.rows, b.rows) << strategy_name(st);
    }
}

TEST(TeacherCentric, StepsToFraction) {
    ExperimentLog log;
    for (std::size_t t = 0; t < 5; ++t) log.append({.t = t, .value = -10.0 + 2.0 * static_cast<double>(t)});
    // V_0 = -10, V^E = -2: 95% of the gap is reached at V >= -2.4, first at t = 4.
    EXPECT_EQ(steps_to_fraction(log, -2.0), 4u);
    EXPECT_EQ(steps_to_fraction(log, -4.0, 0.5), 2u);
    EXPECT_EQ(steps_to_fraction(log, 10.0), 5u);
    EXPECT_EQ(steps_to_fraction(log, -12.0), 0u);
}

TEST(TeacherCentric, LimitedObservabilityHoldsTheProbe) {
    auto c = small_car(6);
    c.probe = {.interval = 3, .queries = 50};
    const auto log = run_teacher_centric(c, Strategy::Cur, 4);
    const auto tv = log.column("probe_tv");
    EXPECT_GT(tv[1], 0.0);
    EXPECT_EQ(tv[2], tv[1]);
    EXPECT_EQ(tv[3], tv[1]);
}

// ---------------------------------------------------------------- learner-centric

TEST(LearnerCentric, ZeroEpochsEvaluatesUntrainedPolicyOnly) {
    const auto c = small_grid(0);
    const auto log = run_learner_centric(c, small_dataset(), Strategy::Cur, 1);
    ASSERT_EQ(log.rows.size(), 1u);
    EXPECT_EQ(log.rows[0].demos, 0u);
    EXPECT_TRUE(std::isfinite(log.rows[0].value));
}

TEST(LearnerCentric, FullScheduleFromEpochOneWhenBIsOne) {
    auto c = small_grid(2);
    c.schedule.b = 1.0;
    c.eval_every = 1000;
    const auto n = small_dataset().train().size();
    for (Strategy st : {Strategy::Cur, Strategy::Agn}) {
        const auto log = run_learner_centric(c, small_dataset(), st, 1);
        ASSERT_EQ(log.rows.size(), 2u);
        EXPECT_EQ(log.rows.back().demos, 2 * n);
        EXPECT_EQ(log.rows.back().t, 2 * ((n + c.batch_size - 1) / c.batch_size));
    }
}

TEST(LearnerCentric, ScheduleGrowsDemonstrationsPerEpoch) {
    auto c = small_grid(4);
    c.schedule.epochs = 4;
    c.eval_every = 1;
    const auto n = small_dataset().train().size();
    const auto log = run_learner_centric(c, small_dataset(), Strategy::CurT, 1);
    std::size_t expected = 0;
    for (std::size_t e = 1; e <= 4; ++e) expected += schedule_size(e, c.schedule, n);
    EXPECT_EQ(log.rows.back().demos, expected);
}

TEST(LearnerCentric, RowsAndFeatureColumnsAreWellFormed) {
    const auto c = small_grid(2);
    const auto log = run_learner_centric(c, small_dataset(), Strategy::Cur, 2);
    ASSERT_GT(log.rows.size(), 2u);
    const auto names = task_feature_names(grid::Kind::ShortestPath);
    for (const auto& n : names) {
        const auto col = log.column("ma_" + n);
        for (std::size_t i = 1; i < col.size(); ++i) {
            EXPECT_GE(col[i], 0.0);
            EXPECT_LE(col[i], 1.0);
        }
    }
    for (std::size_t i = 1; i < log.rows.size(); ++i) {
        EXPECT_GT(log.rows[i].t, log.rows[i - 1].t);
        EXPECT_GE(log.rows[i].demos, log.rows[i - 1].demos);
    }
}

TEST(LearnerCentric, SameSeedSameLog) {
    const auto c = small_grid(2);
    const auto a = run_learner_centric(c, small_dataset(), Strategy::CurL, 5);
    const auto b = run_learner_centric(c, small_dataset(), Strategy::CurL, 5);
    EXPECT_EQ(a.rows, b.rows);
}

TEST(LearnerCentric, RolloutOfOptimalScoresAttainsOptimum) {
    // A policy that always moves straight reaches a goal directly ahead.
    grid::GridTask t;
    t.start = {0, grid::East};
    t.goals = {2};
    const auto ds = small_dataset();
    GridTeachingSetup s = build_grid_setup(small_grid(), ds);
    const grid::TaskMdp tm(t);
    // Output bias favouring Move, zero elsewhere.
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.scoring.param_dim()));
    theta[theta.size() - 3] = 1.0;
    EXPECT_DOUBLE_EQ(grid_rollout_reward(s, theta, tm), 2 * grid::kStepReward + grid::kGoalReward);
}

// ---------------------------------------------------------------- runner

TEST(Runner, WritesLayoutAndReproducesBytes) {
    auto c = small_car(4);
    c.strategies = {Strategy::Cur, Strategy::Agn};
    const auto a = scratch("runner_a"), b = scratch("runner_b");
    run_experiment(c, a);
    run_experiment(c, b);
    for (const char* f : {"config.ini", "VERSION", "summary.csv", "reference.csv", "meta.ini", "cur/seed_0.csv",
                          "cur/seed_1.csv", "agn/seed_0.csv", "agn/seed_1.csv"}) {
        EXPECT_TRUE(fs::exists(a / f)) << f;
    }
    for (const char* f : {"config.ini", "VERSION", "summary.csv", "reference.csv", "cur/seed_0.csv", "agn/seed_1.csv"}) {
        EXPECT_EQ(read_text(a / f), read_text(b / f)) << f;
    }
    const auto cfg_text = read_text(a / "config.ini");
    EXPECT_NE(cfg_text.find(config_hash(c)), std::string::npos);
    EXPECT_EQ(config_hash(parse_config(cfg_text)), config_hash(c));
    EXPECT_EQ(read_text(a / "VERSION"), std::string(kVersion) + "\n");
}

TEST(Runner, FailedRunLeavesPartialLog) {
    auto c = small_car(50);
    c.parameterization = Parameterization::Quadratic;
    c.learning_rate.initial = 1e4;
    c.seeds = 1;
    c.strategies = {Strategy::Cur};
    const auto dir = scratch("runner_fail");
    EXPECT_THROW(run_experiment(c, dir), Error);
    ASSERT_TRUE(fs::exists(dir / "cur/seed_0.csv"));
    const auto log = load_log(dir / "cur/seed_0.csv");
    EXPECT_GE(log.rows.size(), 1u);
    EXPECT_LT(log.rows.size(), 51u);
}

TEST(Runner, ThreadCountDoesNotChangeResults) {
    auto c = small_car(4);
    c.threads = 1;
    const auto a = run_experiment(c);
    c.threads = 3;
    const auto b = run_experiment(c);
    for (std::size_t i = 0; i < a.runs.size(); ++i) {
        for (std::size_t s = 0; s < c.seeds; ++s) EXPECT_EQ(a.runs[i].logs[s].rows, b.runs[i].logs[s].rows);
    }
}

TEST(Runner, LearnerCentricRunWithSharedDataset) {
    auto c = small_grid(1);
    c.strategies = {Strategy::Cur, Strategy::Agn};
    const auto dir = scratch("runner_grid");
    const auto res = run_experiment(c, dir, &small_dataset());
    EXPECT_TRUE(fs::exists(dir / "summary.csv"));
    EXPECT_FALSE(fs::exists(dir / "reference.csv"));
    EXPECT_EQ(res.of(Strategy::Agn).logs.size(), 1u);
}

// ---------------------------------------------------------------- plots

std::size_t count(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
    return n;
}

TEST(Plots, SingleRowLogIsOnePointWithoutBand) {
    ExperimentLog log;
    log.strategy = "cur";
    log.append({.t = 0, .value = -3.0});
    const auto svg = curves_svg({{"cur", summarize({log})}}, "r", "x", "y");
    EXPECT_EQ(count(svg, "class=\"point\""), 1u);
    EXPECT_EQ(count(svg, "class=\"band\""), 0u);
}

TEST(Plots, IdenticalSeedsGiveZeroWidthBand) {
    const auto log = sample_log();
    const auto svg = curves_svg({{"cur", summarize({log, log})}}, "r", "x", "y");
    EXPECT_EQ(count(svg, "class=\"band\""), 1u);
    EXPECT_NE(svg.find("data-max-width=\"0\""), std::string::npos);
}

TEST(Plots, TaskTypeScatterMatchesLoggedSelections) {
    const auto c = small_car(40);
    const auto log = run_teacher_centric(c, Strategy::Cur, 21);
    const auto svg = task_type_scatter_svg(log, "cur");
    const std::regex mark("data-t=\"(\\d+)\" data-type=\"(T\\d)\" data-choice=\"(\\d+)\"");
    std::vector<std::tuple<std::size_t, std::string, long long>> marks;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), mark); it != std::sregex_iterator(); ++it) {
        marks.emplace_back(std::stoul((*it)[1]), (*it)[2], std::stoll((*it)[3]));
    }
    ASSERT_EQ(marks.size(), log.rows.size() - 1);
    for (std::size_t i = 0; i < marks.size(); ++i) {
        const auto& r = log.rows[i + 1];
        EXPECT_EQ(std::get<0>(marks[i]), r.t);
        EXPECT_EQ(std::get<1>(marks[i]), r.task_type);
        EXPECT_EQ(std::get<2>(marks[i]), r.choice);
    }
}

TEST(Plots, FeatureLinesOnePerFeature) {
    const auto log = run_learner_centric(small_grid(2), small_dataset(), Strategy::Cur, 1);
    const auto svg = feature_lines_svg(log, "cur");
    EXPECT_EQ(count(svg, "class=\"mean\""), task_feature_names(grid::Kind::ShortestPath).size());
}

TEST(Plots, EmitWritesRewardAndCurriculumFiles) {
    auto c = small_car(3);
    c.strategies = {Strategy::Cur, Strategy::Agn};
    const auto dir = scratch("plots");
    const auto res = run_experiment(c, dir);
    const auto files = emit_plots(load_runs(dir), dir / "plots");
    EXPECT_EQ(files.size(), 3u);
    for (const auto& f : files) EXPECT_TRUE(fs::exists(f)) << f;
    EXPECT_EQ(load_runs(dir).size(), res.runs.size());
}

TEST(Plots, EmptyLogIsRejected) {
    StrategyRuns r{Strategy::Cur, {ExperimentLog{}}};
    EXPECT_THROW(emit_plots({r}, scratch("plots_empty")), ValidationError);
}

}  // namespace
}  // namespace curteach::harness
