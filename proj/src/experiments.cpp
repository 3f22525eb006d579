#include "fthresh/experiments.hpp"

#include "fthresh/binned.hpp"
#include "fthresh/errors.hpp"
#include "fthresh/full_cov.hpp"
#include "fthresh/parallel.hpp"
#include "fthresh/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <memory>
#include <sstream>

namespace fthresh::experiments {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

SimSpec base_spec(SimModel model, std::size_t n, std::size_t p, std::size_t R, std::uint64_t seed) {
    SimSpec spec;
    spec.model = model;
    spec.n = n;
    spec.p = p;
    spec.grid = make_uniform_grid(R);
    spec.seed = seed;
    return spec;
}

Outcome score(const ThresholdedEstimate& est, const CovField& truth, const SupportMask& true_support,
              double lambda) {
    const SupportRates rates = support_metrics(est.support, true_support);
    return Outcome{functional_frobenius(est.field, truth), functional_matrix_l1(est.field, truth), rates.tpr,
                   rates.fpr, lambda};
}

Outcome score_plain(const CovField& est, const CovField& truth) {
    return Outcome{functional_frobenius(est, truth), functional_matrix_l1(est, truth), 1.0, 1.0, 0.0};
}

std::string cell(const MeanSe& m) { return fmt::format("{:.2f}({:.2f})", m.mean, m.se); }

template<class Rep, class Fn>
MeanSe field_summary(const std::vector<Rep>& reps, Fn&& get) {
    std::vector<double> values;
    values.reserve(reps.size());
    for (const auto& r : reps) {
        values.push_back(get(r));
    }
    return summarize(values);
}

std::string rule_label(const ThresholdRule& rule) {
    switch (rule.kind()) {
    case RuleKind::Hard:
        return "Hard";
    case RuleKind::Soft:
        return "Soft";
    case RuleKind::Scad:
        return "SCAD";
    case RuleKind::AdaptiveLasso:
        return "Adap. lasso";
    }
    return rule.to_string();
}

std::size_t rule_index(const ThresholdStudy& study, RuleKind kind) {
    for (std::size_t q = 0; q < study.rules.size(); ++q) {
        if (study.rules[q].kind() == kind) {
            return q;
        }
    }
    throw ConfigError("rule not part of the study");
}

Check range_check(std::string name, double value, double lo, double hi) {
    return Check{std::move(name), value >= lo && value <= hi, fmt::format("{:.3f} in [{}, {}]", value, lo, hi)};
}

}

Design design_for(std::size_t L) {
    if (L <= 11) {
        return Design::Sparse;
    }
    return L <= 51 ? Design::Dense : Design::VeryDense;
}

SmoothingOptions smoothing_for(std::size_t n, std::size_t L, const BandwidthConstants& constants) {
    const Design design = design_for(L);
    const double c = design == Design::Sparse ? constants.sparse
                     : design == Design::Dense ? constants.dense
                                               : constants.very_dense;
    SmoothingOptions options;
    options.h_cross = default_bandwidth(n, static_cast<double>(L), design, c);
    options.h_marginal = options.h_cross;
    options.threads = 1;
    return options;
}

double presmooth_bandwidth(std::size_t L, const BandwidthConstants& constants) {
    return constants.presmooth * std::pow(static_cast<double>(L), -0.2);
}

MeanSe summarize(std::span<const double> values) {
    MeanSe out;
    if (values.empty()) {
        return out;
    }
    const double n = static_cast<double>(values.size());
    for (double v : values) {
        out.mean += v;
    }
    out.mean /= n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) {
            ss += (v - out.mean) * (v - out.mean);
        }
        out.se = std::sqrt(ss / (n - 1.0) / n);
    }
    return out;
}

ThresholdRep run_threshold_rep(const ThresholdStudy& study, std::size_t rep) {
    const std::uint64_t rep_seed = derive_seed(study.seed, rep);
    SimSpec spec = base_spec(study.model, study.n, study.p, study.R, rep_seed);
    std::unique_ptr<CovarianceFitter> fitter;
    CovField truth(study.p, spec.grid);
    if (study.L) {
        PartialDesign design;
        design.L = *study.L;
        spec.partial = design;
        PartialSimulation sim = simulate_partial(spec);
        truth = std::move(sim.truth);
        fitter = std::make_unique<BinnedFitter>(linear_bin(sim.data, spec.grid),
                                                smoothing_for(study.n, *study.L, study.bandwidths));
    } else {
        FullSimulation sim = simulate_full(spec);
        truth = std::move(sim.truth);
        fitter = std::make_unique<DenseFitter>(std::move(sim.data));
    }
    const SupportMask true_support = nonzero_support(truth);

    const PreparedCV prepared(*fitter, study.cv_splits, derive_seed(rep_seed, 0xC5), 1);
    const CovarianceFit fit = fitter->fit_all(study.adaptive);

    ThresholdRep out;
    out.plain = score_plain(fit.sigma, truth);
    auto run = [&](Standardization standardization, std::vector<Outcome>& slot) {
        for (const ThresholdRule& rule : study.rules) {
            const ThresholdSpec ts{standardization, rule, NormKind::HilbertSchmidt, study.keep_diagonal};
            const auto grid = prepared.auto_grid(ts, 150);
            const double lambda = prepared.evaluate(ts, grid).lambda;
            slot.push_back(score(threshold_fit(fit, ts, lambda), truth, true_support, lambda));
        }
    };
    if (study.adaptive) {
        run(Standardization::Adaptive, out.adaptive);
    }
    if (study.universal) {
        run(Standardization::Universal, out.universal);
    }
    return out;
}

std::vector<ThresholdRep> run_threshold_study(const ThresholdStudy& study) {
    std::vector<ThresholdRep> reps(study.reps);
    parallel_for(study.threads, study.reps, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            reps[r] = run_threshold_rep(study, r);
        }
    });
    return reps;
}

SmootherRep run_smoother_rep(const SmootherStudy& study, std::size_t rep) {
    SimSpec spec = base_spec(SimModel::Banded, study.n, study.p, study.R, derive_seed(study.seed, rep));
    PartialDesign design;
    design.L = study.L;
    spec.partial = design;
    const PartialSimulation sim = simulate_partial(spec);
    const CovField& truth = sim.truth;
    SmoothingOptions options = smoothing_for(study.n, study.L, study.bandwidths);
    options.with_variance = false;

    auto timed = [&](auto&& make) {
        const auto start = Clock::now();
        CovField est = make();
        const double secs = seconds_since(start);
        return TimedOutcome{functional_frobenius(est, truth), functional_matrix_l1(est, truth), secs};
    };

    SmootherRep out;
    out.binlls = timed([&] { return binned_smooth_covariance(linear_bin(sim.data, spec.grid), options).sigma; });
    if (study.direct) {
        out.lls = timed([&] { return smooth_covariance(sim.data, spec.grid, options).sigma; });
    }
    if (study.presmooth) {
        const double hx = presmooth_bandwidth(study.L, study.bandwidths);
        out.binlls_p = timed([&] { return sample_cov(binned_presmooth_all(linear_bin(sim.data, spec.grid), hx)); });
        out.lls_p = timed([&] { return sample_cov(presmooth_curves(sim.data, hx, spec.grid)); });
    }
    const FullSimulation full = simulate_full(spec);
    out.sample = timed([&] { return sample_cov(full.data); });
    return out;
}

std::vector<SmootherRep> run_smoother_study(const SmootherStudy& study) {
    std::vector<SmootherRep> reps(study.reps);
    parallel_for(study.threads, study.reps, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            reps[r] = run_smoother_rep(study, r);
        }
    });
    return reps;
}

std::vector<double> default_fpr_grid() {
    std::vector<double> grid;
    for (int q = 1; q <= 30; ++q) {
        grid.push_back(0.01 * q);
    }
    return grid;
}

RocSummary run_roc_study(const RocStudy& study) {
    RocSummary out;
    out.fpr = study.fpr_grid.empty() ? default_fpr_grid() : study.fpr_grid;
    const std::size_t G = out.fpr.size();
    std::vector<std::vector<double>> adaptive(study.reps, std::vector<double>(G));
    std::vector<std::vector<double>> universal(study.reps, std::vector<double>(G));
    parallel_for(study.threads, study.reps, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            const FullSimulation sim =
                simulate_full(base_spec(study.model, study.n, study.p, study.R, derive_seed(study.seed, r)));
            const SupportMask truth = nonzero_support(sim.truth);
            const CovarianceFit fit = DenseFitter(sim.data).fit_all(true);
            for (int which = 0; which < 2; ++which) {
                const auto standardization = which == 0 ? Standardization::Adaptive : Standardization::Universal;
                const Eigen::MatrixXd norms = decision_norms(fit, standardization, NormKind::HilbertSchmidt);
                const auto levels = roc_levels(norms);
                const auto curve = roc_sweep(norms, truth, levels, study.keep_diagonal);
                auto& slot = which == 0 ? adaptive[r] : universal[r];
                for (std::size_t g = 0; g < G; ++g) {
                    slot[g] = tpr_at_fpr(curve, out.fpr[g]);
                }
            }
        }
    });
    out.adaptive_tpr.assign(G, 0.0);
    out.universal_tpr.assign(G, 0.0);
    for (std::size_t r = 0; r < study.reps; ++r) {
        for (std::size_t g = 0; g < G; ++g) {
            out.adaptive_tpr[g] += adaptive[r][g] / static_cast<double>(study.reps);
            out.universal_tpr[g] += universal[r][g] / static_cast<double>(study.reps);
        }
    }
    return out;
}

TableId parse_table(std::string_view text) {
    if (text == "T2" || text == "t2") {
        return TableId::T2;
    }
    if (text == "T3" || text == "t3") {
        return TableId::T3;
    }
    if (text == "T4" || text == "t4") {
        return TableId::T4;
    }
    if (text == "T5" || text == "t5") {
        return TableId::T5;
    }
    if (text == "T6" || text == "t6") {
        return TableId::T6;
    }
    throw ConfigError("unknown table '" + std::string(text) + "' (expected T2..T6)");
}

Scale parse_scale(std::string_view text) {
    if (text == "desk") {
        return Scale::Desk;
    }
    if (text == "full") {
        return Scale::Full;
    }
    throw ConfigError("unknown scale '" + std::string(text) + "' (expected desk or full)");
}

std::string_view table_name(TableId table) {
    switch (table) {
    case TableId::T2:
        return "T2";
    case TableId::T3:
        return "T3";
    case TableId::T4:
        return "T4";
    case TableId::T5:
        return "T5";
    case TableId::T6:
        return "T6";
    }
    return "?";
}

namespace {

struct Block {
    SimModel model;
    std::size_t p;
    std::optional<std::size_t> L;
    ThresholdStudy study;
    std::vector<ThresholdRep> reps;
};

void loss_rows(std::ostringstream& os, const Block& b, bool frobenius, bool with_plain) {
    auto pick = [frobenius](const Outcome& o) { return frobenius ? o.frobenius : o.matrix_l1; };
    os << fmt::format("  {}\n", frobenius ? "Functional Frobenius norm" : "Functional matrix l1 norm");
    for (std::size_t q = 0; q < b.study.rules.size(); ++q) {
        const auto a = field_summary(b.reps, [&](const ThresholdRep& r) { return pick(r.adaptive[q]); });
        const auto u = field_summary(b.reps, [&](const ThresholdRep& r) { return pick(r.universal[q]); });
        os << fmt::format("    {:<12} {:>12} {:>12}\n", rule_label(b.study.rules[q]), cell(a), cell(u));
    }
    if (with_plain) {
        const auto s = field_summary(b.reps, [&](const ThresholdRep& r) { return pick(r.plain); });
        os << fmt::format("    {:<12} {:>12}\n", "Sample", cell(s));
    }
}

void rate_rows(std::ostringstream& os, const Block& b) {
    for (std::size_t q = 0; q < b.study.rules.size(); ++q) {
        auto rates = [&](bool adaptive) {
            const auto t = field_summary(b.reps, [&](const ThresholdRep& r) {
                return (adaptive ? r.adaptive[q] : r.universal[q]).tpr;
            });
            const auto f = field_summary(b.reps, [&](const ThresholdRep& r) {
                return (adaptive ? r.adaptive[q] : r.universal[q]).fpr;
            });
            return fmt::format("{:.2f}/{:.2f}", t.mean, f.mean);
        };
        os << fmt::format("    {:<12} {:>12} {:>12}\n", rule_label(b.study.rules[q]), rates(true), rates(false));
    }
}

std::string block_title(const Block& b) {
    std::string title = fmt::format("Model {}, p = {}", b.model == SimModel::Model1 ? 1 : 2, b.p);
    if (b.L) {
        title += fmt::format(", L = {} (BinLLS)", *b.L);
    }
    return title + fmt::format(", {} reps", b.reps.size());
}

std::vector<Block> run_blocks(const ReproduceOptions& options, std::size_t reps, std::span<const std::size_t> ps,
                              std::span<const std::size_t> Ls, std::ostream* progress) {
    std::vector<Block> blocks;
    for (SimModel model : {SimModel::Model1, SimModel::Model2}) {
        for (std::size_t p : ps) {
            std::vector<std::optional<std::size_t>> designs;
            if (Ls.empty()) {
                designs.emplace_back();
            }
            for (std::size_t L : Ls) {
                designs.emplace_back(L);
            }
            for (const auto& L : designs) {
                Block b{model, p, L, {}, {}};
                b.study.model = model;
                b.study.p = p;
                b.study.L = L;
                b.study.reps = reps;
                b.study.seed = derive_seed(options.seed, (model == SimModel::Model1 ? 1000 : 2000) + p * 1000 +
                                                             L.value_or(0));
                b.study.threads = options.threads;
                b.study.bandwidths = options.bandwidths;
                const auto start = Clock::now();
                b.reps = run_threshold_study(b.study);
                if (progress) {
                    *progress << fmt::format("[reproduce] {} done in {:.1f} s\n", block_title(b), seconds_since(start));
                }
                blocks.push_back(std::move(b));
            }
        }
    }
    return blocks;
}

const Block* find_block(const std::vector<Block>& blocks, SimModel model, std::size_t p,
                        std::optional<std::size_t> L) {
    for (const auto& b : blocks) {
        if (b.model == model && b.p == p && b.L == L) {
            return &b;
        }
    }
    return nullptr;
}

}

ReproduceReport reproduce(const ReproduceOptions& options, std::ostream* progress) {
    const bool desk = options.scale == Scale::Desk;
    const std::size_t reps = options.reps ? options.reps : (desk ? 20 : 100);
    ReproduceReport report;
    std::ostringstream os;
    os << fmt::format("Table {} ({} scale, {} reps, seed {})\n", table_name(options.table), desk ? "desk" : "full",
                      reps, options.seed);

    if (options.table == TableId::T2 || options.table == TableId::T3 || options.table == TableId::T5 ||
        options.table == TableId::T6) {
        const bool partial = options.table == TableId::T5 || options.table == TableId::T6;
        const bool losses = options.table == TableId::T2 || options.table == TableId::T5;
        std::vector<std::size_t> ps = partial || desk ? std::vector<std::size_t>{50}
                                                      : std::vector<std::size_t>{50, 100, 150};
        std::vector<std::size_t> Ls;
        if (partial) {
            Ls = desk ? std::vector<std::size_t>{11, 21, 51} : std::vector<std::size_t>{11, 21, 51, 101};
        }
        const auto blocks = run_blocks(options, reps, ps, Ls, progress);
        for (const auto& b : blocks) {
            os << block_title(b) << "\n";
            os << fmt::format("    {:<12} {:>12} {:>12}\n", "Method", "Adaptive", "Universal");
            if (losses) {
                loss_rows(os, b, true, !partial);
                loss_rows(os, b, false, !partial);
            } else {
                os << "  TPR/FPR\n";
                rate_rows(os, b);
            }
        }

        if (options.table == TableId::T2) {
            const Block* b = find_block(blocks, SimModel::Model1, 50, std::nullopt);
            const std::size_t hard = rule_index(b->study, RuleKind::Hard);
            const std::size_t soft = rule_index(b->study, RuleKind::Soft);
            const auto h = field_summary(b->reps, [&](const ThresholdRep& r) { return r.adaptive[hard].frobenius; });
            const auto s = field_summary(b->reps, [&](const ThresholdRep& r) { return r.adaptive[soft].frobenius; });
            report.checks.push_back(range_check("Model 1 adaptive hard Frobenius", h.mean, 5.0, 6.9));
            report.checks.push_back(range_check("Model 1 adaptive soft Frobenius", s.mean, 5.6, 7.0));
            std::size_t wins = 0;
            for (const auto& r : b->reps) {
                wins += r.universal[soft].frobenius > r.adaptive[soft].frobenius ? 1 : 0;
            }
            report.checks.push_back(Check{"universal soft loss exceeds adaptive soft in every rep",
                                          wins == b->reps.size(),
                                          fmt::format("{}/{} reps", wins, b->reps.size())});
        } else if (options.table == TableId::T3) {
            const Block* b = find_block(blocks, SimModel::Model2, 50, std::nullopt);
            const std::size_t soft = rule_index(b->study, RuleKind::Soft);
            const auto t = field_summary(b->reps, [&](const ThresholdRep& r) { return r.adaptive[soft].tpr; });
            const auto f = field_summary(b->reps, [&](const ThresholdRep& r) { return r.adaptive[soft].fpr; });
            const auto u = field_summary(b->reps, [&](const ThresholdRep& r) { return r.universal[soft].tpr; });
            report.checks.push_back(range_check("Model 2 adaptive soft TPR", t.mean, 0.95, 1.0));
            report.checks.push_back(range_check("Model 2 adaptive soft FPR", f.mean, 0.0, 0.12));
            report.checks.push_back(range_check("Model 2 universal soft TPR", u.mean, 0.0, 0.65));
        } else if (options.table == TableId::T5) {
            for (const auto& b : blocks) {
                std::size_t better = 0;
                for (std::size_t q = 0; q < b.study.rules.size(); ++q) {
                    const auto a = field_summary(b.reps, [&](const ThresholdRep& r) { return r.adaptive[q].frobenius; });
                    const auto u =
                        field_summary(b.reps, [&](const ThresholdRep& r) { return r.universal[q].frobenius; });
                    better += a.mean < u.mean ? 1 : 0;
                }
                report.checks.push_back(Check{block_title(b) + ": adaptive Frobenius below universal for every rule",
                                              better == b.study.rules.size(),
                                              fmt::format("{}/{} rules", better, b.study.rules.size())});
            }
        } else {
            const Block* b = find_block(blocks, SimModel::Model2, 50, std::size_t{51});
            const std::size_t soft = rule_index(b->study, RuleKind::Soft);
            const auto t = field_summary(b->reps, [&](const ThresholdRep& r) { return r.adaptive[soft].tpr; });
            const auto f = field_summary(b->reps, [&](const ThresholdRep& r) { return r.adaptive[soft].fpr; });
            report.checks.push_back(range_check("Model 2, L = 51 adaptive soft TPR", t.mean, 0.95, 1.0));
            report.checks.push_back(range_check("Model 2, L = 51 adaptive soft FPR", f.mean, 0.0, 0.12));
        }
    } else {
        const std::vector<std::size_t> Ls = desk ? std::vector<std::size_t>{11, 21, 51}
                                                 : std::vector<std::size_t>{11, 21, 51, 101};
        os << fmt::format("    {:<4} {:<9} {:>11} {:>11} {:>9}   {:<9} {:>11} {:>11} {:>9}\n", "L", "Method", "Frobenius",
                          "matrix l1", "time (s)", "Method", "Frobenius", "matrix l1", "time (s)");
        std::vector<SmootherRep> sample_pool;
        for (std::size_t L : Ls) {
            SmootherStudy study;
            study.L = L;
            study.reps = reps;
            study.seed = derive_seed(options.seed, 4000 + L);
            study.direct = L <= 51;
            study.threads = options.threads;
            study.bandwidths = options.bandwidths;
            const auto start = Clock::now();
            const auto results = run_smoother_study(study);
            if (progress) {
                *progress << fmt::format("[reproduce] p = 6, L = {} done in {:.1f} s\n", L, seconds_since(start));
            }
            auto stat = [&](auto get) {
                const auto f = field_summary(results, [&](const SmootherRep& r) { return get(r).frobenius; });
                const auto m = field_summary(results, [&](const SmootherRep& r) { return get(r).matrix_l1; });
                const auto t = field_summary(results, [&](const SmootherRep& r) { return get(r).seconds; });
                return std::array<std::string, 3>{cell(f), cell(m), fmt::format("{:.3f}", t.mean)};
            };
            const auto bin = stat([](const SmootherRep& r) { return r.binlls; });
            const auto binp = stat([](const SmootherRep& r) { return *r.binlls_p; });
            const auto llsp = stat([](const SmootherRep& r) { return *r.lls_p; });
            os << fmt::format("    {:<4} {:<9} {:>11} {:>11} {:>9}   {:<9} {:>11} {:>11} {:>9}\n", L, "BinLLS", bin[0],
                              bin[1], bin[2], "BinLLS-P", binp[0], binp[1], binp[2]);
            if (study.direct) {
                const auto lls = stat([](const SmootherRep& r) { return *r.lls; });
                os << fmt::format("    {:<4} {:<9} {:>11} {:>11} {:>9}   {:<9} {:>11} {:>11} {:>9}\n", "", "LLS",
                                  lls[0], lls[1], lls[2], "LLS-P", llsp[0], llsp[1], llsp[2]);
            } else {
                os << fmt::format("    {:<4} {:<9} {:>11} {:>11} {:>9}   {:<9} {:>11} {:>11} {:>9}\n", "", "LLS", "-",
                                  "-", "-", "LLS-P", llsp[0], llsp[1], llsp[2]);
            }
            if (L == 11) {
                const auto b = field_summary(results, [](const SmootherRep& r) { return r.binlls.frobenius; });
                const auto d = field_summary(results, [](const SmootherRep& r) { return r.lls->frobenius; });
                const auto bp = field_summary(results, [](const SmootherRep& r) { return r.binlls_p->frobenius; });
                const auto dp = field_summary(results, [](const SmootherRep& r) { return r.lls_p->frobenius; });
                report.checks.push_back(range_check("L = 11 BinLLS Frobenius", b.mean, 1.3, 1.9));
                report.checks.push_back(range_check("L = 11 |BinLLS - LLS| Frobenius gap", std::abs(b.mean - d.mean),
                                                    0.0, 0.15));
                report.checks.push_back(Check{"L = 11 BinLLS-P at least twice BinLLS", bp.mean >= 2.0 * b.mean,
                                              fmt::format("{:.3f} vs 2 x {:.3f}", bp.mean, b.mean)});
                report.checks.push_back(Check{"L = 11 BinLLS below LLS-P", b.mean < dp.mean,
                                              fmt::format("{:.3f} vs {:.3f}", b.mean, dp.mean)});
            }
            sample_pool.insert(sample_pool.end(), results.begin(), results.end());
        }
        const auto f = field_summary(sample_pool, [](const SmootherRep& r) { return r.sample.frobenius; });
        const auto m = field_summary(sample_pool, [](const SmootherRep& r) { return r.sample.matrix_l1; });
        const auto t = field_summary(sample_pool, [](const SmootherRep& r) { return r.sample.seconds; });
        os << fmt::format("    Sample covariance (full curves): Frobenius {}  matrix l1 {}  time {:.3f} s\n", cell(f),
                          cell(m), t.mean);
    }

    os << "Checks\n";
    for (const auto& c : report.checks) {
        os << fmt::format("  [{}] {}: {}\n", c.passed ? "PASS" : "FAIL", c.name, c.detail);
    }
    report.text = os.str();
    return report;
}

}
